"""Scenario execution, parameter sweeps and CSV/SVG emission."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Sequence, Tuple

from .config import ScenarioConfig, ScenarioError, load_scenario  # noqa: F401
from .simkernel import mix_seed
from .simulation import RunResult, Simulation, SummaryStats, TraceRecord

TRACE_CSV_COLUMNS = ("time_s", "subflow", "cwnd_mss", "ssthresh_mss",
                     "phase", "event")
SWEEP_CSV_COLUMNS = ("param_value", "completion_time_s", "goodput_bps",
                     "bytes_sf1", "bytes_sf2", "retx_sf1", "retx_sf2",
                     "fast_retx", "rtos", "spurious_detections")


class SweepParameter(Enum):
    CAPACITY = "capacity"    # values in Mbps
    LATENCY = "latency"      # values in ms
    LOSS_RATE = "loss"       # values as probabilities


@dataclass
class SweepSpec:
    parameter: SweepParameter
    link_index: int          # 0-based index into cfg.links
    values: Sequence[float]

    def validate(self, cfg: ScenarioConfig) -> None:
        if not self.values:
            raise ScenarioError("sweep values: must be non-empty")
        if not 0 <= self.link_index < len(cfg.links):
            raise ScenarioError("sweep link: index %d out of range (scenario "
                                "has %d links)"
                                % (self.link_index + 1, len(cfg.links)))


@dataclass
class SweepRow:
    param_value: float
    stats: SummaryStats


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    """Run one simulation to transfer completion or stop_time."""
    return Simulation(cfg.copy()).run()


def apply_sweep_point(cfg: ScenarioConfig, sweep: SweepSpec,
                      value: float) -> ScenarioConfig:
    point = cfg.copy()
    link = point.links[sweep.link_index]
    if sweep.parameter is SweepParameter.CAPACITY:
        link.capacity_bps = value * 1e6
    elif sweep.parameter is SweepParameter.LATENCY:
        link.one_way_delay_s = value / 1e3
    else:
        link.loss_rate = value
    return point


def run_sweep(base: ScenarioConfig, sweep: SweepSpec) -> List[SweepRow]:
    """One run per sweep value; point i uses seed mix_seed(base.seed, i)."""
    sweep.validate(base)
    rows = []
    for i, value in enumerate(sweep.values):
        point = apply_sweep_point(base, sweep, value)
        point.seed = mix_seed(base.seed, i)
        try:
            point.validate()
            result = run_scenario(point)
        except ScenarioError as exc:
            rows.append(SweepRow(param_value=value,
                                 stats=_error_stats(str(exc))))
            continue
        rows.append(SweepRow(param_value=value, stats=result.stats))
    return rows


def _error_stats(message: str) -> SummaryStats:
    stats = SummaryStats(completed=False, completion_time_s=None,
                         goodput_bps=0.0, delivered_bytes=0, bytes_sf=(),
                         retx_sf=(), fast_retx=0, rtos=0,
                         spurious_detections=0, checksum_ok=False,
                         duplicate_bytes=0, protocol_violations=0)
    stats.error = message
    return stats


def fmt(value) -> str:
    """Fixed-precision rendering (6 significant digits) for stable diffs."""
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".6g")
    return str(value)


def trace_csv_lines(records: Sequence[TraceRecord]) -> List[str]:
    lines = [",".join(TRACE_CSV_COLUMNS)]
    for r in records:
        lines.append(",".join((fmt(r.time_s), str(r.subflow), fmt(r.cwnd),
                               fmt(r.ssthresh), r.phase, r.event)))
    return lines


def sweep_csv_lines(rows: Sequence[SweepRow]) -> List[str]:
    lines = [",".join(SWEEP_CSV_COLUMNS)]
    for row in rows:
        s = row.stats
        bytes_sf = tuple(s.bytes_sf) + (0,) * (2 - len(s.bytes_sf))
        retx_sf = tuple(s.retx_sf) + (0,) * (2 - len(s.retx_sf))
        lines.append(",".join((
            fmt(row.param_value), fmt(s.completion_time_s),
            fmt(s.goodput_bps), str(bytes_sf[0]), str(bytes_sf[1]),
            str(retx_sf[0]), str(retx_sf[1]), str(s.fast_retx), str(s.rtos),
            str(s.spurious_detections))))
    return lines


def emit_csv(data, path) -> None:
    """Write trace records or sweep rows as CSV (dispatch on content)."""
    data = list(data)
    if data and isinstance(data[0], SweepRow):
        lines = sweep_csv_lines(data)
    else:
        lines = trace_csv_lines(data)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError("cannot write CSV %s: %s" % (path, exc)) from exc


def parse_trace_csv(path) -> List[TraceRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != ",".join(TRACE_CSV_COLUMNS):
            raise ScenarioError("%s: not a trace CSV (header %r)"
                                % (path, header))
        for line in fh:
            line = line.strip()
            if not line:
                continue
            t, sf, cwnd, ssthresh, phase, event = line.split(",")
            records.append(TraceRecord(float(t), int(sf), float(cwnd),
                                       float(ssthresh), phase, event))
    return records


# ------------------------------------------------------------------ plotting

_SF_COLORS = ("#1f6fb4", "#e07b00", "#2a9d5c", "#a34fb0")
_W, _H = 860, 520
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _ticks(lo: float, hi: float, n: int = 6) -> List[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1, 2, 5, 10):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + step * 1e-9:
        out.append(round(v, 10))
        v += step
    return out


def emit_plot(records: Sequence[TraceRecord], path) -> None:
    """Self-contained SVG: cwnd vs time, one polyline per subflow, with
    markers at FastRetransmit and SpuriousDetected events."""
    records = list(records)
    if not records:
        raise ValueError("emit_plot requires at least one trace record")
    t_lo = min(r.time_s for r in records)
    t_hi = max(r.time_s for r in records)
    c_lo = 0.0
    c_hi = max(r.cwnd for r in records)
    if t_hi <= t_lo:
        t_hi = t_lo + 1.0
    if c_hi <= c_lo:
        c_hi = c_lo + 1.0

    def x(t):
        return _ML + (t - t_lo) / (t_hi - t_lo) * (_W - _ML - _MR)

    def y(c):
        return _H - _MB - (c - c_lo) / (c_hi - c_lo) * (_H - _MT - _MB)

    subflows = sorted({r.subflow for r in records})
    parts = [
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (_W, _H, _W, _H),
        '<rect width="%d" height="%d" fill="white"/>' % (_W, _H),
    ]
    # axes
    parts.append('<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="black"/>'
                 % (_ML, _H - _MB, _W - _MR, _H - _MB))
    parts.append('<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="black"/>'
                 % (_ML, _MT, _ML, _H - _MB))
    for tv in _ticks(t_lo, t_hi):
        parts.append('<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="black"/>'
                     % (x(tv), _H - _MB, x(tv), _H - _MB + 5))
        parts.append('<text x="%g" y="%g" font-size="11" '
                     'text-anchor="middle">%g</text>'
                     % (x(tv), _H - _MB + 18, tv))
    for cv in _ticks(c_lo, c_hi):
        parts.append('<line x1="%g" y1="%g" x2="%g" y2="%g" stroke="black"/>'
                     % (_ML - 5, y(cv), _ML, y(cv)))
        parts.append('<text x="%g" y="%g" font-size="11" '
                     'text-anchor="end">%g</text>'
                     % (_ML - 8, y(cv) + 4, cv))
    parts.append('<text x="%g" y="%g" font-size="12" text-anchor="middle">'
                 'time [s]</text>' % ((_ML + _W - _MR) / 2, _H - 12))
    parts.append('<text x="16" y="%g" font-size="12" text-anchor="middle" '
                 'transform="rotate(-90 16 %g)">cwnd [MSS]</text>'
                 % ((_MT + _H - _MB) / 2, (_MT + _H - _MB) / 2))
    # one polyline per subflow
    for k, sf in enumerate(subflows):
        color = _SF_COLORS[k % len(_SF_COLORS)]
        pts = ["%g,%g" % (x(r.time_s), y(r.cwnd))
               for r in records if r.subflow == sf]
        if len(pts) == 1:
            cx, cy = pts[0].split(",")
            parts.append('<circle cx="%s" cy="%s" r="3" fill="%s"/>'
                         % (cx, cy, color))
        else:
            parts.append('<polyline points="%s" fill="none" stroke="%s" '
                         'stroke-width="1.3"/>' % (" ".join(pts), color))
        parts.append('<text x="%g" y="%g" font-size="12" fill="%s">'
                     'subflow %d</text>'
                     % (_W - _MR - 90, _MT + 16 * (k + 1), color, sf))
    # event markers
    for r in records:
        if r.event == "FastRetransmit":
            px, py = x(r.time_s), y(r.cwnd)
            parts.append('<path d="M %g %g l 4 8 l -8 0 z" fill="#c22"/>'
                         % (px, py - 5))
        elif r.event == "SpuriousDetected":
            parts.append('<circle cx="%g" cy="%g" r="4" fill="none" '
                         'stroke="#7a2aa0" stroke-width="1.5"/>'
                         % (x(r.time_s), y(r.cwnd)))
    parts.append("</svg>")
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(parts) + "\n")
    except OSError as exc:
        raise OSError("cannot write plot %s: %s" % (path, exc)) from exc
