"""Event-driven MPTCP transfer engine.

One Simulation owns a kernel, per-path forward/reverse links, the sender's
subflows and connection state, and the receiver's reassembly state. ACKs
are data-level cumulative and return on the subflow the data arrived on,
which is what makes duplicate ACKs attributable to a path: segments taking
the longer path make the other path's arrivals look like losses, and the
sender reacts with (spurious) fast retransmits unless a detector undoes it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from . import spurious as sp
from .config import ScenarioConfig
from .connection import (CHECKSUM_MODULUS, ConnectionState, ReassemblyState,
                         range_weight, schedule_next, stream_weight,
                         transfer_complete)
from .coupling import CouplingView, on_ack_increase, on_loss_decrease
from .netmodel import Link
from .simkernel import (EventKind, NS_PER_S, RandomStream, SimKernel,
                        seconds_to_ns)
from .spurious import DetectorChoice
from .subflow import ACK_SIZE_BYTES, Phase, Segment, Subflow


class TraceEvent(Enum):
    SAMPLE = "Sample"
    FAST_RETRANSMIT = "FastRetransmit"
    RTO = "Rto"
    SPURIOUS_DETECTED = "SpuriousDetected"
    RESTORE = "Restore"


class TraceRecord:
    __slots__ = ("time_s", "subflow", "cwnd", "ssthresh", "phase", "event")

    def __init__(self, time_s, subflow, cwnd, ssthresh, phase, event):
        self.time_s = time_s
        self.subflow = subflow  # 1-based
        self.cwnd = cwnd
        self.ssthresh = ssthresh
        self.phase = phase      # Phase value string
        self.event = event      # TraceEvent value string

    def astuple(self):
        return (self.time_s, self.subflow, self.cwnd, self.ssthresh,
                self.phase, self.event)


@dataclass
class Detection:
    """One spurious-retransmission verdict, with what was restored."""
    time_s: float
    subflow: int              # 1-based
    detector: DetectorChoice
    cwnd_before: float        # snapshot (pre-retransmit) window
    ssthresh_before: float
    cwnd_at_detection: float  # window the subflow had when the verdict came
    restored_ssthresh: float
    srtt: float


@dataclass
class SummaryStats:
    completed: bool
    completion_time_s: Optional[float]
    goodput_bps: float
    delivered_bytes: int
    bytes_sf: Tuple[int, ...]        # payload bytes arrived per subflow
    retx_sf: Tuple[int, ...]
    fast_retx: int
    rtos: int
    spurious_detections: int
    checksum_ok: bool
    duplicate_bytes: int
    protocol_violations: int


@dataclass
class RunResult:
    cfg: ScenarioConfig
    stats: SummaryStats
    traces: List[TraceRecord]
    sends: List[Tuple[int, int]]                  # (ns, subflow 1-based)
    arrivals: List[Tuple[int, int, int, int]]     # (ns, sf, bytes, new_bytes)
    detections: List[Detection]
    srtts: List[Tuple[float, int, float]]         # (time_s, sf, smoothed rtt)


class Simulation:
    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        self.kernel = SimKernel()
        self.rng = RandomStream(cfg.seed)
        self.mss = cfg.mss
        self.detector = cfg.detector
        self.coupling_mode = cfg.coupling
        self.links_fwd = [Link(lc) for lc in cfg.links]
        rev_cfgs = [lc if cfg.ack_loss else _lossless(lc) for lc in cfg.links]
        self.links_rev = [Link(lc) for lc in rev_cfgs]
        self.subflows = [
            Subflow(i, mss=cfg.mss, initial_cwnd=cfg.initial_cwnd,
                    initial_ssthresh=cfg.initial_ssthresh,
                    rto_floor=cfg.rto_floor, rto_ceiling=cfg.rto_ceiling,
                    initial_rto=cfg.initial_rto, initial_rtt=cfg.initial_rtt)
            for i in range(len(cfg.links))
        ]
        self.conn = ConnectionState(cfg.transfer_size, cfg.mss,
                                    len(cfg.links))
        self.recv = ReassemblyState()
        self._ts_recent = 0
        self.rx_checksum = 0
        self.completed_ns: Optional[int] = None
        self.duplicate_bytes = 0
        self.protocol_violations = 0
        self.traces: List[TraceRecord] = []
        self.sends: List[Tuple[int, int]] = []
        self.arrivals: List[Tuple[int, int, int, int]] = []
        self.detections: List[Detection] = []
        self.srtts: List[Tuple[float, int, float]] = []
        self._stop_ns = seconds_to_ns(cfg.stop_time)
        self._trace_ns = seconds_to_ns(cfg.trace_interval)

    # ------------------------------------------------------------ helpers

    def _view(self) -> CouplingView:
        return CouplingView(tuple(sf.cwnd for sf in self.subflows),
                            tuple(sf.rtt_for_coupling for sf in self.subflows))

    def _trace(self, sf: Subflow, event: TraceEvent) -> None:
        self.traces.append(TraceRecord(
            self.kernel.now / NS_PER_S, sf.index + 1, sf.cwnd, sf.ssthresh,
            sf.phase.value, event.value))

    def _arm_rto(self, sf: Subflow) -> None:
        if sf.rto_handle is not None:
            self.kernel.cancel(sf.rto_handle)
        deadline = self.kernel.now + seconds_to_ns(sf.estimator.rto)
        sf.rto_handle = self.kernel.schedule(
            deadline, EventKind.RTO_EXPIRY, lambda sf=sf: self._on_rto(sf))

    def _disarm_rto(self, sf: Subflow) -> None:
        if sf.rto_handle is not None:
            self.kernel.cancel(sf.rto_handle)
            sf.rto_handle = None

    # --------------------------------------------------------- send side

    def _pump(self) -> None:
        """Send new data while any subflow has window space."""
        if self.completed_ns is not None:
            return
        while True:
            pick = schedule_next(self.conn, self.subflows)
            if pick is None:
                return
            sf, m = pick
            self._send_mapping(sf, m, retransmission=False)

    def _send_mapping(self, sf: Subflow, m, retransmission: bool) -> None:
        now = self.kernel.now
        m.sent_ns = now
        if retransmission:
            m.retransmitted = True
            sf.retransmissions += 1
        sf.segments_sent += 1
        self.sends.append((now, sf.index + 1))
        seg = Segment(sf.index, data_seq=m.data_start, subflow_seq=m.sf_start,
                      size_bytes=m.data_end - m.data_start, ts_val=now,
                      is_retransmission=retransmission)
        out = self.links_fwd[sf.index].transmit(seg.size_bytes, now, self.rng)
        if isinstance(out, int):
            self.kernel.schedule(out, EventKind.SEGMENT_DELIVERY,
                                 lambda seg=seg: self._on_data(seg))
        if sf.rto_handle is None:
            self._arm_rto(sf)

    # ------------------------------------------------------ receiver side

    def _on_data(self, seg: Segment) -> None:
        now = self.kernel.now
        # Timestamp echo follows the left-edge rule: remember the timestamp
        # of the segment that covers the next expected byte, so ACKs sent
        # after a reordering hole fills echo the filler's send time rather
        # than whichever segment happened to elicit them.
        if seg.data_seq <= self.recv.rcv_data_next:
            self._ts_recent = seg.ts_val
        data_ack, delivered, dup = self.recv.on_data(
            seg.data_seq, seg.data_seq + seg.size_bytes)
        new_bytes = delivered[1] - delivered[0] if delivered else 0
        self.arrivals.append((now, seg.subflow_id + 1, seg.size_bytes,
                              new_bytes))
        if dup:
            self.duplicate_bytes += dup[1] - dup[0]
        if delivered:
            self.rx_checksum = (self.rx_checksum
                                + range_weight(*delivered)) % CHECKSUM_MODULUS
        dsack = dup if (self.detector is DetectorChoice.DSACK and dup) else None
        ack = Segment(seg.subflow_id, size_bytes=ACK_SIZE_BYTES, ts_val=now,
                      ts_echo=self._ts_recent, data_ack=data_ack,
                      sack_blocks=self.recv.sack_blocks(), dsack_block=dsack)
        out = self.links_rev[seg.subflow_id].transmit(ACK_SIZE_BYTES, now,
                                                      self.rng)
        if isinstance(out, int):
            self.kernel.schedule(out, EventKind.SEGMENT_DELIVERY,
                                 lambda ack=ack: self._on_ack(ack))

    # --------------------------------------------------------- ACK intake

    def _on_ack(self, ack: Segment) -> None:
        conn = self.conn
        if ack.data_ack > conn.data_snd_nxt:
            self.protocol_violations += 1
            return
        if ack.data_ack > conn.data_una:
            self._on_advancing_ack(ack)
        elif ack.data_ack == conn.data_una and conn.data_snd_nxt > conn.data_una:
            self._on_duplicate_ack(ack)
        # acks below the cumulative point are stale reordered acks: ignored

    def _on_advancing_ack(self, ack: Segment) -> None:
        now = self.kernel.now
        conn = self.conn
        conn.data_una = ack.data_ack
        for sf in self.subflows:
            acked, samples = sf.ack_update(conn.data_una, now)
            # Samples measure send-to-cumulative-ack latency per mapping, so
            # the RTO tracks how long an ACK actually takes to come back when
            # cumulative progress is gated by the other path, not the raw
            # path round trip.
            for sample in samples:
                sf.estimator.update(sample)
            if sf.phase is Phase.FAST_RECOVERY:
                if conn.data_una >= sf.recover_point:
                    sf.cwnd = max(sf.ssthresh, 1.0)
                    sf.phase = Phase.CONGESTION_AVOIDANCE
            elif acked:
                self._grow(sf, acked)
            if (acked and self.cfg.partial_ack_retransmit and sf.mappings
                    and conn.data_una < sf.recover_point
                    and sf.mappings[0].data_start <= conn.data_una):
                # NewReno partial ack: this subflow owns the next hole, so
                # resend it now instead of waiting out another timeout
                m = sf.mappings[0]
                sp.on_retransmit_record(sf, m.data_start, m.data_end, now)
                self._send_mapping(sf, m, retransmission=True)
            if acked:
                if sf.flight > 0:
                    self._arm_rto(sf)
                else:
                    self._disarm_rto(sf)
        if self.detector is DetectorChoice.DSACK and ack.dsack_block:
            self._dsack_check(self.subflows[ack.subflow_id], ack)
        if self.detector is DetectorChoice.EIFEL:
            for sf in self.subflows:
                snap = sf.saved
                if snap is not None and not snap.consumed \
                        and conn.data_una >= snap.range_end:
                    if sp.eifel_check(snap, ack):
                        self._detected(sf, snap)
                        sp.eifel_respond(sf, snap)
                        self._trace(sf, TraceEvent.RESTORE)
        if transfer_complete(conn):
            self.completed_ns = now
            self.kernel.stop()
            return
        self._pump()

    def _on_duplicate_ack(self, ack: Segment) -> None:
        sf = self.subflows[ack.subflow_id]
        sf.dup_ack_count += 1
        if self.detector is DetectorChoice.DSACK and ack.dsack_block:
            self._dsack_check(sf, ack)
        if sf.phase is Phase.FAST_RECOVERY:
            sf.cwnd += 1.0  # classic window inflation per extra duplicate
        elif (sf.dup_ack_count >= 3 and sf.mappings
                and self.conn.data_una >= sf.recover_point):
            self._fast_retransmit(sf)
        self._pump()

    # ------------------------------------------------------ loss recovery

    def _fast_retransmit(self, sf: Subflow) -> None:
        now = self.kernel.now
        m = sf.mappings[0]
        sp.on_retransmit_record(sf, m.data_start, m.data_end, now)
        sf.fast_retransmits += 1
        self._trace(sf, TraceEvent.FAST_RETRANSMIT)
        w, ss = on_loss_decrease(self.coupling_mode, sf.index, self._view())
        sf.ssthresh = ss
        sf.cwnd = w
        sf.phase = Phase.FAST_RECOVERY
        sf.recover_point = self.conn.data_snd_nxt
        self._send_mapping(sf, m, retransmission=True)
        self._arm_rto(sf)

    def _on_rto(self, sf: Subflow) -> None:
        sf.rto_handle = None
        if sf.flight == 0 or not sf.mappings:
            return
        now = self.kernel.now
        m = sf.mappings[0]
        sp.on_retransmit_record(sf, m.data_start, m.data_end, now)
        sf.rtos += 1
        self._trace(sf, TraceEvent.RTO)
        sf.ssthresh = max(sf.flight / self.mss / 2.0, 2.0)
        sf.cwnd = 1.0
        sf.phase = Phase.SLOW_START
        sf.dup_ack_count = 0
        sf.recover_point = self.conn.data_snd_nxt
        sf.estimator.backoff()
        self._send_mapping(sf, m, retransmission=True)
        self._arm_rto(sf)
        self._pump()

    # ---------------------------------------------------------- detectors

    def _dsack_check(self, sf: Subflow, ack: Segment) -> None:
        snap = sf.saved
        if sp.dsack_sender_check(snap, ack):
            self._detected(sf, snap)
            sp.dsack_respond(sf, snap)
            self._trace(sf, TraceEvent.RESTORE)

    def _detected(self, sf: Subflow, snap) -> None:
        # the timer that caused (or would repeat) the spurious retransmission
        # is too tight for the actual ACK latency: restart it conservatively
        est = sf.estimator
        est.rto = min(max(est.rto * 2.0, self.cfg.initial_rto), est.ceiling)
        if sf.flight > 0:
            self._arm_rto(sf)
        self._trace(sf, TraceEvent.SPURIOUS_DETECTED)
        self.detections.append(Detection(
            time_s=self.kernel.now / NS_PER_S, subflow=sf.index + 1,
            detector=self.detector, cwnd_before=snap.cwnd_before,
            ssthresh_before=snap.ssthresh_before, cwnd_at_detection=sf.cwnd,
            restored_ssthresh=snap.ssthresh_before,
            srtt=sf.estimator.srtt if sf.estimator.initialized
            else sf.initial_rtt))

    # ------------------------------------------------------ window growth

    def _grow(self, sf: Subflow, acked_bytes: int) -> None:
        acked_mss = acked_bytes / self.mss
        if sf.phase is Phase.SLOW_START:
            if sf.cwnd < sf.ssthresh:
                sf.cwnd = min(sf.cwnd + acked_mss, sf.ssthresh)
            if sf.cwnd >= sf.ssthresh:
                sf.phase = Phase.CONGESTION_AVOIDANCE
            return
        inc = on_ack_increase(self.coupling_mode, sf.index, self._view())
        sf.cwnd += inc * acked_mss

    # -------------------------------------------------------------- driver

    def _on_trace_sample(self) -> None:
        now_s = self.kernel.now / NS_PER_S
        for sf in self.subflows:
            self._trace(sf, TraceEvent.SAMPLE)
            self.srtts.append((now_s, sf.index + 1, sf.rtt_for_coupling))
        nxt = self.kernel.now + self._trace_ns
        if nxt <= self._stop_ns:
            self.kernel.schedule(nxt, EventKind.TRACE_SAMPLE,
                                 self._on_trace_sample)

    def run(self) -> RunResult:
        if self.cfg.transfer_size == 0:
            self.completed_ns = 0
            return self._result()
        self.kernel.schedule(0, EventKind.TRACE_SAMPLE, self._on_trace_sample)
        self.kernel.schedule(self._stop_ns, EventKind.TRANSFER_DEADLINE,
                             self.kernel.stop)
        self._pump()
        self.kernel.run_until_idle(self._stop_ns)
        return self._result()

    def _result(self) -> RunResult:
        cfg = self.cfg
        n = len(self.subflows)
        bytes_sf = [0] * n
        for _, sf1, size, _ in self.arrivals:
            bytes_sf[sf1 - 1] += size
        completed = self.completed_ns is not None
        if completed and cfg.transfer_size > 0:
            t = self.completed_ns / NS_PER_S
            goodput = cfg.transfer_size * 8.0 / t
        elif completed:
            t, goodput = 0.0, 0.0
        else:
            t, goodput = None, self.conn.data_una * 8.0 / cfg.stop_time
        checksum_ok = (completed
                       and self.recv.rcv_data_next == cfg.transfer_size
                       and self.rx_checksum == stream_weight(cfg.transfer_size))
        if cfg.transfer_size == 0:
            checksum_ok = True
        stats = SummaryStats(
            completed=completed, completion_time_s=t, goodput_bps=goodput,
            delivered_bytes=self.conn.data_una, bytes_sf=tuple(bytes_sf),
            retx_sf=tuple(sf.retransmissions for sf in self.subflows),
            fast_retx=sum(sf.fast_retransmits for sf in self.subflows),
            rtos=sum(sf.rtos for sf in self.subflows),
            spurious_detections=sum(sf.spurious_detections
                                    for sf in self.subflows),
            checksum_ok=checksum_ok, duplicate_bytes=self.duplicate_bytes,
            protocol_violations=self.protocol_violations)
        return RunResult(cfg=cfg, stats=stats, traces=self.traces,
                         sends=self.sends, arrivals=self.arrivals,
                         srtts=self.srtts,
                         detections=self.detections)


def _lossless(link_cfg):
    from dataclasses import replace
    return replace(link_cfg, loss_rate=0.0)
