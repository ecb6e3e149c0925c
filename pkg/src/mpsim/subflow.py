"""Per-path TCP sender state: sequence tracking, congestion window,
RTT/RTO estimation and recovery bookkeeping.

The subflow owns its own sequence space and window; duplicate-ACK counting
and the recovery decisions are driven by the connection engine, which sees
data-level ACKs, and land here as state updates.
"""

from __future__ import annotations

from collections import deque
from enum import Enum

from .simkernel import NS_PER_S

DEFAULT_MSS = 1400
DEFAULT_RTO_FLOOR_S = 0.2
DEFAULT_RTO_CEILING_S = 60.0
DEFAULT_INITIAL_RTO_S = 1.0
DEFAULT_INITIAL_SSTHRESH_MSS = 64.0
DEFAULT_INITIAL_CWND_MSS = 2.0
DEFAULT_INITIAL_RTT_S = 0.1
ACK_SIZE_BYTES = 40


class Phase(Enum):
    SLOW_START = "slow_start"
    CONGESTION_AVOIDANCE = "congestion_avoidance"
    FAST_RECOVERY = "fast_recovery"


class Segment:
    """Abstract simulated segment; doubles as data segment and ACK."""

    __slots__ = (
        "subflow_id", "data_seq", "subflow_seq", "size_bytes",
        "ts_val", "ts_echo", "data_ack", "sack_blocks", "dsack_block",
        "is_retransmission",
    )

    def __init__(self, subflow_id, data_seq=0, subflow_seq=0, size_bytes=0,
                 ts_val=0, ts_echo=None, data_ack=None, sack_blocks=(),
                 dsack_block=None, is_retransmission=False):
        self.subflow_id = subflow_id
        self.data_seq = data_seq
        self.subflow_seq = subflow_seq
        self.size_bytes = size_bytes
        self.ts_val = ts_val
        self.ts_echo = ts_echo
        self.data_ack = data_ack
        self.sack_blocks = sack_blocks
        self.dsack_block = dsack_block
        self.is_retransmission = is_retransmission


class RttEstimator:
    """Jacobson/Karels smoothed RTT with RFC 6298 RTO clamping."""

    __slots__ = ("srtt", "rttvar", "rto", "floor", "ceiling")

    def __init__(self, floor=DEFAULT_RTO_FLOOR_S, ceiling=DEFAULT_RTO_CEILING_S,
                 initial_rto=DEFAULT_INITIAL_RTO_S):
        self.srtt = None
        self.rttvar = None
        self.floor = floor
        self.ceiling = ceiling
        self.rto = min(max(initial_rto, floor), ceiling)

    @property
    def initialized(self) -> bool:
        return self.srtt is not None

    def update(self, sample: float) -> None:
        if sample <= 0.0:
            raise ValueError("RTT sample must be positive")
        if self.srtt is None:
            self.srtt = sample
            self.rttvar = sample / 2.0
        else:
            self.rttvar = 0.75 * self.rttvar + 0.25 * abs(self.srtt - sample)
            self.srtt = 0.875 * self.srtt + 0.125 * sample
        rto = self.srtt + 4.0 * self.rttvar
        self.rto = min(max(rto, self.floor), self.ceiling)

    def backoff(self) -> None:
        self.rto = min(self.rto * 2.0, self.ceiling)


class Mapping:
    """One transmitted data-to-subflow sequence mapping, until acked."""

    __slots__ = ("data_start", "data_end", "sf_start", "sf_end",
                 "sent_ns", "retransmitted")

    def __init__(self, data_start, data_end, sf_start, sf_end):
        self.data_start = data_start
        self.data_end = data_end
        self.sf_start = sf_start
        self.sf_end = sf_end
        self.sent_ns = -1
        self.retransmitted = False


class Subflow:
    """Sender-side state for one path of the connection."""

    def __init__(self, index, mss=DEFAULT_MSS,
                 initial_cwnd=DEFAULT_INITIAL_CWND_MSS,
                 initial_ssthresh=DEFAULT_INITIAL_SSTHRESH_MSS,
                 rto_floor=DEFAULT_RTO_FLOOR_S,
                 rto_ceiling=DEFAULT_RTO_CEILING_S,
                 initial_rto=DEFAULT_INITIAL_RTO_S,
                 initial_rtt=DEFAULT_INITIAL_RTT_S):
        self.index = index
        self.mss = mss
        self.cwnd = initial_cwnd
        self.ssthresh = initial_ssthresh
        self.phase = Phase.SLOW_START
        self.snd_una = 0
        self.snd_nxt = 0
        self.dup_ack_count = 0
        self.estimator = RttEstimator(rto_floor, rto_ceiling, initial_rto)
        self.initial_rtt = initial_rtt
        # Data-seq guard: no new fast retransmit until data_una passes it
        # (NewReno-style protection against back-to-back recoveries).
        self.recover_point = 0
        self.mappings = deque()
        self.retransmit_counts = {}
        self.saved = None  # SpuriousSnapshot of the latest recovery episode
        self.rto_handle = None
        # counters
        self.segments_sent = 0
        self.retransmissions = 0
        self.fast_retransmits = 0
        self.rtos = 0
        self.spurious_detections = 0

    @property
    def flight(self) -> int:
        return self.snd_nxt - self.snd_una

    @property
    def rtt_for_coupling(self) -> float:
        srtt = self.estimator.srtt
        return srtt if srtt is not None else self.initial_rtt

    def can_send(self) -> bool:
        return self.flight + self.mss <= self.cwnd * self.mss

    def ack_update(self, data_una: int, now_ns: int):
        """Advance snd_una over mappings cumulatively acked at data level.

        Returns (acked_bytes, rtt_samples). One RTT sample per newly acked
        mapping, obeying Karn's rule: only never-retransmitted mappings
        produce one.
        """
        acked = 0
        samples = []
        mappings = self.mappings
        while mappings and mappings[0].data_end <= data_una:
            m = mappings.popleft()
            acked += m.sf_end - m.sf_start
            if not m.retransmitted and m.sent_ns >= 0:
                samples.append((now_ns - m.sent_ns) / NS_PER_S)
            self.snd_una = m.sf_end
        if acked:
            self.dup_ack_count = 0
        return acked, samples
