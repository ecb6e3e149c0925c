"""Connection-level machinery: data sequence space, round-robin segment
scheduling, receiver reassembly and data-level cumulative ACK generation.
"""

from __future__ import annotations

import bisect
from typing import List, Optional, Tuple

from .subflow import Mapping, Subflow

# Order-independent positional stream checksum: byte position i contributes
# (i+1) * G**i mod P. Ranges have a closed form, so a 2 MB transfer costs
# O(log n) per delivered chunk instead of per-byte work.
_P = (1 << 61) - 1
_G = 1_000_003
CHECKSUM_MODULUS = _P
_INV_1MG_SQ = pow((1 - _G) % _P, _P - 3, _P)  # 1/(1-G)^2 mod P


def _prefix_weight(n: int) -> int:
    """sum_{i=0}^{n-1} (i+1) * G**i mod P."""
    if n <= 0:
        return 0
    gn = pow(_G, n, _P)
    num = (1 - (n + 1) * gn + n * gn * _G) % _P
    return num * _INV_1MG_SQ % _P


def range_weight(start: int, end: int) -> int:
    """Checksum contribution of byte positions [start, end)."""
    if end <= start:
        return 0
    return (_prefix_weight(end) - _prefix_weight(start)) % _P


def stream_weight(size: int) -> int:
    """Checksum of the complete stream [0, size)."""
    return _prefix_weight(size)


class ConnectionState:
    """Sender-side data sequence space and scheduler cursor."""

    def __init__(self, transfer_size: int, mss: int, n_subflows: int):
        self.transfer_size = transfer_size
        self.mss = mss
        self.data_snd_nxt = 0
        self.data_una = 0
        self.n_subflows = n_subflows
        self.scheduler_cursor = n_subflows - 1


def schedule_next(conn: ConnectionState,
                  subflows: List[Subflow]) -> Optional[Tuple[Subflow, Mapping]]:
    """Map the next unsent data chunk onto the next window-eligible subflow.

    Round-robin from the scheduler cursor; returns None (blocked) when no
    subflow has window space or nothing is left to send.
    """
    remaining = conn.transfer_size - conn.data_snd_nxt
    if remaining <= 0:
        return None
    n = conn.n_subflows
    for k in range(1, n + 1):
        idx = (conn.scheduler_cursor + k) % n
        sf = subflows[idx]
        if sf.can_send():
            size = min(conn.mss, remaining)
            m = Mapping(conn.data_snd_nxt, conn.data_snd_nxt + size,
                        sf.snd_nxt, sf.snd_nxt + size)
            sf.mappings.append(m)
            sf.snd_nxt += size
            conn.data_snd_nxt += size
            conn.scheduler_cursor = idx
            return sf, m
    return None


def retransmit_policy(conn: ConnectionState, subflows: List[Subflow],
                      data_start: int, data_end: int) -> int:
    """Retransmissions stay on the subflow holding the original mapping."""
    for sf in subflows:
        for m in sf.mappings:
            if m.data_start <= data_start and data_end <= m.data_end:
                return sf.index
    raise ValueError(
        "protocol violation: range [%d, %d) is not mapped and unacknowledged"
        % (data_start, data_end)
    )


def transfer_complete(conn: ConnectionState) -> bool:
    return conn.data_una >= conn.transfer_size


class ReassemblyState:
    """Receiver-side reassembly: cumulative point plus out-of-order ranges."""

    def __init__(self):
        self.rcv_data_next = 0
        # disjoint, sorted, non-adjacent [start, end) ranges above rcv_data_next
        self._starts = []
        self._ends = []

    @property
    def stored_ranges(self) -> List[Tuple[int, int]]:
        return list(zip(self._starts, self._ends))

    def duplicate_overlap(self, start: int, end: int) -> Optional[Tuple[int, int]]:
        """First contiguous sub-range of [start, end) already received."""
        if start < self.rcv_data_next:
            return (start, min(end, self.rcv_data_next))
        idx = bisect.bisect_right(self._starts, start) - 1
        if idx >= 0 and start < self._ends[idx]:
            return (start, min(end, self._ends[idx]))
        idx += 1
        if idx < len(self._starts) and self._starts[idx] < end:
            return (self._starts[idx], min(end, self._ends[idx]))
        return None

    def on_data(self, start: int, end: int):
        """Absorb [start, end); returns (data_ack, delivered_range_or_None,
        duplicate_subrange_or_None).

        delivered_range is the stretch of newly in-order bytes handed to the
        application (rcv_data_next advance), after coalescing across any
        stored ranges the arrival connects to.
        """
        if end <= start:
            raise ValueError("empty segment range")
        dup = self.duplicate_overlap(start, end)
        s = max(start, self.rcv_data_next)
        if s < end:
            self._insert(s, end)
        old = self.rcv_data_next
        if self._starts and self._starts[0] <= self.rcv_data_next:
            self.rcv_data_next = max(self.rcv_data_next, self._ends[0])
            del self._starts[0]
            del self._ends[0]
        delivered = (old, self.rcv_data_next) if self.rcv_data_next > old else None
        return self.rcv_data_next, delivered, dup

    def sack_blocks(self, limit: int = 3) -> List[Tuple[int, int]]:
        return list(zip(self._starts[:limit], self._ends[:limit]))

    def _insert(self, start: int, end: int) -> None:
        starts, ends = self._starts, self._ends
        lo = bisect.bisect_left(starts, start)
        # merge with a predecessor that overlaps or touches [start, end)
        if lo > 0 and ends[lo - 1] >= start:
            lo -= 1
            start = starts[lo]
            end = max(end, ends[lo])
        hi = lo
        while hi < len(starts) and starts[hi] <= end:
            end = max(end, ends[hi])
            hi += 1
        starts[lo:hi] = [start]
        ends[lo:hi] = [end]
