"""Deterministic discrete-event kernel and seeded random stream.

Virtual time is an integer count of nanoseconds so that event ordering is
exact and identical on every platform. Simultaneous events fire in
insertion order (monotone ordinal tie-break).
"""

from __future__ import annotations

import heapq
from enum import Enum

NS_PER_S = 1_000_000_000

_MASK64 = (1 << 64) - 1
# splitmix64 constants (Steele, Lea, Flood 2014)
_SM_GAMMA = 0x9E3779B97F4A7C15
_SM_MIX1 = 0xBF58476D1CE4E5B9
_SM_MIX2 = 0x94D049BB133111EB


def seconds_to_ns(t: float) -> int:
    return int(round(t * NS_PER_S))


def ns_to_seconds(t: int) -> float:
    return t / NS_PER_S


class EventKind(Enum):
    SEGMENT_DELIVERY = "SegmentDelivery"
    RTO_EXPIRY = "RtoExpiry"
    TRACE_SAMPLE = "TraceSample"
    TRANSFER_DEADLINE = "TransferDeadline"


class EventHandle:
    """Ticket for a scheduled event; lets the owner cancel it later."""

    __slots__ = ("fire_time", "ordinal", "kind", "fn", "cancelled")

    def __init__(self, fire_time, ordinal, kind, fn):
        self.fire_time = fire_time
        self.ordinal = ordinal
        self.kind = kind
        self.fn = fn
        self.cancelled = False


class RandomStream:
    """splitmix64 pseudo-random stream.

    Chosen for reproducibility: a fixed, trivially portable algorithm so
    that identical seeds give identical loss patterns everywhere.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _SM_GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _SM_MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _SM_MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_uniform(self) -> float:
        """Uniform draw in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)


def mix_seed(seed: int, index: int) -> int:
    """Derive an independent per-point seed for sweep point `index`.

    Applies the splitmix64 finalizer to seed XOR (index+1)*gamma, so that
    neighbouring points get uncorrelated streams.
    """
    z = (seed ^ (((index + 1) * _SM_GAMMA) & _MASK64)) & _MASK64
    z = ((z ^ (z >> 30)) * _SM_MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _SM_MIX2) & _MASK64
    return z ^ (z >> 31)


class SimKernel:
    """Single-threaded event loop over (fire_time, ordinal)-ordered events."""

    def __init__(self):
        self._queue = []
        self._ordinal = 0
        self._now = 0
        self._stopped = False

    @property
    def now(self) -> int:
        return self._now

    def schedule(self, fire_time: int, kind: EventKind, fn) -> EventHandle:
        if fire_time < self._now:
            raise ValueError(
                "cannot schedule event at t=%d ns before current time %d ns"
                % (fire_time, self._now)
            )
        self._ordinal += 1
        handle = EventHandle(fire_time, self._ordinal, kind, fn)
        heapq.heappush(self._queue, (fire_time, self._ordinal, handle))
        return handle

    def cancel(self, handle: EventHandle) -> None:
        handle.cancelled = True

    def stop(self) -> None:
        """Stop processing; run_until_idle returns after the current event."""
        self._stopped = True

    def run_until_idle(self, stop_time: int) -> int:
        """Process every event with fire_time <= stop_time, in order."""
        queue = self._queue
        while queue and not self._stopped:
            fire_time, _, handle = queue[0]
            if fire_time > stop_time:
                break
            heapq.heappop(queue)
            if handle.cancelled:
                continue
            self._now = fire_time
            handle.fn()
        return self._now
