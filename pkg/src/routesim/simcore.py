"""Deterministic discrete-event engine shared by every other module.

Simulation time is fixed-point: an ``int`` count of microseconds.  Floating
point is avoided everywhere on the hot path so that event ordering (and hence
whole-run traces) replay bit-identically across platforms and runs.
"""

from __future__ import annotations

import hashlib
import heapq
from dataclasses import dataclass, field

import numpy as np

# SimTime: non-negative int microseconds.
SimTime = int

US_PER_S = 1_000_000


def usec(seconds: float) -> SimTime:
    """Convert seconds to integer microseconds (round half away from zero)."""
    return int(round(seconds * US_PER_S))


def to_seconds(t: SimTime) -> float:
    return t / US_PER_S


class ScheduleError(ValueError):
    """Raised when an event is scheduled before the current clock."""


def _name_entropy(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "big")


class RngStreams:
    """One seed, many named independent sub-streams.

    Adding a new consumer (a new stream name) never perturbs the draws of
    existing ones, which keeps paired-seed comparisons across sweep cells
    meaningful.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def stream(self, name: str, *indices: int) -> np.random.Generator:
        ss = np.random.SeedSequence([self.seed, _name_entropy(name), *indices])
        return np.random.Generator(np.random.PCG64(ss))

    def derive_seed(self, name: str, *indices: int) -> int:
        """A plain 63-bit integer seed, e.g. for networkx generators."""
        ss = np.random.SeedSequence([self.seed, _name_entropy(name), *indices])
        return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


class EventHandle:
    """Permits cancellation and no-op reclassification of a pending event."""

    __slots__ = ("due", "seq", "kind", "fn", "args", "cancelled", "fired", "stateful")

    def __init__(self, due, seq, kind, fn, args, stateful):
        self.due = due
        self.seq = seq
        self.kind = kind
        self.fn = fn
        self.args = args
        self.cancelled = False
        self.fired = False
        self.stateful = stateful

    @property
    def pending(self) -> bool:
        return not (self.cancelled or self.fired)


@dataclass
class QuiescenceResult:
    quiescent_at: SimTime
    limit_hit: bool
    events_processed: int


@dataclass
class Simulator:
    """Virtual clock plus a (due, seq)-ordered event queue.

    Quiescence is tracked with a counter of pending state-changing events:
    events scheduled with ``stateful=False`` (idle protocol timers) never
    keep the run alive.  ``set_stateful`` reclassifies a pending event when
    its effect becomes known only later (an MRAI timer acquires a pending
    announcement, say).
    """

    clock: SimTime = 0
    trace: list = field(default_factory=list)
    record_trace: bool = False
    _heap: list = field(default_factory=list)
    _seq: int = 0
    _stateful_pending: int = 0
    _processed: int = 0

    def schedule_at(self, due: SimTime, fn, *args, kind: str = "timer",
                    stateful: bool = True) -> EventHandle:
        if due < self.clock:
            raise ScheduleError(f"event due at {due} us is before clock {self.clock} us")
        h = EventHandle(due, self._seq, kind, fn, args, stateful)
        self._seq += 1
        if stateful:
            self._stateful_pending += 1
        heapq.heappush(self._heap, (due, h.seq, h))
        return h

    def schedule_in(self, delay: SimTime, fn, *args, kind: str = "timer",
                    stateful: bool = True) -> EventHandle:
        return self.schedule_at(self.clock + delay, fn, *args, kind=kind, stateful=stateful)

    def cancel(self, handle: EventHandle) -> bool:
        """True iff the event was still pending and is now removed."""
        if not handle.pending:
            return False
        handle.cancelled = True
        if handle.stateful:
            self._stateful_pending -= 1
        return True

    def set_stateful(self, handle: EventHandle, flag: bool) -> None:
        if handle.pending and handle.stateful != flag:
            self._stateful_pending += 1 if flag else -1
        handle.stateful = flag

    def next_due(self) -> SimTime | None:
        """Due time of the next live event, or None if the queue is drained."""
        heap = self._heap
        while heap and heap[0][2].cancelled:
            heapq.heappop(heap)
        return heap[0][0] if heap else None

    def quiescent(self) -> bool:
        return self._stateful_pending == 0

    def process_next(self) -> bool:
        """Pop and run the next event. False if the queue is empty."""
        heap = self._heap
        while heap:
            due, _seq, h = heapq.heappop(heap)
            if h.cancelled:
                continue
            h.fired = True
            if h.stateful:
                self._stateful_pending -= 1
            self.clock = due
            self._processed += 1
            if self.record_trace:
                self.trace.append((due, h.kind))
            h.fn(*h.args)
            return True
        return False

    def run_until_quiescent(self, limit: SimTime) -> QuiescenceResult:
        """Process events in (due, seq) order until none that remain can
        change state, or until the next event lies beyond ``limit``.

        The limit being hit is reported, not raised; the clock stays at the
        last processed event.
        """
        start = self._processed
        while not self.quiescent():
            nxt = self.next_due()
            if nxt is None:  # stateful counter out of sync would be a bug
                break
            if nxt > limit:
                return QuiescenceResult(self.clock, True, self._processed - start)
            self.process_next()
        return QuiescenceResult(self.clock, False, self._processed - start)
