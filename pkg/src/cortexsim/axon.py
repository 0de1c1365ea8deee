"""Two-phase stochastic axonal-delay subsystem.

Events enter one of sixteen bounded delay-class queues at transmit time
and are read back opportunistically: each read opportunity first passes a
10-bit global gate, then picks a delay class with probability
proportional to 1/class, so realized mean residence times scale linearly
with the programmed class.  Odd classes live in one memory bank, even
classes in the other; a read opportunity avoids the bank most recently
written so transmit and receive never contend for the same bank.
"""

from __future__ import annotations

from bisect import bisect_right
from collections import deque
from fractions import Fraction
from itertools import repeat
from typing import NamedTuple

from .rng import RngStream
from .tables import PostConnection

NUM_CLASSES = 16
THRESHOLD_BITS = 20
THRESHOLD_SPAN = 1 << THRESHOLD_BITS
GATE_BITS = 10
GATE_SPAN = 1 << GATE_BITS
DEFAULT_CLASS_CAPACITY = 1 << 20
BACKPRESSURE_FRACTION = 0.95


class Event(NamedTuple):
    """Spike-count message from one source minicolumn for one step."""

    source: int  # packed 27-bit address
    counts: bytes  # eight 4-bit per-type counts


class DelayedEvent(NamedTuple):
    """An event replica bound to one connection slot and delay class."""

    source: int
    counts: bytes
    slot: int
    delay_class: int


class ClassFull(RuntimeError):
    """A delay-class queue hit capacity; producers must stall, not drop."""

    def __init__(self, delay_class: int, capacity: int):
        super().__init__(f"delay class {delay_class} queue is full (capacity {capacity})")
        self.delay_class = delay_class
        self.capacity = capacity


def bank_of(delay_class: int) -> int:
    """Bank 0 holds the odd delay classes, bank 1 the even ones."""
    return 1 - (delay_class & 1)


def delay_thresholds() -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Per-class readout weights R and cumulative thresholds T.

    The class-i readout probability is P_1/i with the P_i summing to one;
    normalized to 20-bit integers R_i = round(2^20 / (H_16 * i)) where
    H_16 is the 16th harmonic number.  T has 17 entries with T[0] = 0 and
    T[i+1] - T[i] = R_i.
    """
    h16 = sum(Fraction(1, i) for i in range(1, NUM_CLASSES + 1))
    r = tuple(round(Fraction(THRESHOLD_SPAN) / (h16 * i)) for i in range(1, NUM_CLASSES + 1))
    t = [0]
    for ri in r:
        t.append(t[-1] + ri)
    return r, tuple(t)


class DelayGenerator:
    """Gate probability f plus the per-class selection thresholds."""

    __slots__ = ("f", "r", "t")

    def __init__(self, f: int = 0):
        if not 0 <= f < GATE_SPAN:
            raise ValueError(f"gate must be a 10-bit value, got {f}")
        self.f = f
        self.r, self.t = delay_thresholds()

    def class_for(self, u20: int) -> int:
        """Delay class (1-16) whose threshold range contains the draw."""
        i = bisect_right(self.t, u20) - 1
        return min(i, NUM_CLASSES - 1) + 1


class DelayStore:
    """Sixteen bounded FIFO queues, one per delay class."""

    def __init__(self, capacity_per_class: int = DEFAULT_CLASS_CAPACITY):
        if capacity_per_class < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity_per_class
        self._limit = int(BACKPRESSURE_FRACTION * capacity_per_class)  # "over" means > limit
        self._queues: list[deque[DelayedEvent]] = [deque() for _ in range(NUM_CLASSES)]
        self._over = 0  # queues currently above the backpressure limit
        self._last_tx_bank: int | None = None
        self.enqueued_total = 0
        self.dequeued_total = 0

    def occupancy(self, delay_class: int) -> int:
        return len(self._queues[delay_class - 1])

    def total_queued(self) -> int:
        return sum(len(q) for q in self._queues)

    @property
    def backpressure(self) -> bool:
        return self._over > 0

    def enqueue(self, ev: DelayedEvent) -> None:
        q = self._queues[ev.delay_class - 1]
        if len(q) >= self.capacity:
            raise ClassFull(ev.delay_class, self.capacity)
        q.append(ev)
        if len(q) == self._limit + 1:
            self._over += 1
        self._last_tx_bank = bank_of(ev.delay_class)
        self.enqueued_total += 1

    def extend(self, delay_class: int, events: list[DelayedEvent]) -> None:
        """Bulk append into one class queue; capacity checked up front."""
        q = self._queues[delay_class - 1]
        if len(q) + len(events) > self.capacity:
            raise ClassFull(delay_class, self.capacity)
        was = len(q)
        q.extend(events)
        if was <= self._limit < len(q):
            self._over += 1
        self._last_tx_bank = bank_of(delay_class)
        self.enqueued_total += len(events)

    def dequeue_burst(self, delay_class: int, burst: int) -> list[DelayedEvent]:
        q = self._queues[delay_class - 1]
        n = min(burst, len(q))
        if n == 0:
            return []
        was = len(q)
        out = [q.popleft() for _ in range(n)]
        if was > self._limit >= len(q):
            self._over -= 1
        self.dequeued_total += n
        return out

    def consume_last_tx_bank(self) -> int | None:
        bank = self._last_tx_bank
        self._last_tx_bank = None
        return bank


def tx_enqueue(ev: Event, post: PostConnection, store: DelayStore) -> list[DelayedEvent]:
    """Replicate an event into every enabled connection slot's delay queue.

    Atomic: capacity is checked for all target classes before anything is
    appended, so a ClassFull never leaves a partial fan-out behind.
    """
    slots = post.enabled_slots()
    if not slots:
        return []
    need: dict[int, int] = {}
    for _slot, delay in slots:
        need[delay] = need.get(delay, 0) + 1
    for delay, extra in need.items():
        if store.occupancy(delay) + extra > store.capacity:
            raise ClassFull(delay, store.capacity)
    placements = []
    for slot, delay in slots:
        dev = DelayedEvent(ev.source, ev.counts, slot, delay)
        store.enqueue(dev)
        placements.append(dev)
    return placements


def tx_enqueue_many(
    sources: list[int],
    counts_list: list[bytes],
    post: PostConnection,
    store: DelayStore,
) -> int:
    """Batched transmit for events sharing one post-connection record.

    Same atomicity contract as ``tx_enqueue``; within a class, events keep
    their list order.  Returns the number of placements.
    """
    slots = post.enabled_slots()
    if not slots or not sources:
        return 0
    n = len(sources)
    need: dict[int, int] = {}
    for _slot, delay in slots:
        need[delay] = need.get(delay, 0) + n
    for delay, extra in need.items():
        if store.occupancy(delay) + extra > store.capacity:
            raise ClassFull(delay, store.capacity)
    for slot, delay in slots:
        store.extend(
            delay,
            list(map(DelayedEvent._make, zip(sources, counts_list, repeat(slot), repeat(delay)))),
        )
    return len(slots) * n


def rx_opportunity(
    gen: DelayGenerator, store: DelayStore, rng: RngStream, burst: int
) -> list[DelayedEvent]:
    """One gated read opportunity.

    Draw order is fixed: the 10-bit gate draw always happens; the 20-bit
    class draw only when the gate opens (probability (1024 - f)/1024).
    The opportunity reads nothing if the selected class sits in the bank
    transmit last wrote, or if its queue is empty.
    """
    if burst < 1:
        raise ValueError("burst must be at least 1")
    blocked_bank = store.consume_last_tx_bank()
    u10 = rng.draw(GATE_BITS)
    if gen.f > u10:
        return []
    u20 = rng.draw(THRESHOLD_BITS)
    delay_class = gen.class_for(u20)
    if blocked_bank is not None and bank_of(delay_class) == blocked_bank:
        return []
    return store.dequeue_burst(delay_class, burst)
