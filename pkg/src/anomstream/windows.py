"""Per-sensor sliding windows and the double-indexed window store.

Each ``SensorWindow`` carries, besides the ring of values, the cross-window
reuse state consumed by the clustering stage: the value evicted by the most
recent slide (``prev_first``), the multiplicities of the first-k-distinct
window prefix (``frequencies``), the scan frontier for that prefix
(``position``, stored in next-window coordinates), and the cluster sequence
plus transition counts of the last clustered window.
"""

from __future__ import annotations

import bisect
from collections import deque
from typing import Iterable

from .markov import TransitionCounts
from .model import SensorKey, SensorMetadata


def prefix_scan(values: Iterable[float], cluster_count: int) -> tuple[dict[float, int], int]:
    """From-scratch reuse-state: count the window prefix up to (and including)
    the first occurrence of the ``cluster_count``-th distinct value, or the
    whole window when fewer distinct values exist.

    Returns (frequencies, position) where position is the last counted index,
    i.e. the frontier in next-window coordinates.
    """
    freq: dict[float, int] = {}
    p = 0
    for v in values:
        if v in freq:
            freq[v] += 1
            p += 1
        else:
            freq[v] = 1
            p += 1
            if len(freq) == cluster_count:
                break
    return freq, p - 1


class SensorWindow:
    """Ring buffer of the last ``capacity`` values of one sensor plus reuse state.

    Owned by exactly one worker; never shared.
    """

    __slots__ = (
        "capacity",
        "cluster_count",
        "values",
        "prev_first",
        "frequencies",
        "position",
        "cluster_sequence",
        "centroids",
        "counts",
        "primed",
        "reuse_eligible",
        "sorted_values",
    )

    def __init__(self, capacity: int, cluster_count: int, keep_sorted: bool = False):
        self.capacity = capacity
        self.cluster_count = cluster_count
        self.values: deque[float] = deque(maxlen=capacity)
        self.prev_first: float | None = None
        self.frequencies: dict[float, int] = {}
        self.position = 0
        self.cluster_sequence: deque[int] = deque()
        self.centroids: list[float] = []
        self.counts: TransitionCounts | None = None
        # primed: the first full window has been scanned, so the reuse
        # bookkeeping is live. reuse_eligible: the stored cluster_sequence
        # came from a real clustering (not a skip path) and may be inherited.
        self.primed = False
        self.reuse_eligible = False
        self.sorted_values: list[float] | None = [] if keep_sorted else None

    def slide(self, value: float) -> float | None:
        """Append ``value``; if the window was full, evict and return the oldest.

        The evicted value becomes ``prev_first``.
        """
        evicted: float | None = None
        values = self.values
        if len(values) == self.capacity:
            evicted = values[0]
            self.prev_first = evicted
        values.append(value)
        if self.sorted_values is not None:
            if evicted is not None:
                del self.sorted_values[bisect.bisect_left(self.sorted_values, evicted)]
            bisect.insort(self.sorted_values, value)
        return evicted

    def is_full(self) -> bool:
        return len(self.values) == self.capacity

    def init_reuse_state(self) -> None:
        """Prime frequencies/position on the first full window by a linear scan."""
        self.frequencies, self.position = prefix_scan(self.values, self.cluster_count)
        self.primed = True


class WindowStore:
    """All sensor windows, double-indexed as ``windows[machine_id][property_id]``.

    The outer structure is immutable after construction, so concurrent lookups
    of different keys never conflict; each window itself is owned by the single
    worker its machine routes to.
    """

    __slots__ = ("windows",)

    def __init__(self, windows: list[list[SensorWindow | None]]):
        self.windows = windows

    @classmethod
    def build(
        cls,
        metadata: dict[SensorKey, SensorMetadata],
        window_size: int,
        keep_sorted: bool = False,
    ) -> "WindowStore":
        """One window per stateful sensor; non-stateful entries stay absent."""
        machines = 1 + max((k.machine_id for k in metadata), default=-1)
        rows: list[list[SensorWindow | None]] = [[] for _ in range(machines)]
        per_machine: dict[int, int] = {}
        for key in metadata:
            per_machine[key.machine_id] = max(per_machine.get(key.machine_id, -1), key.property_id)
        for mid, max_pid in per_machine.items():
            rows[mid] = [None] * (max_pid + 1)
        for key, meta in metadata.items():
            if meta.stateful:
                rows[key.machine_id][key.property_id] = SensorWindow(
                    window_size, meta.cluster_count, keep_sorted
                )
        return cls(rows)

    def lookup(self, machine_id: int, property_id: int) -> SensorWindow | None:
        """Constant-time access; absent for non-stateful or out-of-range keys."""
        rows = self.windows
        if 0 <= machine_id < len(rows):
            row = rows[machine_id]
            if 0 <= property_id < len(row):
                return row[property_id]
        return None

    def all_windows(self) -> Iterable[tuple[SensorKey, SensorWindow]]:
        for mid, row in enumerate(self.windows):
            for pid, win in enumerate(row):
                if win is not None:
                    yield SensorKey(mid, pid), win
