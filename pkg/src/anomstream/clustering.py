"""One-dimensional k-means over a sensor window, plus the skip optimizations.

Initial centers are the first k distinct values of the window in order of
first appearance. Three mutually exclusive shortcuts avoid running Lloyd
iterations at all, checked in priority order per window:

* IN/OUT  - the evicted value re-entered at the tail and the first-k-distinct
            prefix is preserved, so the previous window's clusters are reused.
* K1      - the window necessarily forms one cluster (k == 1 or all values
            equal); the whole chain is skipped, no anomaly is possible.
* LowK    - fewer distinct values than clusters; each distinct value is its
            own cluster, which is already a fixed point of Lloyd.

Equidistant values are assigned to the lower centroid *value* (then lower
index among equal centroids). A value-based tie keeps the resulting partition
invariant under relabeling of the centers, which is what makes cluster reuse
exact: a reused window sees the same center set, possibly in a different
first-appearance order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .windows import SensorWindow


class Trigger(Enum):
    FULL = "full"
    IN_OUT = "inout"
    K1 = "k1"
    LOW_K = "lowk"
    SORTED = "sorted"


@dataclass(frozen=True)
class ClusteringResult:
    """Centroids and per-value cluster assignments for one window."""

    centroids: Sequence[float]
    assignments: Sequence[int]
    reused: bool
    trigger: Trigger


def initial_centers(values: Sequence[float], cluster_count: int) -> list[float]:
    """First min(k, distinct) values in order of first appearance."""
    return list(dict.fromkeys(values))[:cluster_count]


def _assign_nearest(vals: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # Distances are computed against the value-sorted centers so that argmin's
    # lowest-index tie rule picks the lowest center value; stable argsort makes
    # equal-valued centers fall back to the lower original index.
    order = np.argsort(centers, kind="stable")
    dist = np.abs(vals[:, None] - centers[order][None, :])
    return order[np.argmin(dist, axis=1)]


def _update_means(vals: np.ndarray, assign: np.ndarray, centers: np.ndarray) -> np.ndarray:
    counts = np.bincount(assign, minlength=len(centers))
    sums = np.bincount(assign, weights=vals, minlength=len(centers))
    new = centers.copy()
    occupied = counts > 0
    new[occupied] = sums[occupied] / counts[occupied]
    return new


_VECTORIZE_FROM = 48  # below this, interpreter-loop Lloyd beats numpy call overhead


def _lloyd_small(values: list[float], centers: list[float],
                 max_iterations: int) -> tuple[list[float], list[int]]:
    # Same assignment rule as the vectorized path: nearest center, ties to the
    # lower center value, then the lower index among equal-valued centers.
    k = len(centers)
    prev: list[int] | None = None
    for _ in range(max_iterations):
        assign = []
        append = assign.append
        for v in values:
            best_c = centers[0]
            best_d = abs(v - best_c)
            best = 0
            for j in range(1, k):
                c = centers[j]
                d = abs(v - c)
                if d < best_d or (d == best_d and c < best_c):
                    best_d = d
                    best_c = c
                    best = j
            append(best)
        if assign == prev:
            break
        sums = [0.0] * k
        counts = [0] * k
        for v, a in zip(values, assign):
            sums[a] += v
            counts[a] += 1
        centers = [sums[j] / counts[j] if counts[j] else centers[j] for j in range(k)]
        prev = assign
    assert prev is not None
    return centers, prev


def kmeans_full(values: Sequence[float], cluster_count: int,
                max_iterations: int) -> ClusteringResult:
    """Deterministic Lloyd iterations on 1-D data.

    Stops when the assignments repeat or ``max_iterations`` assignment rounds
    have run. A cluster that ends up empty keeps its previous centroid.
    """
    if len(values) < _VECTORIZE_FROM:
        centers, assign = _lloyd_small(
            list(values), initial_centers(values, cluster_count), max_iterations
        )
        return ClusteringResult(centers, assign, reused=False, trigger=Trigger.FULL)
    vals = np.fromiter(values, dtype=np.float64, count=len(values))
    centers_arr = np.asarray(initial_centers(values, cluster_count), dtype=np.float64)
    prev: np.ndarray | None = None
    for _ in range(max_iterations):
        assign_arr = _assign_nearest(vals, centers_arr)
        if prev is not None and np.array_equal(assign_arr, prev):
            break
        centers_arr = _update_means(vals, assign_arr, centers_arr)
        prev = assign_arr
    assert prev is not None
    return ClusteringResult(centers_arr.tolist(), prev.tolist(),
                            reused=False, trigger=Trigger.FULL)


def check_k1(values: Sequence[float], cluster_count: int) -> bool:
    """True iff the window necessarily forms a single cluster."""
    if cluster_count == 1:
        return True
    it = iter(values)
    first = next(it)
    return all(v == first for v in it)


def apply_lowk(values: Sequence[float], cluster_count: int) -> ClusteringResult | None:
    """Shortcut when 1 < distinct < k: each distinct value is its own cluster."""
    distinct = list(dict.fromkeys(values))
    if not (1 < len(distinct) < cluster_count):
        return None
    index = {v: i for i, v in enumerate(distinct)}
    assignments = [index[v] for v in values]
    return ClusteringResult(distinct, assignments, reused=False, trigger=Trigger.LOW_K)


def in_out_check(win: SensorWindow) -> bool:
    """Update the distinct-prefix bookkeeping after a slide; report reusability.

    Must be called exactly once per slide of a primed full window. It first
    accounts for the departed ``prev_first``; if that was the last copy inside
    the counted prefix, it scans forward from the stored frontier to extend
    the prefix with the next distinct value. The bookkeeping always ends equal
    to a from-scratch ``prefix_scan`` of the new window, so the scan also runs
    when the prefix still holds fewer distinct values than clusters.

    Returns True when the first-k-distinct value set is unchanged *and* the
    newly appended value equals the evicted one - the condition under which
    the previous window's clusters carry over verbatim.
    """
    freq = win.frequencies
    prev_first = win.prev_first
    window = win.values
    length = len(window)
    k = win.cluster_count
    result = False

    remaining = freq.get(prev_first)
    if remaining is None:
        raise _state_error(win)
    scan = False
    if remaining == 1:
        del freq[prev_first]
        scan = True
    else:
        freq[prev_first] = remaining - 1
        result = True
        if len(freq) < k:
            scan = True  # prefix covers the whole window; keep the frontier at the end
        else:
            win.position -= 1

    if scan:
        pos = win.position
        while pos < length and len(freq) < k and window[pos] in freq:
            freq[window[pos]] += 1
            pos += 1
        if pos < length:
            newcomer = window[pos]
            freq[newcomer] = 1
            if newcomer == prev_first:
                result = True
        else:
            pos -= 1
        win.position = pos

    return result and prev_first == window[-1]


def _state_error(win: SensorWindow):
    from .errors import StateError

    return StateError(
        f"prev_first {win.prev_first!r} missing from prefix frequencies {win.frequencies!r}"
    )


def reuse_clusters(win: SensorWindow) -> ClusteringResult:
    """Inherit the previous window's clusters after a positive in/out check.

    The cluster sequence rotates left by one: the evicted value's cluster
    index is re-appended for the (equal) new last value. Centroids are
    unchanged.
    """
    seq = win.cluster_sequence
    seq.append(seq.popleft())
    return ClusteringResult(win.centroids, seq, reused=True, trigger=Trigger.IN_OUT)


def normalize_labels(assignments: Sequence[int]) -> tuple[int, ...]:
    """Canonical partition signature: relabel clusters by first appearance."""
    mapping: dict[int, int] = {}
    out = []
    for a in assignments:
        if a not in mapping:
            mapping[a] = len(mapping)
        out.append(mapping[a])
    return tuple(out)


def sorted_sweep_kmeans(values: Sequence[float], cluster_count: int,
                        max_iterations: int,
                        sorted_values: Sequence[float] | None = None) -> ClusteringResult:
    """Lloyd via one merged pass per iteration over sorted values and centers.

    Each iteration walks the ascending values once: everything up to the
    midpoint of two consecutive centers belongs to the lower cluster (at the
    midpoint exactly, the lower cluster wins, matching the baseline tie rule),
    and the new means accumulate in the same pass. Produces the same partition
    as ``kmeans_full``; labels are in ascending-center order instead of
    first-appearance order.
    """
    svals = sorted(values) if sorted_values is None else list(sorted_values)
    centers = sorted(initial_centers(values, cluster_count))
    n = len(svals)
    k = len(centers)
    bounds_prev: list[int] | None = None
    for _ in range(max_iterations):
        bounds: list[int] = []  # first value index belonging to each cluster > 0
        sums = [0.0] * k
        counts = [0] * k
        i = 0
        for c in range(k):
            if c + 1 < k:
                limit = (centers[c] + centers[c + 1]) / 2.0
                while i < n and svals[i] <= limit:
                    sums[c] += svals[i]
                    counts[c] += 1
                    i += 1
                bounds.append(i)
            else:
                while i < n:
                    sums[c] += svals[i]
                    counts[c] += 1
                    i += 1
        if bounds_prev is not None and bounds == bounds_prev:
            break
        centers = [sums[c] / counts[c] if counts[c] else centers[c] for c in range(k)]
        bounds_prev = bounds

    label_of: dict[float, int] = {}
    cluster = 0
    assert bounds_prev is not None
    for idx, v in enumerate(svals):
        while cluster + 1 < k and idx >= bounds_prev[cluster]:
            cluster += 1
        if v not in label_of:
            label_of[v] = cluster
    assignments = [label_of[v] for v in values]
    return ClusteringResult(centers, assignments, reused=False, trigger=Trigger.SORTED)
