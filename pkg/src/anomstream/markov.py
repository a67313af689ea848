"""Lazy Markov transition model over cluster sequences, and anomaly detection.

The model stores only integer counts: pairwise transition counts and per-cluster
outgoing totals. Probabilities are never materialized as a full matrix; the
detection stage divides just the handful of counts it actually needs.
"""

from __future__ import annotations

from typing import Sequence

from .errors import StateError

Pair = tuple[int, int]


class TransitionCounts:
    """Sparse consecutive-pair counts plus per-source totals.

    Invariants: every stored count is positive, and ``from_totals[a]`` equals
    the sum of ``pair_counts[(a, b)]`` over all b.
    """

    __slots__ = ("pair_counts", "from_totals")

    def __init__(self, pair_counts: dict[Pair, int] | None = None,
                 from_totals: dict[int, int] | None = None):
        self.pair_counts: dict[Pair, int] = pair_counts if pair_counts is not None else {}
        self.from_totals: dict[int, int] = from_totals if from_totals is not None else {}

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransitionCounts):
            return NotImplemented
        return self.pair_counts == other.pair_counts and self.from_totals == other.from_totals

    def __repr__(self) -> str:
        return f"TransitionCounts({self.pair_counts!r}, {self.from_totals!r})"

    def copy(self) -> "TransitionCounts":
        return TransitionCounts(dict(self.pair_counts), dict(self.from_totals))

    def shift(self, dropped: Pair, added: Pair) -> "TransitionCounts":
        """O(1) slide update: remove one ``dropped`` pair, add one ``added`` pair."""
        pc, ft = self.pair_counts, self.from_totals
        have = pc.get(dropped, 0)
        if have <= 0:
            raise StateError(f"cannot drop absent transition {dropped}")
        if have == 1:
            del pc[dropped]
        else:
            pc[dropped] = have - 1
        src = dropped[0]
        if ft[src] == 1:
            del ft[src]
        else:
            ft[src] -= 1
        pc[added] = pc.get(added, 0) + 1
        ft[added[0]] = ft.get(added[0], 0) + 1
        return self

    def probability(self, a: int, b: int) -> float:
        """Observed transitions a -> b divided by total transitions out of a."""
        total = self.from_totals.get(a)
        if total is None:
            raise StateError(f"no outgoing transitions recorded for cluster {a}")
        return self.pair_counts.get((a, b), 0) / total


def count_transitions(seq: Sequence[int]) -> TransitionCounts:
    """Count every consecutive pair in ``seq``, self-transitions included."""
    pc: dict[Pair, int] = {}
    ft: dict[int, int] = {}
    shifted = iter(seq)
    next(shifted, None)
    pget = pc.get
    fget = ft.get
    for pair in zip(seq, shifted):
        pc[pair] = pget(pair, 0) + 1
        a = pair[0]
        ft[a] = fget(a, 0) + 1
    return TransitionCounts(pc, ft)


def shift_counts(c: TransitionCounts, dropped: Pair, added: Pair) -> TransitionCounts:
    return c.shift(dropped, added)


def transition_probability(c: TransitionCounts, a: int, b: int) -> float:
    return c.probability(a, b)


def detect(seq: Sequence[int], counts: TransitionCounts, transition_count: int,
           threshold: float) -> float | None:
    """Composed probability of the last transitions; anomalous when below threshold.

    Multiplies the probabilities of the last ``min(transition_count, len-1)``
    consecutive pairs, oldest first (fixed order keeps the float product
    bit-reproducible). Each distinct pair is divided at most once; repeats
    reuse the memoized quotient. Returns the product when it is strictly below
    ``threshold``, else None.
    """
    n = len(seq)
    steps = min(transition_count, n - 1)
    memo: dict[Pair, float] = {}
    memo_get = memo.get
    probability = counts.probability
    product = 1.0
    for i in range(n - 1 - steps, n - 1):
        pair = (seq[i], seq[i + 1])
        q = memo_get(pair)
        if q is None:
            q = probability(pair[0], pair[1])
            memo[pair] = q
        product *= q
    return product if product < threshold else None
