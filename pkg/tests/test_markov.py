from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from anomstream.errors import StateError
from anomstream.markov import (
    TransitionCounts,
    count_transitions,
    detect,
    shift_counts,
    transition_probability,
)

seqs = st.lists(st.integers(0, 5), min_size=2, max_size=40)


def fraction_detect(seq, n):
    """Independent exact-arithmetic recomputation of the composed probability."""
    pairs = list(zip(seq, seq[1:]))
    counts = {}
    totals = {}
    for p in pairs:
        counts[p] = counts.get(p, 0) + 1
        totals[p[0]] = totals.get(p[0], 0) + 1
    product = Fraction(1)
    for p in pairs[-min(n, len(pairs)):]:
        product *= Fraction(counts[p], totals[p[0]])
    return product


def test_count_transitions_hand_case():
    c = count_transitions([0, 0, 1, 1, 0])
    assert c.pair_counts == {(0, 0): 1, (0, 1): 1, (1, 1): 1, (1, 0): 1}
    assert c.from_totals == {0: 2, 1: 2}


def test_count_transitions_constant_sequence():
    c = count_transitions([0, 0, 0, 0])
    assert c.pair_counts == {(0, 0): 3}
    assert c.from_totals == {0: 3}


@given(seqs)
def test_totals_sum_to_length_minus_one(seq):
    c = count_transitions(seq)
    assert sum(c.from_totals.values()) == len(seq) - 1
    for a, total in c.from_totals.items():
        assert total == sum(n for (x, _), n in c.pair_counts.items() if x == a)


def test_shift_recount_equivalence_hand_case():
    c = count_transitions([0, 1, 0, 1])
    shift_counts(c, (0, 1), (1, 0))
    assert c == count_transitions([1, 0, 1, 0])


def test_shift_identical_pair_is_noop():
    c = count_transitions([0, 1, 0, 1])
    before = c.copy()
    shift_counts(c, (0, 1), (0, 1))
    assert c == before


def test_shift_of_absent_pair_is_a_state_error():
    c = count_transitions([0, 0, 0])
    with pytest.raises(StateError):
        shift_counts(c, (1, 1), (0, 0))


def test_shift_matches_recount_on_random_rotations():
    rng = random.Random(55)
    seq = [rng.randrange(4) for _ in range(12)]
    counts = count_transitions(seq)
    for _ in range(20000):
        new = seq[1:] + [seq[0]]
        shift_counts(counts, (seq[0], seq[1]), (new[-2], new[-1]))
        assert counts == count_transitions(new)
        seq = new
        if rng.random() < 0.01:
            seq = [rng.randrange(4) for _ in range(12)]
            counts = count_transitions(seq)


def test_probability_hand_cases():
    c = count_transitions([0, 0, 1, 1, 0])
    assert transition_probability(c, 0, 0) == 0.5
    constant = count_transitions([3, 3, 3])
    assert transition_probability(constant, 3, 3) == 1.0
    assert transition_probability(count_transitions([0, 0, 0, 0]), 0, 1) == 0.0


def test_probability_unknown_source_is_a_state_error():
    with pytest.raises(StateError):
        transition_probability(count_transitions([0, 0]), 9, 0)


def test_detect_above_threshold_returns_none():
    seq = [0, 0, 1, 1, 0]
    c = count_transitions(seq)
    assert detect(seq, c, 5, 0.005) is None
    # composed probability is (1/2)^4
    assert fraction_detect(seq, 5) == Fraction(1, 16)


def test_detect_exact_hand_probability():
    # (3/4)^3 * (1/4) over the last four transitions
    seq = [0, 0, 0, 0, 1]
    c = count_transitions(seq)
    assert fraction_detect(seq, 5) == Fraction(27, 256)
    assert detect(seq, c, 5, 0.1) is None  # 27/256 = 0.10546875 is not below 0.1
    p = detect(seq, c, 5, 0.11)
    assert p is not None
    assert Fraction(p) == Fraction(27, 256)
    assert f"{p:.12g}" == "0.10546875"


def test_detect_constant_sequence_never_fires():
    seq = [2, 2, 2, 2]
    assert detect(seq, count_transitions(seq), 5, 1.0) is None


@settings(deadline=None, max_examples=150)
@given(seqs, st.integers(1, 6))
def test_detect_probability_matches_exact_arithmetic(seq, n):
    c = count_transitions(seq)
    p = detect(seq, c, n, 1.0)  # threshold 1.0: only p == 1 comes back as None
    exact = fraction_detect(seq, n)
    if p is None:
        assert exact == 1
    else:
        assert 0.0 <= p < 1.0
        assert abs(p - float(exact)) <= 1e-12


@settings(deadline=None, max_examples=100)
@given(seqs, st.permutations(range(6)).map(tuple))
def test_detect_is_label_permutation_invariant(seq, perm):
    relabeled = [perm[x] for x in seq]
    p1 = detect(seq, count_transitions(seq), 5, 1.0)
    p2 = detect(relabeled, count_transitions(relabeled), 5, 1.0)
    assert p1 == p2


class _CountingCounts(TransitionCounts):
    __slots__ = ("divisions",)

    def __init__(self, base):
        super().__init__(dict(base.pair_counts), dict(base.from_totals))
        self.divisions = 0

    def probability(self, a, b):
        self.divisions += 1
        return super().probability(a, b)


def test_detect_divides_each_distinct_pair_at_most_once():
    rng = random.Random(9)
    for _ in range(300):
        seq = [rng.randrange(3) for _ in range(rng.randrange(2, 15))]
        n = rng.randrange(1, 7)
        counting = _CountingCounts(count_transitions(seq))
        detect(seq, counting, n, 0.5)
        steps = min(n, len(seq) - 1)
        distinct = len({
            (seq[i], seq[i + 1]) for i in range(len(seq) - 1 - steps, len(seq) - 1)
        })
        assert counting.divisions == distinct <= steps
