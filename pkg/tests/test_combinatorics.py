import itertools
from math import comb

from hypothesis import given
from hypothesis import strategies as st

from bogoexp.combinatorics import (
    all_compositions,
    compositions,
    count_compositions,
    count_weak_compositions,
    weak_compositions,
)


@given(st.integers(0, 9), st.integers(0, 6))
def test_compositions_match_brute_force(total, parts):
    brute = sorted(c for c in itertools.product(range(1, total + 1), repeat=parts) if sum(c) == total)
    assert list(compositions(total, parts)) == brute
    assert count_compositions(total, parts) == len(brute)


@given(st.integers(0, 8), st.integers(0, 5))
def test_weak_compositions_match_brute_force(total, parts):
    brute = sorted(c for c in itertools.product(range(total + 1), repeat=parts) if sum(c) == total)
    assert list(weak_compositions(total, parts)) == brute
    assert count_weak_compositions(total, parts) == len(brute)


def test_counts_are_binomials():
    for l in range(1, 10):
        for nu in range(1, l + 1):
            assert count_compositions(l, nu) == comb(l - 1, nu - 1)
    for nu in range(2, 8):
        assert count_weak_compositions(nu - 1, nu - 1) == comb(2 * nu - 3, nu - 2)


def test_all_compositions_total():
    for l in range(1, 9):
        assert len(list(all_compositions(l))) == 2 ** (l - 1)
