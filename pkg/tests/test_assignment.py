import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trackbank.assignment import brute_force_assignment, solve_max_assignment


def test_singleton():
    assert solve_max_assignment([[1.0]]).pairs == ((0, 0),)
    assert brute_force_assignment([[1.0]]).pairs == ((0, 0),)


def test_two_by_two():
    w = [[1.0, 2.0], [2.0, 4.0]]
    sol = solve_max_assignment(w)
    assert sol.pairs == ((0, 0), (1, 1))
    assert sol.total_weight(w) == 5.0


def test_rectangular_row():
    assert solve_max_assignment([[0.9, 0.1]]).pairs == ((0, 0),)


def test_rectangular_tall():
    w = np.array([[0.1], [0.9], [0.3]])
    assert solve_max_assignment(w).pairs == ((1, 0),)


def test_all_equal_breaks_to_identity():
    w = np.ones((4, 4))
    for solver in (solve_max_assignment, brute_force_assignment):
        assert solver(w).pairs == tuple((i, i) for i in range(4))


def test_empty_matrices():
    assert solve_max_assignment(np.zeros((0, 3))).pairs == ()
    assert solve_max_assignment(np.zeros((3, 0))).pairs == ()


def test_brute_force_size_refusal():
    with pytest.raises(ValueError):
        brute_force_assignment(np.zeros((9, 9)))


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        solve_max_assignment([[np.inf]])


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_matches_brute_force(rows, cols, seed):
    w = np.random.default_rng(seed).uniform(-1, 2, size=(rows, cols))
    fast = solve_max_assignment(w)
    slow = brute_force_assignment(w)
    assert fast.total_weight(w) == slow.total_weight(w)
    assert fast.pairs == slow.pairs


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_tied_integer_matrices_match_brute_force(n, seed):
    # small integer weights force many equal-total optima
    w = np.random.default_rng(seed).integers(0, 3, size=(n, n)).astype(float)
    assert solve_max_assignment(w).pairs == brute_force_assignment(w).pairs


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_row_permutation_equivariance(n, seed):
    rng = np.random.default_rng(seed)
    w = rng.uniform(0, 1, size=(n, n))
    perm = rng.permutation(n)
    base = solve_max_assignment(w)
    permuted = solve_max_assignment(w[perm])
    assert permuted.total_weight(w[perm]) == pytest.approx(base.total_weight(w), abs=1e-12)
    # under a unique optimum the pairing must match after un-permutation
    totals = sorted(
        brute_force_assignment(w).total_weight(w) - sum(w[i, c] for i, c in enumerate(cols))
        for cols in __import__("itertools").permutations(range(n))
    )
    if len(totals) > 1 and totals[1] > 1e-9:  # strictly unique optimum
        unpermuted = sorted((perm[r], c) for r, c in permuted.pairs)
        assert tuple(unpermuted) == base.pairs


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_constant_shift_keeps_pairing(n, const, seed):
    w = np.random.default_rng(seed).uniform(0, 1, size=(n, n))
    assert solve_max_assignment(w).pairs == solve_max_assignment(w + const).pairs
