import itertools
import math

import numpy as np
import pytest

from accident_eval.assignment import Assignment, assign, solve_min_cost


def brute_force_min(cost: np.ndarray) -> float:
    """Definitional optimum: enumerate every injective row -> column map."""
    n, m = cost.shape
    if n > m:
        return brute_force_min(cost.T)
    best = math.inf
    for perm in itertools.permutations(range(m), n):
        best = min(best, sum(cost[i, perm[i]] for i in range(n)))
    return best


def total(cost, pairs):
    return sum(cost[r, c] for r, c in pairs)


class TestKnownCases:
    def test_three_by_three(self):
        cost = np.array([[4, 1, 3], [2, 0, 5], [3, 2, 2]], dtype=float)
        pairs = solve_min_cost(cost)
        assert total(cost, pairs) == 5.0
        assert pairs == [(0, 1), (1, 0), (2, 2)]

    def test_identity_on_uniform_ties(self):
        cost = np.ones((4, 4))
        assert solve_min_cost(cost) == [(0, 0), (1, 1), (2, 2), (3, 3)]

    def test_rectangular_wide(self):
        cost = np.array([[9, 1, 4], [6, 7, 2]], dtype=float)
        pairs = solve_min_cost(cost)
        assert pairs == [(0, 1), (1, 2)]

    def test_rectangular_tall(self):
        cost = np.array([[9, 1, 4], [6, 7, 2]], dtype=float).T
        pairs = solve_min_cost(cost)
        assert total(cost, pairs) == 3.0
        assert len(pairs) == 2

    def test_empty_matrix(self):
        assert solve_min_cost(np.zeros((0, 5))) == []
        assert solve_min_cost(np.zeros((5, 0))) == []

    def test_single_cell(self):
        assert solve_min_cost(np.array([[3.5]])) == [(0, 0)]


class TestValidation:
    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            solve_min_cost(np.array([[1.0, math.inf], [0.0, 1.0]]))

    def test_wrong_rank_rejected(self):
        with pytest.raises(ValueError, match="2-dimensional"):
            solve_min_cost(np.zeros(4))


class TestGate:
    def test_expensive_pairs_stripped(self):
        cost = np.array([[0.1, 5.0], [5.0, 0.9]])
        result = assign(cost, gate=0.5)
        assert result.pairs == ((0, 0),)
        assert result.unmatched_rows == (1,)
        assert result.unmatched_cols == (1,)

    def test_partition_invariant(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n, m = rng.integers(1, 7, size=2)
            result = assign(rng.random((n, m)), gate=rng.random())
            rows = [r for r, _ in result.pairs] + list(result.unmatched_rows)
            cols = [c for _, c in result.pairs] + list(result.unmatched_cols)
            assert sorted(rows) == list(range(n))
            assert sorted(cols) == list(range(m))

    def test_alias_fields(self):
        result = Assignment(pairs=((0, 1),), unmatched_rows=(1,), unmatched_cols=(0,))
        assert result.unmatched_tracks == (1,)
        assert result.unmatched_detections == (0,)


def test_matches_brute_force_on_random_matrices():
    """Exact agreement with permutation enumeration, all shapes up to 6x6."""
    rng = np.random.default_rng(42)
    for trial in range(1000):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 7))
        cost = np.round(rng.random((n, m)) * 10, 3)
        pairs = solve_min_cost(cost)
        assert len(pairs) == min(n, m)
        assert total(cost, pairs) == pytest.approx(brute_force_min(cost), abs=1e-9), (
            f"trial {trial}: shape {(n, m)}"
        )


def test_no_better_random_alternative():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 7))
        cost = rng.random((n, n))
        optimum = total(cost, solve_min_cost(cost))
        perm = rng.permutation(n)
        alternative = sum(cost[i, perm[i]] for i in range(n))
        assert optimum <= alternative + 1e-12
