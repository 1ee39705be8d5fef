"""Minimal-cost bipartite assignment (Hungarian algorithm, potentials form)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Assignment:
    """Matched (row, column) pairs plus the leftovers on both sides."""

    pairs: tuple[tuple[int, int], ...]
    unmatched_rows: tuple[int, ...]
    unmatched_cols: tuple[int, ...]

    @property
    def unmatched_tracks(self) -> tuple[int, ...]:
        return self.unmatched_rows

    @property
    def unmatched_detections(self) -> tuple[int, ...]:
        return self.unmatched_cols


def solve_min_cost(cost: np.ndarray) -> list[tuple[int, int]]:
    """Optimal assignment of min(n, m) pairs on an n x m cost matrix.

    Shortest-augmenting-path formulation with row/column potentials; O(n^2 m).
    Ties resolve to the lowest (row, column) index via strict-< scans, so the
    result is deterministic for a given matrix.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost matrix must be 2-dimensional")
    if cost.size and not np.isfinite(cost).all():
        raise ValueError("cost matrix must be finite")
    n, m = cost.shape
    if n == 0 or m == 0:
        return []
    transposed = n > m
    if transposed:
        cost = cost.T
        n, m = m, n

    INF = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    p = [0] * (m + 1)  # p[j] = 1-based row matched to column j
    way = [0] * (m + 1)
    a = cost

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = [INF] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = INF
            j1 = 0
            row = a[i0 - 1]
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[p[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    pairs = [(p[j] - 1, j - 1) for j in range(1, m + 1) if p[j]]
    if transposed:
        pairs = [(c, r) for r, c in pairs]
    return sorted(pairs)


def assign(cost: Sequence[Sequence[float]] | np.ndarray, gate: float = math.inf) -> Assignment:
    """Solve, then strip pairs whose cost exceeds the gate into the unmatched sets."""
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError("cost matrix must be 2-dimensional")
    n, m = cost.shape
    matched = solve_min_cost(cost) if n and m else []
    pairs = []
    matched_rows: set[int] = set()
    matched_cols: set[int] = set()
    for r, c in matched:
        if cost[r, c] > gate:
            continue
        pairs.append((r, c))
        matched_rows.add(r)
        matched_cols.add(c)
    return Assignment(
        pairs=tuple(pairs),
        unmatched_rows=tuple(i for i in range(n) if i not in matched_rows),
        unmatched_cols=tuple(j for j in range(m) if j not in matched_cols),
    )
