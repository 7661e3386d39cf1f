"""Gated minimum-cost bipartite matching."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment

_REL_TOL = 1e-12


def _optimum(cost: np.ndarray, allowed: np.ndarray, penalty: float) -> tuple[int, float]:
    """(number of allowed matches, their total cost) of the best gated matching."""
    if cost.size == 0 or not allowed.any():
        return 0, 0.0
    work = np.where(allowed, cost, penalty)
    rows, cols = linear_sum_assignment(work)
    keep = allowed[rows, cols]
    return int(keep.sum()), math.fsum(cost[rows[keep], cols[keep]].tolist())


def solve(cost, gate: float = math.inf):
    """Match rows to columns at minimum total cost, ignoring entries above ``gate``.

    Entries with ``cost > gate`` are forbidden. Among matchings that use the
    largest possible number of allowed entries, the one with the smallest total
    cost is returned; ties between equally cheap matchings go to the
    lexicographically smallest list of ``(row, col)`` pairs.

    Args:
        cost: 2-D array-like of non-negative costs; may have zero rows or columns.
        gate: Largest admissible cost of a match.

    Returns:
        ``(matches, unmatched_rows, unmatched_cols)`` with ``matches`` sorted by row.
    """
    cost = np.asarray(cost, dtype=float)
    if cost.ndim != 2:
        raise ValueError(f"cost must be 2-D, got shape {cost.shape}")
    n_rows, n_cols = cost.shape
    allowed = cost <= gate

    # Forbidden sentinel exceeding any spread of allowed totals, so one more
    # allowed match always beats any cost saving.
    penalty = 2.0 * float(np.abs(cost[allowed]).sum()) + 1.0
    best_count, best_cost = _optimum(cost, allowed, penalty)
    tol = _REL_TOL * max(1.0, abs(best_cost))

    # Lexicographic tie-break: walk rows in order and fix the smallest column
    # that still admits an optimal completion; otherwise leave the row unmatched.
    free_cols = list(range(n_cols))
    matches: list[tuple[int, int]] = []
    count, total = 0, 0.0
    for r in range(n_rows):
        if count == best_count:
            break
        rest = list(range(r + 1, n_rows))
        for c in free_cols:
            if not allowed[r, c]:
                continue
            others = [k for k in free_cols if k != c]
            sub = np.ix_(rest, others)
            k, s = _optimum(cost[sub], allowed[sub], penalty)
            cand = math.fsum([total, cost[r, c], s])
            if count + 1 + k == best_count and abs(cand - best_cost) <= tol:
                matches.append((r, c))
                count += 1
                total = math.fsum([total, cost[r, c]])
                free_cols.remove(c)
                break

    matched_rows = {r for r, _ in matches}
    matched_cols = {c for _, c in matches}
    unmatched_rows = [r for r in range(n_rows) if r not in matched_rows]
    unmatched_cols = [c for c in range(n_cols) if c not in matched_cols]
    return matches, unmatched_rows, unmatched_cols
