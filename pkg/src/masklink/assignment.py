"""Minimum-cost bipartite assignment with a deterministic tie rule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AssignmentResult:
    """Outcome of matching rows (previous items) to columns (next items)."""

    pairs: tuple[tuple[int, int], ...]
    unmatched_prev: tuple[int, ...]
    unmatched_next: tuple[int, ...]


def _solve(cost: np.ndarray) -> tuple[np.ndarray, float]:
    """Shortest-augmenting-path assignment for a rows <= cols matrix.

    Returns (col4row, total cost).  Scan order is fixed, so the result is a
    deterministic function of the matrix.
    """
    rows, cols = cost.shape
    u = np.zeros(rows)
    v = np.zeros(cols)
    col4row = np.full(rows, -1, dtype=np.int64)
    row4col = np.full(cols, -1, dtype=np.int64)
    path = np.full(cols, -1, dtype=np.int64)

    for cur_row in range(rows):
        min_val = 0.0
        i = cur_row
        visited_rows = np.zeros(rows, dtype=bool)
        visited_cols = np.zeros(cols, dtype=bool)
        shortest = np.full(cols, np.inf)
        sink = -1
        while sink == -1:
            visited_rows[i] = True
            open_cols = ~visited_cols
            reduced = min_val + cost[i, open_cols] - u[i] - v[open_cols]
            idx = np.flatnonzero(open_cols)
            better = reduced < shortest[idx]
            upd = idx[better]
            shortest[upd] = reduced[better]
            path[upd] = i
            masked = np.where(visited_cols, np.inf, shortest)
            j = int(np.argmin(masked))
            min_val = shortest[j]
            visited_cols[j] = True
            if row4col[j] == -1:
                sink = j
            else:
                i = int(row4col[j])
        u[cur_row] += min_val
        other = visited_rows.copy()
        other[cur_row] = False
        ridx = np.flatnonzero(other)
        u[ridx] += min_val - shortest[col4row[ridx]]
        cidx = np.flatnonzero(visited_cols)
        v[cidx] -= min_val - shortest[cidx]
        # walk the augmenting path back to cur_row
        j = sink
        while True:
            i = int(path[j])
            row4col[j] = i
            col4row[i], j = j, int(col4row[i])
            if i == cur_row:
                break

    total = float(cost[np.arange(rows), col4row].sum())
    return col4row, total


def _optimal_total(cost: np.ndarray) -> float:
    if cost.shape[0] == 0 or cost.shape[1] == 0:
        return 0.0
    if cost.shape[0] <= cost.shape[1]:
        return _solve(cost)[1]
    return _solve(cost.T)[1]


def hungarian_min(cost: np.ndarray) -> AssignmentResult:
    """Match min(rows, cols) pairs minimizing the total cost.

    Among all optimal assignments, the lexicographically smallest (row, col)
    pair sequence is returned: row 0 takes the smallest column it can hold in
    some optimal assignment, then row 1, and so on.  Equal-total candidates
    are recognized up to a small relative tolerance, so the canonical choice
    is meaningful for exactly representable costs and harmless otherwise.

    Args:
        cost: 2-D array of finite costs, possibly rectangular or empty.

    Returns:
        AssignmentResult; every row and column index appears exactly once
        across pairs and the unmatched lists.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError("cost matrix must be 2-D")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix contains non-finite entries")
    rows, cols = c.shape
    if rows == 0 or cols == 0:
        return AssignmentResult((), tuple(range(rows)), tuple(range(cols)))

    size = min(rows, cols)
    base = _optimal_total(c)
    eps = 1e-9 * (1.0 + abs(base)) + 1e-12

    pairs: list[tuple[int, int]] = []
    free_cols = list(range(cols))
    fixed_sum = 0.0
    for i in range(rows):
        if len(pairs) == size:
            break
        rest_rows = [r for r in range(i + 1, rows)]
        chosen = -1
        for j in free_cols:
            rest_cols = [x for x in free_cols if x != j]
            sub = c[np.ix_(rest_rows, rest_cols)]
            total = fixed_sum + c[i, j] + _optimal_total(sub)
            if abs(total - base) <= eps:
                chosen = j
                break
        if chosen == -1:
            # feasible only when rows outnumber columns: row i stays unmatched
            if rows <= cols:
                raise AssertionError("no optimal completion found for a required row")
            continue
        pairs.append((i, chosen))
        free_cols.remove(chosen)
        fixed_sum += c[i, chosen]

    matched_rows = {i for i, _ in pairs}
    matched_cols = {j for _, j in pairs}
    return AssignmentResult(
        pairs=tuple(pairs),
        unmatched_prev=tuple(i for i in range(rows) if i not in matched_rows),
        unmatched_next=tuple(j for j in range(cols) if j not in matched_cols),
    )
