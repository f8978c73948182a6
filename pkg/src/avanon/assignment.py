"""Minimum-cost bipartite assignment with exact arithmetic.

Solves the rectangular assignment problem with three stacked objectives:

1. match as many feasible (finite-cost) pairs as possible,
2. among those, minimize the total cost,
3. among exact cost ties, prefer the lexicographically smallest solution
   (lowest row index first, then lowest column index).

Infeasible pairs are marked with ``INFEASIBLE`` (+inf) and can never be
forced into the matching by matrix shape; they are encoded internally as a
big-M cost and stripped from the result.

Arithmetic runs on exact rationals (costs enter as binary floats, so
``Fraction`` conversion is lossless), paired with integer tie-break
weights compared lexicographically. This keeps optimality decisions free
of float rounding; the reported total is the plain float sum of the chosen
entries in row order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

INFEASIBLE = math.inf

_Val = tuple  # (Fraction cost, int tie-break weight), compared lexicographically


@dataclass(frozen=True)
class Assignment:
    """A partial matching: row->col pairs plus what stayed unmatched."""

    pairs: tuple[tuple[int, int], ...]
    unmatched_rows: tuple[int, ...]
    unmatched_cols: tuple[int, ...]
    total: float

    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)


@dataclass(frozen=True)
class CostMatrix:
    """Link costs between detections of consecutive frames.

    Entries are negated IoU scores, so every feasible entry lies in
    [-1, 0]; pairs whose IoU fell below the tracker's minimum are marked
    ``INFEASIBLE`` and excluded from matching entirely.
    """

    costs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.costs, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"cost matrix must be 2-D, got shape {arr.shape}")
        finite = arr[np.isfinite(arr)]
        if finite.size and (finite.min() < -1.0 or finite.max() > 0.0):
            raise ValueError("feasible cost entries must lie in [-1, 0]")
        if np.isnan(arr).any() or np.isneginf(arr).any():
            raise ValueError("cost entries must be finite or INFEASIBLE (+inf)")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "costs", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.costs.shape


def hungarian_assign(cost: Union[CostMatrix, Sequence, np.ndarray]) -> Assignment:
    """Solve the assignment problem; see the module docstring for semantics."""
    arr = cost.costs if isinstance(cost, CostMatrix) else np.asarray(cost, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {arr.shape}")
    rows, cols = arr.shape
    if rows == 0 or cols == 0:
        return Assignment((), tuple(range(rows)), tuple(range(cols)), 0.0)
    if np.isnan(arr).any() or np.isneginf(arr).any():
        raise ValueError("cost entries must be finite or INFEASIBLE (+inf)")

    feasible = np.isfinite(arr)
    if not feasible.any():
        return Assignment((), tuple(range(rows)), tuple(range(cols)), 0.0)

    n = max(rows, cols)
    lo = Fraction(min(float(arr[feasible].min()), 0.0))
    hi = Fraction(max(float(arr[feasible].max()), 0.0))
    big_m = n * (hi - lo) + abs(hi) + abs(lo) + 1

    # Tie-break weights: row r's column choice dominates every later row's,
    # so minimizing the weight sum yields the lexicographic preference.
    base = 2 * cols + 3
    row_scale = [base ** (rows - r) for r in range(rows)]
    w_unmatched = cols + 1

    zero: _Val = (Fraction(0), 0)

    def cell(r: int, c: int) -> _Val:
        if r >= rows:  # dummy row: absorbs surplus columns at no cost
            return zero
        if c < cols and feasible[r, c]:
            return (Fraction(float(arr[r, c])), row_scale[r] * (c + 1))
        return (big_m, row_scale[r] * w_unmatched)

    a = [[None] * (n + 1)]
    a.extend(
        [None] + [cell(i - 1, j - 1) for j in range(1, n + 1)]
        for i in range(1, n + 1)
    )

    col_of_row = _solve_square(a, n)

    pairs = []
    for r in range(rows):
        c = col_of_row[r]
        if c < cols and feasible[r, c]:
            pairs.append((r, c))
    pairs.sort()

    matched_rows = {r for r, _ in pairs}
    matched_cols = {c for _, c in pairs}
    total = 0.0
    for r, c in pairs:
        total += float(arr[r, c])
    return Assignment(
        pairs=tuple(pairs),
        unmatched_rows=tuple(r for r in range(rows) if r not in matched_rows),
        unmatched_cols=tuple(c for c in range(cols) if c not in matched_cols),
        total=total,
    )


def _solve_square(a: list, n: int) -> list[int]:
    """Kuhn-style shortest-augmenting-path solver on a complete square matrix.

    ``a`` is 1-indexed; values form an ordered additive group (here exact
    (cost, weight) pairs), so no float rounding can flip a comparison.
    Returns col index (0-based) per 0-based row.
    """
    zero: _Val = (Fraction(0), 0)
    u = [zero] * (n + 1)
    v = [zero] * (n + 1)
    p = [0] * (n + 1)  # p[j] = row currently matched to column j
    way = [0] * (n + 1)

    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv: list = [None] * (n + 1)  # None = +infinity
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = p[j0]
            delta = None
            j1 = -1
            ai0 = a[i0]
            ui0 = u[i0]
            for j in range(1, n + 1):
                if used[j]:
                    continue
                c = ai0[j]
                vj = v[j]
                cur = (c[0] - ui0[0] - vj[0], c[1] - ui0[1] - vj[1])
                if minv[j] is None or cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if delta is None or minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    pj = p[j]
                    u[pj] = (u[pj][0] + delta[0], u[pj][1] + delta[1])
                    v[j] = (v[j][0] - delta[0], v[j][1] - delta[1])
                elif minv[j] is not None:
                    minv[j] = (minv[j][0] - delta[0], minv[j][1] - delta[1])
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1

    col_of_row = [0] * n
    for j in range(1, n + 1):
        if p[j] > 0:
            col_of_row[p[j] - 1] = j - 1
    return col_of_row
