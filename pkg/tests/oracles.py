"""Independent reference implementations the tests compare against.

Each oracle takes a deliberately different route from the production code
(exhaustive enumeration, pixel counting, pairwise rank statistics) so that
agreement is evidence, not tautology.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np


def brute_force_assignment(arr: np.ndarray) -> tuple[int, float, tuple]:
    """Exhaustive search over all partial injective row->col mappings.

    Objective order: maximum cardinality, then minimum exact-rational cost,
    then lexicographically smallest pair tuple. Returns (cardinality,
    float total summed in row order, pairs). Branch-and-bound prunes only
    branches that cannot reach the best cardinality seen so far; ties are
    always fully enumerated.
    """
    arr = np.asarray(arr, dtype=float)
    rows, cols = arr.shape
    feas = np.isfinite(arr)
    best: list = [None]  # (-cardinality, Fraction cost, pairs)

    def rec(r: int, used: frozenset, pairs: tuple, cost: Fraction) -> None:
        if best[0] is not None:
            bound = len(pairs) + min(rows - r, cols - len(used))
            if -bound > best[0][0]:
                return
        if r == rows:
            key = (-len(pairs), cost, pairs)
            if best[0] is None or key < best[0]:
                best[0] = key
            return
        for c in range(cols):
            if feas[r, c] and c not in used:
                rec(r + 1, used | {c}, pairs + ((r, c),),
                    cost + Fraction(float(arr[r, c])))
        rec(r + 1, used, pairs, cost)

    rec(0, frozenset(), (), Fraction(0))
    card = -best[0][0]
    pairs = best[0][2]
    total = 0.0
    for r, c in pairs:
        total += float(arr[r, c])
    return card, total, pairs


def pixel_iou(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> float:
    """IoU of two integer boxes by rasterizing and counting pixels."""
    lo_x = min(a[0], b[0])
    lo_y = min(a[1], b[1])
    hi_x = max(a[0] + a[2], b[0] + b[2])
    hi_y = max(a[1] + a[3], b[1] + b[3])
    grid_a = np.zeros((hi_y - lo_y, hi_x - lo_x), dtype=bool)
    grid_b = np.zeros_like(grid_a)
    grid_a[a[1] - lo_y:a[1] - lo_y + a[3], a[0] - lo_x:a[0] - lo_x + a[2]] = True
    grid_b[b[1] - lo_y:b[1] - lo_y + b[3], b[0] - lo_x:b[0] - lo_x + b[2]] = True
    inter = int(np.count_nonzero(grid_a & grid_b))
    union = int(np.count_nonzero(grid_a | grid_b))
    return inter / union


def wilcoxon_auc(scores: list[float], labels: list[bool]) -> float:
    """Pairwise concordance over all positive x negative pairs, ties 0.5.

    Computed as one exact rational then rounded once to float, which is
    the bitwise-comparable ground truth for the trapezoidal AUC.
    """
    pos = [s for s, l in zip(scores, labels) if l]
    neg = [s for s, l in zip(scores, labels) if not l]
    concordant = 0
    tied = 0
    for p in pos:
        for n in neg:
            if p > n:
                concordant += 1
            elif p == n:
                tied += 1
    return float(Fraction(2 * concordant + tied, 2 * len(pos) * len(neg)))
