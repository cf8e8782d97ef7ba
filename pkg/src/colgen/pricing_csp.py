"""Knapsack pricing for the cutting stock problem.

The subproblem maximizes the total dual value of a cutting pattern subject
to the roll length; a pattern prices favourably when 1 - duals.counts < 0.
A k-best unbounded-knapsack DP keeps, for every used length 0..n, the top-k
distinct count vectors by (value desc, counts lex asc). Keeping distinct
count vectors (rather than distinct values) is what makes the final k-best
list complete when two different patterns tie on value; the per-cell order
is preserved under appending one more item, so the union over cells is
exactly the global k-best set of distinct patterns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .columns import Column
from .errors import DimensionMismatch
from .instances import CspInstance

RC_TOL = 1e-9


@dataclass(frozen=True)
class Pattern:
    counts: tuple

    def used_length(self, weights) -> int:
        return int(sum(w * k for w, k in zip(weights, self.counts)))

    def waste(self, instance: CspInstance) -> int:
        return instance.roll_length - self.used_length(instance.item_weights)


def price(instance: CspInstance, duals, k: int = 10, gap: float = 0.15):
    """Up to k best distinct patterns with negative reduced cost.

    Sorted ascending by reduced cost; candidates worse than
    best_rc * (1 - gap) are dropped. Empty result signals CG convergence.
    """
    duals = np.asarray(duals, dtype=float).reshape(-1)
    m = instance.n_item_types
    if duals.shape[0] != m:
        raise DimensionMismatch(f"{duals.shape[0]} duals for {m} item types")
    if k < 1:
        raise DimensionMismatch("k must be >= 1")
    n = instance.roll_length
    weights = instance.item_weights

    zero = (0,) * m
    # cells[c] = top-k (value, counts) with total weight exactly c
    cells = [[] for _ in range(n + 1)]
    cells[0] = [(0.0, zero)]
    for c in range(1, n + 1):
        pool = {}
        for j, w in enumerate(weights):
            if w > c:
                continue
            for value, counts in cells[c - w]:
                nc = counts[:j] + (counts[j] + 1,) + counts[j + 1:]
                if nc not in pool:
                    pool[nc] = value + duals[j]
        if pool:
            ranked = sorted(pool.items(), key=lambda kv: (-kv[1], kv[0]))
            cells[c] = [(v, counts) for counts, v in ranked[:k]]

    candidates = []
    for c in range(n + 1):
        for value, counts in cells[c]:
            rc = 1.0 - value
            if rc < -RC_TOL:
                candidates.append((rc, counts))
    if not candidates:
        return []
    candidates.sort(key=lambda item: (item[0], item[1]))
    best_rc = candidates[0][0]
    cutoff = best_rc * (1.0 - gap)
    kept = [(Pattern(counts), rc) for rc, counts in candidates if rc <= cutoff + RC_TOL]
    return kept[:k]


def pattern_column(pattern: Pattern, m: int, column_id: int = -1) -> Column:
    """Master column of a pattern: unit cost, coefficient = item counts."""
    counts = np.zeros(m)
    counts[: len(pattern.counts)] = pattern.counts
    return Column(cost=1.0, coeffs=counts, id=column_id, source=pattern)
