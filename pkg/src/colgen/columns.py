"""Column records shared by the pricing oracles, the CG engine and the
featurizer. Lifecycle counters are mutated by the engine after each re-solve."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np


class ColumnStatus(Enum):
    EXISTING = "existing"
    CANDIDATE = "candidate"
    SELECTED = "selected"


@dataclass
class Column:
    cost: float
    coeffs: np.ndarray
    id: int = -1
    born_iter: int = 0
    iters_in_basis: int = 0
    iters_out_of_basis: int = 0
    entered_last_iter: bool = False
    left_last_iter: bool = False
    status: ColumnStatus = ColumnStatus.CANDIDATE
    problem_feature: float = 0.0
    source: Optional[object] = field(default=None, repr=False)

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        assert not (self.entered_last_iter and self.left_last_iter)

    def dedup_key(self) -> tuple:
        """Columns with equal cost and coefficients are the same column."""
        return (float(self.cost), tuple(self.coeffs.tolist()))

    @property
    def connectivity(self) -> int:
        return int(np.count_nonzero(self.coeffs))
