"""Dense revised-simplex solver for the restricted master problems.

Solves  min c.x  s.t.  A x = b, x >= 0  (equality rows only, minimization).

Two-phase method: phase 1 starts from an all-artificial basis, phase 2
prices with Dantzig's rule and switches to Bland's rule after a run of
degenerate pivots so termination is guaranteed. The basis inverse is kept
explicitly and refreshed periodically. Column generation re-solves warm:
a previous basis stays valid when columns are only appended, so phase 1
is skipped whenever the warm basis is still primal feasible.

Tolerances: 1e-7 absolute feasibility, 1e-7 on reduced costs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, NumericalBreakdown

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-10
_PIVOT_NOISE = 1e-12        # below this a direction entry is rounding noise
_REFRESH_EVERY = 64


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpProblem:
    """min costs.x s.t. constraint_matrix x = rhs, x >= 0."""

    costs: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.costs, dtype=float).reshape(-1)
        a = np.asarray(self.constraint_matrix, dtype=float)
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        if a.ndim != 2:
            raise DimensionMismatch(f"constraint matrix must be 2-D, got {a.ndim}-D")
        if a.shape[1] != c.shape[0]:
            raise DimensionMismatch(
                f"matrix has {a.shape[1]} columns but {c.shape[0]} costs"
            )
        if a.shape[0] != b.shape[0]:
            raise DimensionMismatch(
                f"matrix has {a.shape[0]} rows but rhs has {b.shape[0]} entries"
            )
        for name, arr in (("costs", c), ("constraint_matrix", a), ("rhs", b)):
            if not np.all(np.isfinite(arr)):
                raise DimensionMismatch(f"{name} contains non-finite entries")
            arr.setflags(write=False)
        object.__setattr__(self, "costs", c)
        object.__setattr__(self, "constraint_matrix", a)
        object.__setattr__(self, "rhs", b)

    @property
    def n_rows(self) -> int:
        return self.constraint_matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.constraint_matrix.shape[1]


@dataclass(frozen=True)
class LpSolution:
    objective: float
    primal: np.ndarray
    duals: np.ndarray
    basis: tuple
    status: LpStatus

    def __post_init__(self):
        self.primal.setflags(write=False)
        self.duals.setflags(write=False)


def reduced_cost(solution: LpSolution, cost: float, coeffs: Sequence[float]) -> float:
    """cost minus duals.coeffs for a candidate column."""
    coeffs = np.asarray(coeffs, dtype=float).reshape(-1)
    if coeffs.shape[0] != solution.duals.shape[0]:
        raise DimensionMismatch(
            f"column has {coeffs.shape[0]} coefficients but {solution.duals.shape[0]} duals"
        )
    return float(cost - solution.duals @ coeffs)


@dataclass
class _Tableau:
    """Mutable pivoting state over the (possibly artificial-extended) matrix."""

    matrix: np.ndarray          # m x (n + n_art), artificials appended
    basis: np.ndarray           # m basic column indices
    binv: np.ndarray            # explicit basis inverse
    xb: np.ndarray              # basic variable values, >= 0
    rhs: np.ndarray = field(default=None, repr=False)
    pivots: int = 0
    degenerate: int = 0
    bland: bool = False

    def refresh(self):
        try:
            self.binv = np.linalg.inv(self.matrix[:, self.basis])
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown("singular basis during refactorization") from exc
        self.xb = self.binv @ self.rhs
        np.clip(self.xb, 0.0, None, out=self.xb)


class SimplexSolver:
    """Reusable solver; instances hold no state between solve() calls but are
    not thread-safe while a solve is in flight."""

    def __init__(self, feas_tol: float = FEAS_TOL, opt_tol: float = OPT_TOL):
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol

    # -- public API ---------------------------------------------------------

    def solve(self, problem: LpProblem, warm_start: Optional[Sequence[int]] = None) -> LpSolution:
        a = problem.constraint_matrix
        b = problem.rhs.copy()
        c = problem.costs
        m, n = a.shape

        # orient rows so b >= 0 (artificials need nonnegative rhs); duals of
        # flipped rows are negated back when the solution is assembled
        flip = b < 0
        if np.any(flip):
            a = a.copy()
            a[flip] *= -1.0
            b[flip] *= -1.0

        if warm_start is not None:
            tab = self._try_warm(a, b, n, warm_start)
            if tab is not None:
                return self._phase2(tab, a, b, c, m, n, flip)

        tab = self._phase1(a, b, m, n)
        if tab is None:
            return LpSolution(
                objective=float("nan"),
                primal=np.full(n, np.nan),
                duals=np.full(m, np.nan),
                basis=(),
                status=LpStatus.INFEASIBLE,
            )
        return self._phase2(tab, a, b, c, m, n, flip)

    # -- internals ----------------------------------------------------------

    def _try_warm(self, a, b, n, warm_start) -> Optional[_Tableau]:
        basis = np.asarray(sorted(warm_start), dtype=int)
        m = a.shape[0]
        if basis.shape[0] != m or len(set(basis.tolist())) != m:
            raise DimensionMismatch(
                f"warm-start basis must hold {m} distinct indices, got {basis.shape[0]}"
            )
        if np.any(basis < 0) or np.any(basis >= n):
            raise DimensionMismatch("warm-start basis index out of range")
        bmat = a[:, basis]
        try:
            binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError:
            return None
        if not np.allclose(bmat @ binv, np.eye(m), atol=1e-7):
            return None
        xb = binv @ b
        if xb.min(initial=0.0) < -self.feas_tol:
            return None
        np.clip(xb, 0.0, None, out=xb)
        return _Tableau(matrix=a, basis=basis.copy(), binv=binv, xb=xb, rhs=b)

    def _phase1(self, a, b, m, n) -> Optional[_Tableau]:
        ext = np.hstack([a, np.eye(m)])
        c1 = np.concatenate([np.zeros(n), np.ones(m)])
        tab = _Tableau(
            matrix=ext,
            basis=np.arange(n, n + m),
            binv=np.eye(m),
            xb=b.copy(),
            rhs=b,
        )
        status = self._iterate(tab, c1, allowed=n)  # price original columns only
        if status is LpStatus.UNBOUNDED:  # impossible: phase-1 objective >= 0
            raise NumericalBreakdown("phase 1 reported unbounded")
        art_level = sum(tab.xb[i] for i in range(m) if tab.basis[i] >= n)
        if art_level > self.feas_tol * max(1.0, float(np.abs(b).max(initial=1.0))):
            return None
        self._drive_out_artificials(tab, n)
        return tab

    def _drive_out_artificials(self, tab: _Tableau, n: int):
        """Pivot zero-level artificials out of the basis where possible."""
        in_basis = set(tab.basis.tolist())
        for r in range(tab.basis.shape[0]):
            if tab.basis[r] < n:
                continue
            row = tab.binv[r] @ tab.matrix[:, :n]
            for j in range(n):
                if j not in in_basis and abs(row[j]) > 1e-9:
                    in_basis.discard(int(tab.basis[r]))
                    self._pivot(tab, j, r)
                    in_basis.add(j)
                    break
            # no pivot found: redundant row, artificial stays basic at zero

    def _phase2(self, tab: _Tableau, a, b, c, m, n, flip) -> LpSolution:
        n_total = tab.matrix.shape[1]
        c2 = np.zeros(n_total)
        c2[:n] = c
        status = self._iterate(tab, c2, allowed=n)
        if status is LpStatus.UNBOUNDED:
            return LpSolution(
                objective=float("-inf"),
                primal=np.full(n, np.nan),
                duals=np.full(m, np.nan),
                basis=(),
                status=LpStatus.UNBOUNDED,
            )
        duals = c2[tab.basis] @ tab.binv
        if np.any(flip):
            duals = duals.copy()
            duals[flip] *= -1.0
        primal = np.zeros(n)
        for i, bi in enumerate(tab.basis):
            if bi < n:
                primal[bi] = tab.xb[i]
        basis = tuple(sorted(int(bi) for bi in tab.basis if bi < n))
        return LpSolution(
            objective=float(c @ primal),
            primal=primal,
            duals=duals,
            basis=basis,
            status=LpStatus.OPTIMAL,
        )

    def _iterate(self, tab: _Tableau, costs: np.ndarray, allowed: int) -> LpStatus:
        """Pivot until optimal/unbounded. Only columns < allowed may enter."""
        m = tab.basis.shape[0]
        degen_switch = 3 * (m + allowed)
        max_pivots = 1000 + 200 * (m + allowed)
        while True:
            y = costs[tab.basis] @ tab.binv
            rc = costs[:allowed] - y @ tab.matrix[:, :allowed]
            rc[tab.basis[tab.basis < allowed]] = 0.0

            if tab.bland:
                entering = -1
                for j in range(allowed):
                    if rc[j] < -self.opt_tol:
                        entering = j
                        break
            else:
                j = int(np.argmin(rc))
                entering = j if rc[j] < -self.opt_tol else -1
            if entering < 0:
                return LpStatus.OPTIMAL

            d = tab.binv @ tab.matrix[:, entering]
            pos = d > PIVOT_TOL
            if not np.any(pos):
                if d.max(initial=0.0) <= _PIVOT_NOISE:
                    return LpStatus.UNBOUNDED
                # entries between noise and tolerance: numerically ambiguous
                if tab.bland:
                    raise NumericalBreakdown(
                        f"pivot magnitude {d.max():.2e} below {PIVOT_TOL} "
                        "after Bland-rule fallback")
                tab.bland = True
                continue

            ratios = np.full(m, np.inf)
            ratios[pos] = tab.xb[pos] / d[pos]
            t = ratios.min()
            # ties: leave the row whose basic variable has the lowest index
            tie_rows = np.flatnonzero(ratios <= t + 1e-12)
            leaving = int(tie_rows[np.argmin(tab.basis[tie_rows])])

            if t < 1e-12:
                tab.degenerate += 1
                if tab.degenerate > degen_switch:
                    tab.bland = True
            else:
                tab.degenerate = 0

            self._pivot(tab, entering, leaving, direction=d, step=t)
            tab.pivots += 1
            if tab.pivots % _REFRESH_EVERY == 0:
                tab.refresh()
            if tab.pivots > max_pivots:
                raise NumericalBreakdown(f"no convergence after {tab.pivots} pivots")

    def _pivot(self, tab: _Tableau, entering: int, leaving: int, direction=None, step=None):
        if direction is None:
            direction = tab.binv @ tab.matrix[:, entering]
        piv = direction[leaving]
        if abs(piv) <= PIVOT_TOL:
            raise NumericalBreakdown(f"pivot magnitude {abs(piv):.2e} below {PIVOT_TOL}")
        if step is None:
            step = tab.xb[leaving] / piv
        tab.xb -= step * direction
        tab.xb[leaving] = step
        np.clip(tab.xb, 0.0, None, out=tab.xb)
        tab.binv[leaving] /= piv
        for i in range(tab.basis.shape[0]):
            if i != leaving and abs(direction[i]) > 0.0:
                tab.binv[i] -= direction[i] * tab.binv[leaving]
        tab.basis[leaving] = entering


def solve(problem: LpProblem, warm_start: Optional[Sequence[int]] = None) -> LpSolution:
    """One-shot convenience wrapper around SimplexSolver."""
    return SimplexSolver().solve(problem, warm_start=warm_start)
