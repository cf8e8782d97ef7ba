"""Column-generation driver.

Owns the restricted master (columns + LP solutions), prices candidates,
delegates the choice of columns to a policy, and records a per-iteration
trace. One trace row is written per pricing round; row t carries the
objective of the master *before* that round's additions, so row 0 holds
the initial objective and the terminal (empty-pricing) row holds the
converged one. Redundancy counts come from the leave-one-out test and are
computed outside the per-row timer.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import pricing_csp, pricing_vrptw
from .columns import Column, ColumnStatus
from .credit import SubsetLp, effective_from_objectives, leave_one_out
from .errors import (
    DimensionMismatch,
    InfeasibleInitialization,
    IterationCapExceeded,
)
from .features import BipartiteState, build_state
from .instances import CspInstance, VrptwInstance
from .lp import LpProblem, LpSolution, LpStatus, SimplexSolver
from .policies import Policy, SelectionContext, SelectionEpisode


@dataclass
class CgConfig:
    candidates: int = 10
    gap: float = 0.15
    max_iterations: Optional[int] = None     # None: 10 * initial columns + 500
    record_states: bool = False
    track_redundant: bool = True
    redundancy_tolerance: float = 1e-6
    rng: Optional[np.random.Generator] = None


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    objective: float
    n_candidates: int
    n_selected: int
    n_redundant: int
    ms: float


@dataclass
class CgTrace:
    obj0: float
    rows: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.rows)

    @property
    def final_objective(self) -> float:
        return self.rows[-1].objective if self.rows else self.obj0

    @property
    def total_selected(self) -> int:
        return sum(r.n_selected for r in self.rows)

    def objectives(self) -> list:
        return [r.objective for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["iter", "obj", "n_candidates", "n_selected",
                         "n_redundant", "ms"])
        for r in self.rows:
            writer.writerow([r.iteration, repr(r.objective), r.n_candidates,
                             r.n_selected, r.n_redundant, repr(r.ms)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CgTrace":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if header != ["iter", "obj", "n_candidates", "n_selected",
                      "n_redundant", "ms"]:
            raise ValueError(f"unexpected trace header {header}")
        rows = [TraceRow(int(r[0]), float(r[1]), int(r[2]), int(r[3]),
                         int(r[4]), float(r[5])) for r in reader]
        obj0 = rows[0].objective if rows else float("nan")
        return cls(obj0=obj0, rows=rows)


@dataclass
class CgResult:
    solution: LpSolution
    trace: CgTrace
    episodes: list


@dataclass
class IterationContext:
    """Snapshot handed to the per-iteration hook (training machinery)."""

    iteration: int
    obj0: float
    obj_prev: float
    obj_new: float
    state: Optional[BipartiteState]          # raw features, no STOP node
    episode: SelectionEpisode
    candidates: list                         # Column objects offered
    reduced_costs: list
    selected_columns: list
    snapshot: SubsetLp                       # master before the additions
    loo_objectives: Optional[dict]           # id -> leave-one-out objective
    effective: Optional[frozenset]
    solver: SimplexSolver

    def probe_unselected(self) -> dict:
        """Objective of the master with each unselected candidate added on
        top of the selection (one warm LP solve per candidate)."""
        out = {}
        chosen = {c.id for c in self.selected_columns}
        picked = [(c.cost, c.coeffs) for c in self.selected_columns]
        for col in self.candidates:
            if col.id in chosen:
                continue
            out[col.id] = self.snapshot.solve_with(
                picked + [(col.cost, col.coeffs)], self.solver)
        return out


class RmpHandle:
    """The restricted master problem and its lifecycle bookkeeping."""

    def __init__(self, instance, columns: Sequence[Column], rhs: np.ndarray):
        self.instance = instance
        self.columns = list(columns)
        self.rhs = np.asarray(rhs, dtype=float)
        self.solver = SimplexSolver()
        self._keys = {c.dedup_key() for c in self.columns}
        self._next_id = max((c.id for c in self.columns), default=-1) + 1
        self._in_basis = frozenset()
        self.solution: Optional[LpSolution] = None
        self.obj0: Optional[float] = None
        sol = self._solve(warm=False)
        if sol.status is not LpStatus.OPTIMAL:
            raise InfeasibleInitialization(
                f"initial master is {sol.status.value}")
        self.obj0 = sol.objective

    # -- LP plumbing --------------------------------------------------------

    def lp_problem(self) -> LpProblem:
        mat = np.column_stack([c.coeffs for c in self.columns])
        return LpProblem([c.cost for c in self.columns], mat, self.rhs)

    def _solve(self, warm: bool = True) -> LpSolution:
        warm_basis = self.solution.basis if (warm and self.solution) else None
        sol = self.solver.solve(self.lp_problem(), warm_start=warm_basis)
        if sol.status is LpStatus.OPTIMAL:
            self._update_lifecycle(sol)
        self.solution = sol
        return sol

    def _update_lifecycle(self, sol: LpSolution):
        basic_now = frozenset(sol.basis)
        was_basic = self._in_basis
        for pos, col in enumerate(self.columns):
            in_now = pos in basic_now
            in_before = pos in was_basic
            if in_now:
                col.iters_in_basis += 1
            else:
                col.iters_out_of_basis += 1
            col.entered_last_iter = in_now and not in_before
            col.left_last_iter = in_before and not in_now
        self._in_basis = basic_now

    # -- public surface -----------------------------------------------------

    @property
    def objective(self) -> float:
        return self.solution.objective

    @property
    def duals(self) -> np.ndarray:
        return self.solution.duals

    def fresh_id(self) -> int:
        cid = self._next_id
        self._next_id += 1
        return cid

    def snapshot(self) -> SubsetLp:
        return SubsetLp(
            base_columns=tuple((c.cost, tuple(c.coeffs.tolist())) for c in self.columns),
            rhs=self.rhs.copy(),
            basis=self.solution.basis,
        )

    def has_duplicate(self, column: Column) -> bool:
        return column.dedup_key() in self._keys

    def add_columns(self, columns: Sequence[Column]) -> LpSolution:
        """Append columns (duplicates silently dropped) and re-solve warm."""
        fresh = []
        seen = set(self._keys)
        ids = {c.id for c in self.columns}
        for col in columns:
            if col.coeffs.shape[0] != self.rhs.shape[0]:
                raise DimensionMismatch(
                    f"column {col.id} has {col.coeffs.shape[0]} coefficients, "
                    f"master has {self.rhs.shape[0]} rows")
            if col.id in ids:
                raise DimensionMismatch(f"duplicate column id {col.id}")
            key = col.dedup_key()
            if key in seen:
                continue
            seen.add(key)
            ids.add(col.id)
            fresh.append(col)
        if not fresh:
            return self.solution
        for col in fresh:
            col.status = ColumnStatus.EXISTING
            self.columns.append(col)
            self._keys.add(col.dedup_key())
        return self._solve(warm=True)


# -- initialization ---------------------------------------------------------


def initialize(instance) -> RmpHandle:
    """Feasible initial master: single-item patterns for CSP at maximal
    multiplicity, single-customer routes for VRPTW."""
    if isinstance(instance, CspInstance):
        cols = []
        for j, w in enumerate(instance.item_weights):
            counts = [0] * instance.n_item_types
            counts[j] = instance.roll_length // w
            pattern = pricing_csp.Pattern(tuple(counts))
            col = pricing_csp.pattern_column(pattern, instance.n_item_types,
                                             column_id=j)
            col.status = ColumnStatus.EXISTING
            col.problem_feature = float(pattern.waste(instance))
            cols.append(col)
        rhs = np.asarray(instance.item_demands, dtype=float)
        return RmpHandle(instance, cols, rhs)
    if isinstance(instance, VrptwInstance):
        n = instance.n_customers
        sink = n + 1
        t = instance.effective_time_matrix
        windows = instance.time_windows_full
        cols = []
        for i in range(1, n + 1):
            start = max(windows[i][0], windows[0][0] + t[0][i])
            if start > windows[i][1] + 1e-9:
                raise InfeasibleInitialization(
                    f"customer {i} unreachable inside its time window")
            finish = start + t[i][sink]
            if finish > windows[sink][1] + 1e-9:
                raise InfeasibleInitialization(
                    f"customer {i} cannot return to the depot in time")
            route = pricing_vrptw.Route(
                vertex_sequence=(0, i, sink),
                total_cost=float(instance.cost_matrix[0][i] + instance.cost_matrix[i][sink]),
                load=float(instance.demands[i]),
                start_times=(windows[0][0], float(start), float(finish)),
            )
            col = pricing_vrptw.route_column(route, n, column_id=i - 1)
            col.status = ColumnStatus.EXISTING
            cols.append(col)
        return RmpHandle(instance, cols, np.ones(n))
    raise InfeasibleInitialization(
        f"cannot initialize from {type(instance).__name__!r}")


def _price(instance, duals, k, gap):
    """(Column, reduced cost) candidates for the current duals."""
    if isinstance(instance, CspInstance):
        priced = pricing_csp.price(instance, duals, k=k, gap=gap)
        out = []
        for pattern, rc in priced:
            col = pricing_csp.pattern_column(pattern, instance.n_item_types)
            col.problem_feature = float(pattern.waste(instance))
            out.append((col, rc))
        return out
    priced = pricing_vrptw.price(instance, duals, k=k, gap=gap)
    return [(pricing_vrptw.route_column(route, instance.n_customers), rc)
            for route, rc in priced]


# -- the CG loop --------------------------------------------------------------


def run(instance, policy: Policy, config: Optional[CgConfig] = None,
        on_iteration: Optional[Callable[[IterationContext], None]] = None,
        rmp: Optional[RmpHandle] = None) -> CgResult:
    """Iterate pricing + selection until no negative reduced-cost column
    remains or the iteration cap is hit (IterationCapExceeded carries the
    partial trace)."""
    config = config or CgConfig()
    rmp = rmp if rmp is not None else initialize(instance)
    cap = config.max_iterations
    if cap is None:
        cap = 10 * len(rmp.columns) + 500
    trace = CgTrace(obj0=rmp.obj0)
    episodes = []
    t = 0
    while True:
        started = time.perf_counter()
        obj_prev = rmp.objective
        priced = _price(instance, rmp.duals, config.candidates, config.gap)
        fresh, rcs = [], []
        batch_keys = set()
        for col, rc in priced:
            key = col.dedup_key()
            if key in batch_keys or rmp.has_duplicate(col):
                continue
            batch_keys.add(key)
            col.id = rmp.fresh_id()
            col.born_iter = t
            fresh.append(col)
            rcs.append(rc)
        if not fresh:
            ms = (time.perf_counter() - started) * 1e3
            trace.rows.append(TraceRow(t, obj_prev, 0, 0, 0, ms))
            break
        if t >= cap:
            raise IterationCapExceeded(
                f"no convergence after {t} column-adding iterations",
                trace=trace, solution=rmp.solution, episodes=episodes)

        state = None
        if policy.needs_state or config.record_states:
            state = build_state(rmp.columns, rmp.solution, fresh, rcs)
        ctx = SelectionContext(candidates=fresh, reduced_costs=rcs, state=state,
                               rng=config.rng, record_states=config.record_states)
        episode = policy.select(ctx)
        by_id = {c.id: c for c in fresh}
        chosen = [by_id[cid] for cid in episode.picks]
        for col in chosen:
            col.status = ColumnStatus.SELECTED

        snapshot = rmp.snapshot()
        solution = rmp.add_columns(chosen)
        if solution.status is not LpStatus.OPTIMAL:
            raise InfeasibleInitialization(
                f"master became {solution.status.value} after adding columns")
        obj_new = solution.objective
        ms = (time.perf_counter() - started) * 1e3

        loo_objs = None
        effective = None
        n_redundant = 0
        if config.track_redundant or on_iteration is not None:
            if len(chosen) == 1:
                loo_objs = {chosen[0].id: obj_prev}
                obj_all = obj_new
            else:
                selected_map = {c.id: (c.cost, tuple(c.coeffs.tolist()))
                                for c in chosen}
                obj_all, loo_objs = leave_one_out(snapshot, selected_map,
                                                  rmp.solver)
            effective = effective_from_objectives(
                obj_all, loo_objs, config.redundancy_tolerance)
            n_redundant = len(chosen) - len(effective)

        trace.rows.append(TraceRow(t, obj_prev, len(fresh),
                                   len(episode.picks), n_redundant, ms))
        episodes.append(episode)

        if on_iteration is not None:
            on_iteration(IterationContext(
                iteration=t, obj0=rmp.obj0, obj_prev=obj_prev, obj_new=obj_new,
                state=state, episode=episode, candidates=fresh,
                reduced_costs=rcs, selected_columns=chosen, snapshot=snapshot,
                loo_objectives=loo_objs, effective=effective,
                solver=rmp.solver))
        t += 1
    return CgResult(solution=rmp.solution, trace=trace, episodes=episodes)
