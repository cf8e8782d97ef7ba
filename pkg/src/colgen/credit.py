"""Reward computation and per-column credit assignment.

The iteration reward is

    R = alpha * (obj_prev - obj_new) / obj0 - beta * n_redundant

where a selected column is redundant when dropping it leaves the
post-addition objective unchanged (leave-one-out test). Effective columns
split the objective part of the reward by contribution weights
phi(a) = r_delta(a) / sum r_delta, where the marginal reward of an
effective column is the leave-one-out objective difference scaled by
alpha/obj0 (the redundancy classification is fixed at the full selected
set, so the beta terms cancel in the difference). Redundant columns get
-beta, the STOP action 0, and unselected candidates +-beta depending on
whether adding them would have improved the objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import InvalidBaseline
from .lp import LpProblem, LpStatus, SimplexSolver

DEFAULT_ALPHA = 2000.0
DEFAULT_BETA = 0.3
DEFAULT_REDUNDANCY_TOL = 1e-6
STOP_REWARD = 0.0


@dataclass(frozen=True)
class RewardConfig:
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    redundancy_tolerance: float = DEFAULT_REDUNDANCY_TOL

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise InvalidBaseline("alpha and beta must be non-negative")
        if self.redundancy_tolerance <= 0:
            raise InvalidBaseline("redundancy tolerance must be positive")


@dataclass(frozen=True)
class CreditReport:
    total_reward: float
    effective: frozenset                 # ids of columns that improved the LP
    marginal_rewards: dict               # id -> r_delta over the selected set
    contribution_weights: dict           # id -> phi over the effective set
    column_rewards: dict                 # id -> final per-column reward
    stop_reward: float = STOP_REWARD
    unselected_rewards: dict = field(default_factory=dict)
    used_uniform_fallback: bool = False


def total_reward(obj_prev: float, obj_new: float, obj0: float,
                 n_redundant: int, config: RewardConfig) -> float:
    """alpha * (obj_prev - obj_new) / obj0 - beta * n_redundant."""
    if obj0 <= 0:
        raise InvalidBaseline(f"obj0 must be positive, got {obj0}")
    if n_redundant < 0:
        raise InvalidBaseline("redundant count cannot be negative")
    return config.alpha * (obj_prev - obj_new) / obj0 - config.beta * n_redundant


@dataclass(frozen=True)
class SubsetLp:
    """Re-solvable snapshot of the master before this iteration's additions.

    Columns are (cost, coeffs) pairs; `basis` is the optimal basis of the
    snapshot, reused as a warm start for every subset solve (appending
    columns keeps it primal feasible).
    """

    base_columns: tuple                  # ((cost, coeffs), ...)
    rhs: np.ndarray
    basis: Optional[tuple] = None

    def solve_with(self, extra_columns: Sequence, solver: SimplexSolver) -> float:
        costs = [c for c, _ in self.base_columns] + [c for c, _ in extra_columns]
        mat = np.column_stack(
            [np.asarray(a, dtype=float) for _, a in self.base_columns]
            + [np.asarray(a, dtype=float) for _, a in extra_columns]
        )
        sol = solver.solve(LpProblem(costs, mat, self.rhs), warm_start=self.basis)
        if sol.status is not LpStatus.OPTIMAL:
            raise InvalidBaseline(f"subset master unexpectedly {sol.status.value}")
        return sol.objective


def leave_one_out(snapshot: SubsetLp, selected: Mapping[int, tuple],
                  solver: Optional[SimplexSolver] = None):
    """Objectives of the master with all selected columns and with each one
    dropped: (obj_with_all, {id: obj_without_id}). |selected| + 1 solves.

    Selected columns must be pairwise distinct; upstream deduplication
    guarantees it, so identical copies are a caller bug.
    """
    solver = solver or SimplexSolver()
    values = [(cost, tuple(np.asarray(a, dtype=float).tolist()))
              for cost, a in selected.values()]
    assert len(set(values)) == len(values), "duplicate columns in selection"
    ids = sorted(selected)
    all_cols = [selected[i] for i in ids]
    obj_all = snapshot.solve_with(all_cols, solver)
    loo = {}
    for cid in ids:
        others = [selected[i] for i in ids if i != cid]
        loo[cid] = snapshot.solve_with(others, solver)
    return obj_all, loo


def effective_from_objectives(obj_all: float, loo: Mapping[int, float],
                              tol: float) -> frozenset:
    scale = max(1.0, abs(obj_all))
    return frozenset(cid for cid, obj in loo.items() if obj_all < obj - tol * scale)


def effective_set(snapshot: SubsetLp, selected: Mapping[int, tuple],
                  config: RewardConfig,
                  solver: Optional[SimplexSolver] = None) -> frozenset:
    """Ids of selected columns whose removal worsens the post-addition
    objective beyond the redundancy tolerance."""
    if not selected:
        raise InvalidBaseline("effective_set needs a nonempty selection")
    obj_all, loo = leave_one_out(snapshot, selected, solver)
    return effective_from_objectives(obj_all, loo, config.redundancy_tolerance)


def assign_credit(obj_prev: float, obj_new: float, obj0: float,
                  loo_objectives: Mapping[int, float],
                  effective: frozenset, config: RewardConfig,
                  unselected_probe: Optional[Mapping[int, float]] = None) -> CreditReport:
    """Build the full credit report for one selection event.

    `loo_objectives` maps every selected id to the leave-one-out objective;
    `unselected_probe` (training only) maps unselected candidate ids to the
    objective of the master with that candidate added on top of the
    selection.
    """
    if obj0 <= 0:
        raise InvalidBaseline(f"obj0 must be positive, got {obj0}")
    n_redundant = len(loo_objectives) - len(effective)
    r_total = total_reward(obj_prev, obj_new, obj0, n_redundant, config)
    r_obj = config.alpha * (obj_prev - obj_new) / obj0

    marginal = {}
    for cid, obj_without in loo_objectives.items():
        if cid in effective:
            marginal[cid] = config.alpha * (obj_without - obj_new) / obj0
        else:
            marginal[cid] = -config.beta

    phi = {}
    fallback = False
    if effective:
        denom = sum(marginal[cid] for cid in effective)
        if abs(denom) > 1e-12:
            phi = {cid: marginal[cid] / denom for cid in effective}
        else:
            fallback = True
            phi = {cid: 1.0 / len(effective) for cid in effective}

    rewards = {}
    for cid in loo_objectives:
        if cid in effective:
            rewards[cid] = phi[cid] * r_obj
        else:
            rewards[cid] = -config.beta

    unselected = {}
    if unselected_probe is not None:
        scale = max(1.0, abs(obj_new))
        for cid, obj_with_extra in unselected_probe.items():
            improves = obj_with_extra < obj_new - config.redundancy_tolerance * scale
            unselected[cid] = config.beta if improves else -config.beta

    return CreditReport(
        total_reward=r_total,
        effective=frozenset(effective),
        marginal_rewards=marginal,
        contribution_weights=phi,
        column_rewards=rewards,
        stop_reward=STOP_REWARD,
        unselected_rewards=unselected,
        used_uniform_fallback=fallback,
    )
