"""Bipartite variable/constraint state observed by the selection agent.

Column nodes carry 9 features:
  0 reduced cost            1 solution value (candidates: 0)
  2 connectivity            3 iterations in basis
  4 iterations out of basis 5 left basis last iteration (0/1)
  6 entered basis last iteration (0/1)
  7 node status: 1 candidate selectable, 0 selected this round, -1 existing
  8 problem-specific feature (waste / route cost)

Constraint nodes carry 2: dual value and connectivity. The STOP
pseudo-column is all zeros except status and has no edges. Mid-selection
updates only flip statuses and insert STOP; nothing else is recomputed
(the master is not re-solved between sequential picks).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .columns import Column
from .errors import StateInconsistency, UnknownColumn
from .lp import LpSolution, LpStatus, reduced_cost

N_COLUMN_FEATURES = 9
N_CONSTRAINT_FEATURES = 2
STATUS_IDX = 7
_FLAG_IDXS = (5, 6, STATUS_IDX)
STOP_ID = -1


@dataclass(frozen=True)
class BipartiteState:
    column_features: np.ndarray     # (V, 9)
    constraint_features: np.ndarray  # (m, 2)
    edge_columns: np.ndarray        # edge endpoint: column node index
    edge_constraints: np.ndarray    # edge endpoint: constraint index
    edge_weights: np.ndarray        # coefficient of the column in the row
    column_ids: tuple               # node index -> column id (STOP_ID for STOP)
    stop_node_index: Optional[int] = None

    def __post_init__(self):
        for arr in (self.column_features, self.constraint_features,
                    self.edge_columns, self.edge_constraints, self.edge_weights):
            arr.setflags(write=False)

    @property
    def n_columns(self) -> int:
        return self.column_features.shape[0]

    @property
    def n_constraints(self) -> int:
        return self.constraint_features.shape[0]

    @property
    def statuses(self) -> np.ndarray:
        return self.column_features[:, STATUS_IDX]

    def selectable_indices(self) -> np.ndarray:
        """Node indices with status 1, the STOP node included once present."""
        return np.flatnonzero(self.statuses == 1.0)

    def node_index_of(self, column_id: int) -> int:
        try:
            return self.column_ids.index(column_id)
        except ValueError:
            raise UnknownColumn(f"column id {column_id} not in state")


def build_state(existing: Sequence[Column], solution: LpSolution,
                candidates: Sequence[Column], candidate_rcs: Sequence[float],
                selected_ids=frozenset()) -> BipartiteState:
    """Assemble the iteration state from the solved master and candidates."""
    if solution.status is not LpStatus.OPTIMAL:
        raise StateInconsistency("state requires an optimal master solution")
    if len(candidates) != len(candidate_rcs):
        raise StateInconsistency(
            f"{len(candidates)} candidates but {len(candidate_rcs)} reduced costs")
    if any(rc is None or not np.isfinite(rc) for rc in candidate_rcs):
        raise StateInconsistency("candidate without a finite reduced cost")

    m = solution.duals.shape[0]
    cols = list(existing) + list(candidates)
    n_nodes = len(cols)
    feats = np.zeros((n_nodes, N_COLUMN_FEATURES))
    ecol, econs, ew = [], [], []
    ids = []
    for idx, col in enumerate(cols):
        is_candidate = idx >= len(existing)
        if is_candidate:
            rc = float(candidate_rcs[idx - len(existing)])
            value = 0.0
            status = 0.0 if col.id in selected_ids else 1.0
        else:
            rc = reduced_cost(solution, col.cost, col.coeffs)
            # existing columns appear in the master in list order
            value = float(solution.primal[idx]) if idx < solution.primal.shape[0] else 0.0
            status = -1.0
            feats[idx, 3] = col.iters_in_basis
            feats[idx, 4] = col.iters_out_of_basis
            feats[idx, 5] = 1.0 if col.left_last_iter else 0.0
            feats[idx, 6] = 1.0 if col.entered_last_iter else 0.0
        feats[idx, 0] = rc
        feats[idx, 1] = value
        feats[idx, 2] = col.connectivity
        feats[idx, STATUS_IDX] = status
        feats[idx, 8] = col.problem_feature
        ids.append(col.id)
        nz = np.flatnonzero(col.coeffs)
        ecol.extend([idx] * len(nz))
        econs.extend(nz.tolist())
        ew.extend(col.coeffs[nz].tolist())

    cons = np.zeros((m, N_CONSTRAINT_FEATURES))
    cons[:, 0] = solution.duals
    if econs:
        counts = np.bincount(np.asarray(econs), minlength=m)
        cons[:, 1] = counts
    return BipartiteState(
        column_features=feats,
        constraint_features=cons,
        edge_columns=np.asarray(ecol, dtype=int),
        edge_constraints=np.asarray(econs, dtype=int),
        edge_weights=np.asarray(ew, dtype=float),
        column_ids=tuple(ids),
    )


def with_stop_node(state: BipartiteState) -> BipartiteState:
    """Append the STOP pseudo-column (all-zero features, status 1)."""
    if state.stop_node_index is not None:
        return state
    stop = np.zeros((1, N_COLUMN_FEATURES))
    stop[0, STATUS_IDX] = 1.0
    feats = np.vstack([state.column_features, stop])
    return replace(
        state,
        column_features=feats,
        column_ids=state.column_ids + (STOP_ID,),
        stop_node_index=state.n_columns,
    )


def update_context(state: BipartiteState, selected_column_id: int) -> BipartiteState:
    """Flip the chosen node's status to selected; insert STOP after the
    first pick. No other features are recomputed."""
    idx = state.node_index_of(selected_column_id)
    if state.column_features[idx, STATUS_IDX] != 1.0 or idx == state.stop_node_index:
        raise UnknownColumn(f"column id {selected_column_id} is not selectable")
    feats = state.column_features.copy()
    feats[idx, STATUS_IDX] = 0.0
    new = replace(state, column_features=feats)
    if state.stop_node_index is None:
        new = with_stop_node(new)
    return new


@dataclass(frozen=True)
class ScalingProfile:
    """Per-feature affine map (x - shift) / scale; flags and status are
    always left untouched."""

    column_shift: np.ndarray
    column_scale: np.ndarray
    constraint_shift: np.ndarray
    constraint_scale: np.ndarray

    def __post_init__(self):
        cshift = np.asarray(self.column_shift, dtype=float).reshape(-1).copy()
        cscale = np.asarray(self.column_scale, dtype=float).reshape(-1).copy()
        rshift = np.asarray(self.constraint_shift, dtype=float).reshape(-1).copy()
        rscale = np.asarray(self.constraint_scale, dtype=float).reshape(-1).copy()
        if cshift.shape[0] != N_COLUMN_FEATURES or cscale.shape[0] != N_COLUMN_FEATURES:
            raise StateInconsistency("column profile must have 9 entries")
        if rshift.shape[0] != N_CONSTRAINT_FEATURES or rscale.shape[0] != N_CONSTRAINT_FEATURES:
            raise StateInconsistency("constraint profile must have 2 entries")
        for i in _FLAG_IDXS:
            cshift[i] = 0.0
            cscale[i] = 1.0
        cscale[np.abs(cscale) < 1e-12] = 1.0
        rscale[np.abs(rscale) < 1e-12] = 1.0
        for arr in (cshift, cscale, rshift, rscale):
            arr.setflags(write=False)
        object.__setattr__(self, "column_shift", cshift)
        object.__setattr__(self, "column_scale", cscale)
        object.__setattr__(self, "constraint_shift", rshift)
        object.__setattr__(self, "constraint_scale", rscale)

    @classmethod
    def identity(cls) -> "ScalingProfile":
        return cls(np.zeros(N_COLUMN_FEATURES), np.ones(N_COLUMN_FEATURES),
                   np.zeros(N_CONSTRAINT_FEATURES), np.ones(N_CONSTRAINT_FEATURES))

    @classmethod
    def from_states(cls, states: Sequence[BipartiteState]) -> "ScalingProfile":
        """Standardization (mean/std) fitted on a batch of built states."""
        col = np.vstack([s.column_features for s in states])
        cons = np.vstack([s.constraint_features for s in states])
        cstd = col.std(axis=0)
        rstd = cons.std(axis=0)
        cstd[cstd < 1e-12] = 1.0
        rstd[rstd < 1e-12] = 1.0
        return cls(col.mean(axis=0), cstd, cons.mean(axis=0), rstd)

    def to_dict(self) -> dict:
        return {
            "column_shift": self.column_shift.tolist(),
            "column_scale": self.column_scale.tolist(),
            "constraint_shift": self.constraint_shift.tolist(),
            "constraint_scale": self.constraint_scale.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ScalingProfile":
        return cls(payload["column_shift"], payload["column_scale"],
                   payload["constraint_shift"], payload["constraint_scale"])


def normalize_features(state: BipartiteState, profile: ScalingProfile) -> BipartiteState:
    """Apply the affine profile; status/flag features and the STOP node keep
    their raw (all-zero) encoding."""
    feats = (state.column_features - profile.column_shift) / profile.column_scale
    if state.stop_node_index is not None:
        feats[state.stop_node_index] = state.column_features[state.stop_node_index]
    cons = (state.constraint_features - profile.constraint_shift) / profile.constraint_scale
    return replace(state, column_features=feats, constraint_features=cons)
