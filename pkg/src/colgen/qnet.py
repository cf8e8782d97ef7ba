"""Marginal Q-value approximator over the bipartite state.

A small message-passing network scoring every selectable column node (and
the STOP node). Architecture: linear embeddings of column (9->h) and
constraint (2->h) features, two rounds of degree-normalized sum
aggregation along the coefficient edges with per-direction h->h weight
matrices and biases, ReLU nonlinearities, and a scalar linear head:

    hv = relu(Fv @ col_embed);  hc = relu(Fc @ cons_embed)
    repeat twice:
        hc = relu((hc + norm_sum_{v->c} w_e hv) @ v2c_w + v2c_b)
        hv = relu((hv + norm_sum_{c->v} w_e hc) @ c2v_w + c2v_b)
    score = hv @ out

All math is plain numpy with hand-written reverse-mode gradients; the
finite-difference suite in the tests pins their correctness. Training
uses one-step TD targets against a periodically synchronized target
network; gamma=0 degrades to pure regression on the stored rewards.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import EmptyBatch, ShapeMismatch
from .features import (
    N_COLUMN_FEATURES,
    N_CONSTRAINT_FEATURES,
    BipartiteState,
    ScalingProfile,
)

FORMAT_VERSION = 1
DEFAULT_HIDDEN = 32
GRAD_CLIP_NORM = 5.0

PARAM_SHAPES = {
    "col_embed": (N_COLUMN_FEATURES, None),
    "cons_embed": (N_CONSTRAINT_FEATURES, None),
    "v2c0_w": (None, None), "v2c0_b": (None,),
    "c2v0_w": (None, None), "c2v0_b": (None,),
    "v2c1_w": (None, None), "v2c1_b": (None,),
    "c2v1_w": (None, None), "c2v1_b": (None,),
    "out": (None,),
}


@dataclass
class QNetWeights:
    hidden: int
    params: dict                      # name -> ndarray, keys = PARAM_SHAPES
    scaling: ScalingProfile
    version: int = FORMAT_VERSION

    def __post_init__(self):
        for name, shape in PARAM_SHAPES.items():
            if name not in self.params:
                raise ShapeMismatch(f"missing parameter block {name!r}")
            want = tuple(self.hidden if s is None else s for s in shape)
            got = self.params[name].shape
            if got != want:
                raise ShapeMismatch(f"{name}: expected shape {want}, got {got}")
            if not np.all(np.isfinite(self.params[name])):
                raise ShapeMismatch(f"{name} contains non-finite values")

    def copy(self) -> "QNetWeights":
        return QNetWeights(self.hidden,
                           {k: v.copy() for k, v in self.params.items()},
                           self.scaling, self.version)


def init_weights(hidden: int = DEFAULT_HIDDEN, seed: int = 0,
                 scaling: Optional[ScalingProfile] = None) -> QNetWeights:
    rng = np.random.default_rng(seed)
    params = {}
    for name, shape in PARAM_SHAPES.items():
        want = tuple(hidden if s is None else s for s in shape)
        if name.endswith("_b"):
            params[name] = np.zeros(want)
        else:
            fan_in = want[0]
            params[name] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=want)
    return QNetWeights(hidden, params, scaling or ScalingProfile.identity())


@dataclass
class ReplayTransition:
    state: BipartiteState             # normalized snapshot, STOP node present
    selected: tuple                   # column ids picked this iteration
    rewards: dict                     # column id (or STOP_ID) -> reward
    next_state: Optional[BipartiteState]
    terminal: bool = False


@dataclass
class _ForwardCache:
    hv: list = field(default_factory=list)     # activations per stage
    hc: list = field(default_factory=list)
    sv: list = field(default_factory=list)     # pre-matmul sums per round
    sc: list = field(default_factory=list)
    scores: np.ndarray = None
    degv: np.ndarray = None
    degc: np.ndarray = None


def _check_state(state: BipartiteState):
    if state.column_features.shape[1] != N_COLUMN_FEATURES:
        raise ShapeMismatch(
            f"state has {state.column_features.shape[1]} column features")
    if state.constraint_features.shape[1] != N_CONSTRAINT_FEATURES:
        raise ShapeMismatch(
            f"state has {state.constraint_features.shape[1]} constraint features")


def _degrees(state: BipartiteState):
    degv = np.bincount(state.edge_columns, minlength=state.n_columns).astype(float)
    degc = np.bincount(state.edge_constraints, minlength=state.n_constraints).astype(float)
    np.maximum(degv, 1.0, out=degv)
    np.maximum(degc, 1.0, out=degc)
    return degv, degc


def _forward_full(weights: QNetWeights, state: BipartiteState) -> _ForwardCache:
    _check_state(state)
    p = weights.params
    cache = _ForwardCache()
    cache.degv, cache.degc = _degrees(state)
    ecol, econs, ew = state.edge_columns, state.edge_constraints, state.edge_weights

    hv = np.maximum(state.column_features @ p["col_embed"], 0.0)
    hc = np.maximum(state.constraint_features @ p["cons_embed"], 0.0)
    cache.hv.append(hv)
    cache.hc.append(hc)
    for r in range(2):
        agg_c = np.zeros_like(hc)
        if len(ecol):
            np.add.at(agg_c, econs, hv[ecol] * ew[:, None])
        agg_c /= cache.degc[:, None]
        sc = hc + agg_c
        hc = np.maximum(sc @ p[f"v2c{r}_w"] + p[f"v2c{r}_b"], 0.0)
        agg_v = np.zeros_like(hv)
        if len(ecol):
            np.add.at(agg_v, ecol, hc[econs] * ew[:, None])
        agg_v /= cache.degv[:, None]
        sv = hv + agg_v
        hv = np.maximum(sv @ p[f"c2v{r}_w"] + p[f"c2v{r}_b"], 0.0)
        cache.sc.append(sc)
        cache.sv.append(sv)
        cache.hc.append(hc)
        cache.hv.append(hv)
    cache.scores = hv @ p["out"]
    return cache


def forward(weights: QNetWeights, state: BipartiteState) -> dict:
    """Scores for every selectable node (status 1, STOP included)."""
    cache = _forward_full(weights, state)
    return {int(i): float(cache.scores[i]) for i in state.selectable_indices()}


def backward(weights: QNetWeights, state: BipartiteState,
             score_grads: Mapping[int, float],
             cache: Optional[_ForwardCache] = None) -> dict:
    """Exact reverse-mode gradients of sum(score_grads[i] * score_i)."""
    if cache is None:
        cache = _forward_full(weights, state)
    p = weights.params
    ecol, econs, ew = state.edge_columns, state.edge_constraints, state.edge_weights
    dscores = np.zeros(state.n_columns)
    for idx, g in score_grads.items():
        dscores[idx] = g

    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    grads["out"] = cache.hv[2].T @ dscores
    d_hv = [np.zeros_like(cache.hv[0]) for _ in range(3)]
    d_hc = [np.zeros_like(cache.hc[0]) for _ in range(3)]
    d_hv[2] = np.outer(dscores, p["out"])
    for r in (1, 0):
        mask_v = cache.hv[r + 1] > 0.0
        d_pre_v = d_hv[r + 1] * mask_v
        grads[f"c2v{r}_w"] += cache.sv[r].T @ d_pre_v
        grads[f"c2v{r}_b"] += d_pre_v.sum(axis=0)
        d_sv = d_pre_v @ p[f"c2v{r}_w"].T
        d_hv[r] += d_sv
        if len(ecol):
            contrib = d_sv[ecol] * (ew / cache.degv[ecol])[:, None]
            np.add.at(d_hc[r + 1], econs, contrib)
        mask_c = cache.hc[r + 1] > 0.0
        d_pre_c = d_hc[r + 1] * mask_c
        grads[f"v2c{r}_w"] += cache.sc[r].T @ d_pre_c
        grads[f"v2c{r}_b"] += d_pre_c.sum(axis=0)
        d_sc = d_pre_c @ p[f"v2c{r}_w"].T
        d_hc[r] += d_sc
        if len(ecol):
            contrib = d_sc[econs] * (ew / cache.degc[econs])[:, None]
            np.add.at(d_hv[r], ecol, contrib)
    grads["col_embed"] = state.column_features.T @ (d_hv[0] * (cache.hv[0] > 0.0))
    grads["cons_embed"] = state.constraint_features.T @ (d_hc[0] * (cache.hc[0] > 0.0))
    return grads


def max_next_score(weights: QNetWeights, state: Optional[BipartiteState]) -> float:
    """Best attainable first-pick score of a successor state (0 if none).

    STOP is not a legal first pick, so stored next states carry no STOP
    node and the max runs over candidate columns only.
    """
    if state is None:
        return 0.0
    scores = forward(weights, state)
    return max(scores.values(), default=0.0)


def train_step(weights: QNetWeights, target_weights: QNetWeights,
               batch: Sequence[ReplayTransition], learning_rate: float = 1e-3,
               gamma: float = 0.9):
    """One SGD step on the TD/regression loss over a minibatch.

    Target for an action a of transition t:
        rewards[a] + gamma * max_next_score(target_weights, t.next_state)
    (bootstrap dropped on terminal transitions or gamma == 0). Returns
    (updated weights, mean squared loss).
    """
    if not batch:
        raise EmptyBatch("train_step needs at least one transition")
    total_terms = sum(len(t.rewards) for t in batch)
    if total_terms == 0:
        raise EmptyBatch("no credited actions in batch")

    grads = {name: np.zeros_like(arr) for name, arr in weights.params.items()}
    loss = 0.0
    for t in batch:
        cache = _forward_full(weights, t.state)
        if gamma != 0.0 and not t.terminal:
            bootstrap = gamma * max_next_score(target_weights, t.next_state)
        else:
            bootstrap = 0.0
        node_grads = {}
        id_to_idx = {cid: i for i, cid in enumerate(t.state.column_ids)}
        for cid, r in t.rewards.items():
            idx = id_to_idx[cid]
            pred = cache.scores[idx]
            target = r + bootstrap
            diff = pred - target
            loss += diff * diff
            node_grads[idx] = 2.0 * diff / total_terms
        g = backward(weights, t.state, node_grads, cache=cache)
        for name in grads:
            grads[name] += g[name]
    loss /= total_terms

    norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    scale = 1.0 if norm <= GRAD_CLIP_NORM else GRAD_CLIP_NORM / norm
    new_params = {name: weights.params[name] - learning_rate * scale * grads[name]
                  for name in weights.params}
    return QNetWeights(weights.hidden, new_params, weights.scaling,
                       weights.version), float(loss)


# -- serialization --------------------------------------------------------------


def weights_to_dict(weights: QNetWeights) -> dict:
    matrices = {}
    for name, arr in weights.params.items():
        mat = np.atleast_2d(arr)
        matrices[name] = {
            "rows": int(mat.shape[0]),
            "cols": int(mat.shape[1]),
            "data_row_major": [float(x) for x in arr.reshape(-1)],
        }
    return {
        "version": weights.version,
        "h": weights.hidden,
        "scaling_profile": weights.scaling.to_dict(),
        "matrices": matrices,
    }


def weights_from_dict(payload: dict) -> QNetWeights:
    hidden = int(payload["h"])
    params = {}
    for name, shape in PARAM_SHAPES.items():
        if name not in payload["matrices"]:
            raise ShapeMismatch(f"weights file missing block {name!r}")
        entry = payload["matrices"][name]
        want = tuple(hidden if s is None else s for s in shape)
        params[name] = np.asarray(entry["data_row_major"], dtype=float).reshape(want)
    scaling = ScalingProfile.from_dict(payload["scaling_profile"])
    return QNetWeights(hidden, params, scaling, int(payload["version"]))


def save_weights(weights: QNetWeights, path):
    with open(path, "w") as fh:
        json.dump(weights_to_dict(weights), fh)


def load_weights(path) -> QNetWeights:
    with open(path) as fh:
        return weights_from_dict(json.load(fh))
