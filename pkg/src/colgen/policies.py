"""Column-selection strategies.

Baselines pick by reduced cost (single best, all, or a fixed top-k); the
learned strategies score candidates with the marginal Q-network. The
sequential strategy picks greedily by marginal Q, adds STOP to the action
set after the first pick, and stops when STOP wins or candidates run out;
at most (|candidates|+1)^2 Q-evaluations per iteration.

Ties between columns break toward the lowest column id. STOP wins only
when its score strictly exceeds the best column score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import qnet
from .columns import Column
from .errors import EmptyCandidates
from .features import BipartiteState, normalize_features, update_context


@dataclass
class SelectionEpisode:
    candidate_ids: tuple
    picks: tuple                       # ordered selected column ids
    stop_step: Optional[int] = None    # pick index at which STOP was chosen
    q_evaluations: int = 0
    states: tuple = ()                 # per-step state snapshots (training)

    @property
    def selected(self) -> tuple:
        return self.picks

    def __post_init__(self):
        assert len(set(self.picks)) == len(self.picks)
        assert set(self.picks) <= set(self.candidate_ids)


@dataclass
class SelectionContext:
    """Everything a policy may need for one iteration's choice."""

    candidates: Sequence[Column]
    reduced_costs: Sequence[float]
    state: Optional[BipartiteState] = None      # unnormalized, no STOP node
    weights: Optional[qnet.QNetWeights] = None
    rng: Optional[np.random.Generator] = None
    record_states: bool = False


class Policy:
    name = "policy"
    needs_state = False

    def select(self, ctx: SelectionContext) -> SelectionEpisode:
        raise NotImplementedError


def _ids(ctx) -> tuple:
    return tuple(col.id for col in ctx.candidates)


def _by_reduced_cost(ctx) -> list:
    order = sorted(range(len(ctx.candidates)),
                   key=lambda i: (ctx.reduced_costs[i], ctx.candidates[i].id))
    return [ctx.candidates[i].id for i in order]


def greedy_single(candidates: Sequence[Column], reduced_costs: Sequence[float]) -> SelectionEpisode:
    """The single candidate with the most negative reduced cost."""
    if not candidates:
        raise EmptyCandidates("greedy selection needs candidates")
    ctx = SelectionContext(candidates, reduced_costs)
    best = _by_reduced_cost(ctx)[0]
    return SelectionEpisode(_ids(ctx), (best,))


def greedy_multi(candidates: Sequence[Column], reduced_costs: Sequence[float]) -> SelectionEpisode:
    """Every candidate (pricing only emits negative reduced costs)."""
    if not candidates:
        raise EmptyCandidates("greedy selection needs candidates")
    ids = tuple(col.id for col in candidates)
    return SelectionEpisode(ids, ids)


def fixed_k(candidates: Sequence[Column], reduced_costs: Sequence[float],
            k: int = 5) -> SelectionEpisode:
    """The k most negative reduced-cost candidates (all when fewer)."""
    if not candidates:
        raise EmptyCandidates("fixed-k selection needs candidates")
    ctx = SelectionContext(candidates, reduced_costs)
    return SelectionEpisode(_ids(ctx), tuple(_by_reduced_cost(ctx)[:k]))


def epsilon_random(candidates: Sequence[Column], epsilon: float,
                   rng: np.random.Generator) -> Optional[SelectionEpisode]:
    """With probability epsilon, a uniformly random nonempty subset;
    otherwise None (caller falls back to its base policy)."""
    if not candidates:
        raise EmptyCandidates("random selection needs candidates")
    if epsilon <= 0.0 or rng.random() >= epsilon:
        return None
    ids = tuple(col.id for col in candidates)
    while True:
        mask = rng.random(len(ids)) < 0.5
        if mask.any():
            break
    return SelectionEpisode(ids, tuple(i for i, keep in zip(ids, mask) if keep))


ScoreFn = Callable[[BipartiteState], dict]


def _default_scorer(weights: qnet.QNetWeights) -> ScoreFn:
    def score(state: BipartiteState) -> dict:
        return qnet.forward(weights, state)
    return score


def _argmax_column(scores: dict, state: BipartiteState):
    """(best column node, stop chosen?) under the tie rules."""
    stop_idx = state.stop_node_index
    best_idx, best_score = None, None
    for idx, s in scores.items():
        if idx == stop_idx:
            continue
        cid = state.column_ids[idx]
        if best_idx is None or s > best_score + 1e-12 or (
                abs(s - best_score) <= 1e-12 and cid < state.column_ids[best_idx]):
            best_idx, best_score = idx, s
    if best_idx is None:
        return None, True
    if stop_idx is not None and stop_idx in scores and scores[stop_idx] > best_score + 1e-12:
        return None, True
    return best_idx, False


def ffcg_select(state: BipartiteState, candidates: Sequence[Column],
                weights: Optional[qnet.QNetWeights] = None,
                score_fn: Optional[ScoreFn] = None,
                record_states: bool = False) -> SelectionEpisode:
    """Sequential greedy-by-marginal-Q selection with a learned STOP.

    The first pick is forced from the candidate set (STOP only becomes
    available afterwards), so the selection is never empty.
    """
    if not candidates:
        raise EmptyCandidates("sequential selection needs candidates")
    if score_fn is None:
        if weights is None:
            raise ValueError("ffcg_select needs weights or a score_fn")
        state = normalize_features(state, weights.scaling)
        score_fn = _default_scorer(weights)
    ids = tuple(col.id for col in candidates)
    picks = []
    snapshots = [state] if record_states else []
    q_evals = 0
    stop_step = None
    budget = (len(candidates) + 1) ** 2
    while True:
        scores = score_fn(state)
        q_evals += len(scores)
        idx, stopped = _argmax_column(scores, state)
        if stopped:
            stop_step = len(picks)
            break
        cid = state.column_ids[idx]
        picks.append(cid)
        state = update_context(state, cid)
        if record_states:
            snapshots.append(state)
        if len(picks) == len(candidates):
            stop_step = len(picks)  # candidates exhausted: STOP is forced
            break
    assert q_evals <= budget, f"{q_evals} Q-evaluations exceed ({len(candidates)}+1)^2"
    return SelectionEpisode(ids, tuple(picks), stop_step=stop_step,
                            q_evaluations=q_evals, states=tuple(snapshots))


def rl_single(state: BipartiteState, candidates: Sequence[Column],
              weights: Optional[qnet.QNetWeights] = None,
              score_fn: Optional[ScoreFn] = None) -> SelectionEpisode:
    """Single pick by best Q score (the one-column special case)."""
    if not candidates:
        raise EmptyCandidates("selection needs candidates")
    if score_fn is None:
        if weights is None:
            raise ValueError("rl_single needs weights or a score_fn")
        state = normalize_features(state, weights.scaling)
        score_fn = _default_scorer(weights)
    scores = score_fn(state)
    idx, _ = _argmax_column(scores, state)
    return SelectionEpisode(tuple(c.id for c in candidates),
                            (state.column_ids[idx],),
                            q_evaluations=len(scores))


# -- policy objects for the engine ---------------------------------------------


class GreedySinglePolicy(Policy):
    name = "greedy-s"

    def select(self, ctx):
        return greedy_single(ctx.candidates, ctx.reduced_costs)


class GreedyMultiPolicy(Policy):
    name = "greedy-m"

    def select(self, ctx):
        return greedy_multi(ctx.candidates, ctx.reduced_costs)


class FixedKPolicy(Policy):
    name = "fixed-k"

    def __init__(self, k: int = 5):
        self.k = k

    def select(self, ctx):
        return fixed_k(ctx.candidates, ctx.reduced_costs, self.k)


class RandomSubsetPolicy(Policy):
    """Always a uniformly random nonempty subset (epsilon = 1)."""

    name = "random"

    def __init__(self, rng: Optional[np.random.Generator] = None):
        self.rng = rng or np.random.default_rng(0)

    def select(self, ctx):
        rng = ctx.rng or self.rng
        episode = epsilon_random(ctx.candidates, 1.0, rng)
        assert episode is not None
        return episode


class RlSinglePolicy(Policy):
    name = "rl-single"
    needs_state = True

    def __init__(self, weights: qnet.QNetWeights):
        self.weights = weights

    def select(self, ctx):
        return rl_single(ctx.state, ctx.candidates, weights=self.weights)


class FfcgPolicy(Policy):
    name = "ffcg"
    needs_state = True

    def __init__(self, weights: qnet.QNetWeights):
        self.weights = weights

    def select(self, ctx):
        return ffcg_select(ctx.state, ctx.candidates, weights=self.weights,
                           record_states=ctx.record_states)


POLICY_NAMES = ("greedy-s", "greedy-m", "fixed-k", "rl-single", "ffcg", "random")


def make_policy(name: str, weights: Optional[qnet.QNetWeights] = None,
                k: int = 5, rng: Optional[np.random.Generator] = None) -> Policy:
    if name == "greedy-s":
        return GreedySinglePolicy()
    if name == "greedy-m":
        return GreedyMultiPolicy()
    if name == "fixed-k":
        return FixedKPolicy(k=k)
    if name == "random":
        return RandomSubsetPolicy(rng=rng)
    if name in ("rl-single", "ffcg"):
        if weights is None:
            raise ValueError(f"policy {name!r} needs trained weights")
        return RlSinglePolicy(weights) if name == "rl-single" else FfcgPolicy(weights)
    raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")
