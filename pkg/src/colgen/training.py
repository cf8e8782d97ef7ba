"""Training and evaluation harness for the learned selection policies.

Training walks a difficulty-sorted curriculum of instances, runs the CG
loop with epsilon-greedy sequential selection, scores each iteration's
selection with the credit module, stores subset-level transitions in a
FIFO replay buffer, and takes one TD gradient step per CG iteration,
synchronizing the target network every `target_sync` steps. Everything is
driven by a single seeded generator, so a fixed seed reproduces the final
weights bit for bit (single-threaded contract).
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import engine, qnet
from .credit import RewardConfig, assign_credit
from .errors import EmptyCandidates, IterationCapExceeded
from .features import STOP_ID, ScalingProfile, normalize_features, with_stop_node
from .policies import Policy, epsilon_random, ffcg_select, make_policy


@dataclass
class TrainConfig:
    replay_capacity: int = 20000
    batch_size: int = 32
    target_sync: int = 200            # gradient steps between target refreshes
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_fraction: float = 0.5     # portion of episodes spanned by the decay
    learning_rate: float = 1e-3
    gamma: float = 0.9
    hidden: int = qnet.DEFAULT_HIDDEN
    seed: int = 0
    passes: int = 1                   # passes over the (sorted) instance list
    candidates: int = 10
    gap: float = 0.15
    reward: RewardConfig = field(default_factory=RewardConfig)
    score_unselected: bool = True
    max_iterations: Optional[int] = None
    profile_probes: int = 6           # instances probed to fit the scaling profile
    checkpoint_every: int = 50
    checkpoint_dir: Optional[str] = None
    validation_instances: Optional[Sequence] = None

    def __post_init__(self):
        if self.replay_capacity < self.batch_size:
            raise ValueError("replay capacity must be >= batch size")
        if not (0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0):
            raise ValueError("epsilon schedule must stay within [0, 1]")


@dataclass
class TrainLogRow:
    episode: int
    instance: str
    loss_mean: float
    iterations: int
    columns_added: int
    epsilon: float
    capped: bool = False


def log_to_csv(rows: Sequence[TrainLogRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["episode", "instance", "loss_mean", "iters",
                     "cols_added", "epsilon"])
    for r in rows:
        writer.writerow([r.episode, r.instance, repr(r.loss_mean),
                         r.iterations, r.columns_added, repr(r.epsilon)])
    return buf.getvalue()


def _epsilon_at(config: TrainConfig, episode: int, total: int) -> float:
    span = max(1, int(total * config.epsilon_fraction))
    if episode >= span:
        return config.epsilon_end
    frac = episode / span
    return config.epsilon_start + frac * (config.epsilon_end - config.epsilon_start)


def _instance_label(instance, index: int) -> str:
    kind = type(instance).__name__.replace("Instance", "").lower()
    return f"{kind}-{instance.difficulty_key}-{index}"


class _EpsilonGreedyFfcg(Policy):
    """Sequential Q-greedy selection, replaced by a uniformly random
    nonempty subset with probability epsilon (exploration branch)."""

    name = "ffcg-train"
    needs_state = True

    def __init__(self, weights, rng):
        self.weights = weights
        self.rng = rng
        self.epsilon = 0.0

    def select(self, ctx):
        episode = epsilon_random(ctx.candidates, self.epsilon, self.rng)
        if episode is not None:
            return episode
        return ffcg_select(ctx.state, ctx.candidates, weights=self.weights)


def fit_scaling_profile(instances: Sequence, config: TrainConfig) -> ScalingProfile:
    """Probe a spread of instances with plain multi-column CG and fit the
    feature standardization on the observed states."""
    if not instances:
        return ScalingProfile.identity()
    idx = np.unique(np.linspace(0, len(instances) - 1,
                                min(config.profile_probes, len(instances)),
                                dtype=int))
    states = []

    def collect(ctx):
        if ctx.state is not None:
            states.append(ctx.state)

    for i in idx:
        try:
            engine.run(instances[int(i)], make_policy("greedy-m"),
                       engine.CgConfig(candidates=config.candidates,
                                       gap=config.gap,
                                       record_states=True,
                                       max_iterations=config.max_iterations),
                       on_iteration=collect)
        except IterationCapExceeded:
            pass
    if not states:
        return ScalingProfile.identity()
    return ScalingProfile.from_states(states)


@dataclass
class _TrainState:
    weights: qnet.QNetWeights
    target: qnet.QNetWeights
    replay: deque
    rng: np.random.Generator
    grad_steps: int = 0
    losses: list = field(default_factory=list)
    pending: Optional[qnet.ReplayTransition] = None


def train(instances: Sequence, config: Optional[TrainConfig] = None):
    """Returns (trained weights, list of TrainLogRow)."""
    config = config or TrainConfig()
    if not instances:
        raise EmptyCandidates("training needs at least one instance")
    curriculum = sorted(instances, key=lambda inst: inst.difficulty_key)
    schedule = curriculum * config.passes
    total = len(schedule)

    profile = fit_scaling_profile(curriculum, config)
    rng = np.random.default_rng(config.seed)
    state = _TrainState(
        weights=qnet.init_weights(config.hidden, seed=config.seed, scaling=profile),
        target=None,
        replay=deque(maxlen=config.replay_capacity),
        rng=rng,
    )
    state.target = state.weights.copy()

    log: list = []
    best_val = None
    ckpt_dir = Path(config.checkpoint_dir) if config.checkpoint_dir else None
    if ckpt_dir:
        ckpt_dir.mkdir(parents=True, exist_ok=True)

    for ep_index, instance in enumerate(schedule):
        policy = _EpsilonGreedyFfcg(state.weights, state.rng)
        policy.epsilon = _epsilon_at(config, ep_index, total)
        state.losses = []
        state.pending = None
        capped = False

        def hook(ctx, _policy=policy):
            _train_iteration(ctx, state, config)
            _policy.weights = state.weights  # policy follows the online net

        cfg = engine.CgConfig(candidates=config.candidates, gap=config.gap,
                              record_states=True,
                              redundancy_tolerance=config.reward.redundancy_tolerance,
                              max_iterations=config.max_iterations,
                              rng=state.rng)
        try:
            result = engine.run(instance, policy, cfg, on_iteration=hook)
            trace = result.trace
        except IterationCapExceeded as exc:
            capped = True
            trace = exc.trace
            state.pending = None  # episode ended artificially: drop the tail
        if state.pending is not None:
            state.pending.terminal = True
            state.pending.next_state = None
            state.replay.append(state.pending)
            state.pending = None

        log.append(TrainLogRow(
            episode=ep_index,
            instance=_instance_label(instance, ep_index % len(curriculum)),
            loss_mean=float(np.mean(state.losses)) if state.losses else float("nan"),
            iterations=trace.iterations if trace else 0,
            columns_added=trace.total_selected if trace else 0,
            epsilon=policy.epsilon,
            capped=capped,
        ))

        if ckpt_dir and ((ep_index + 1) % config.checkpoint_every == 0
                         or ep_index + 1 == total):
            qnet.save_weights(state.weights, ckpt_dir / f"ckpt_ep{ep_index + 1:05d}.json")
            if config.validation_instances:
                score = _validation_iterations(state.weights, config)
                if best_val is None or score < best_val:
                    best_val = score
                    qnet.save_weights(state.weights, ckpt_dir / "best.json")
    if ckpt_dir:
        qnet.save_weights(state.weights, ckpt_dir / "final.json")
        if best_val is None:
            qnet.save_weights(state.weights, ckpt_dir / "best.json")
    return state.weights, log


def _train_iteration(ctx: engine.IterationContext, state: _TrainState,
                     config: TrainConfig):
    """Credit the finished iteration, store its transition, and take one
    gradient step (the training-time branch of the CG loop)."""
    probes = ctx.probe_unselected() if config.score_unselected else None
    report = assign_credit(ctx.obj_prev, ctx.obj_new, ctx.obj0,
                           ctx.loo_objectives, ctx.effective, config.reward,
                           unselected_probe=probes)

    normalized = normalize_features(ctx.state, state.weights.scaling)
    snapshot = with_stop_node(normalized)
    rewards = dict(report.column_rewards)
    rewards[STOP_ID] = report.stop_reward
    rewards.update(report.unselected_rewards)
    transition = qnet.ReplayTransition(
        state=snapshot,
        selected=tuple(ctx.episode.picks),
        rewards=rewards,
        next_state=None,
        terminal=False,
    )
    if state.pending is not None:
        state.pending.next_state = normalized
        state.replay.append(state.pending)
    state.pending = transition

    if len(state.replay) >= config.batch_size:
        idx = state.rng.choice(len(state.replay), size=config.batch_size,
                               replace=False)
        batch = [state.replay[int(i)] for i in idx]
        state.weights, loss = qnet.train_step(
            state.weights, state.target, batch,
            learning_rate=config.learning_rate, gamma=config.gamma)
        state.losses.append(loss)
        state.grad_steps += 1
        if state.grad_steps % config.target_sync == 0:
            state.target = state.weights.copy()


def _validation_iterations(weights, config: TrainConfig) -> float:
    total = 0
    for inst in config.validation_instances:
        try:
            result = engine.run(inst, make_policy("ffcg", weights=weights),
                                engine.CgConfig(candidates=config.candidates,
                                                gap=config.gap,
                                                max_iterations=config.max_iterations))
            total += result.trace.iterations
        except IterationCapExceeded:
            total += 10_000  # cap treated as a very bad validation score
    return total / max(1, len(config.validation_instances))


# -- evaluation ------------------------------------------------------------------


@dataclass(frozen=True)
class PolicyStats:
    policy: str
    n_instances: int
    iterations_mean: float
    iterations_std: float
    columns_mean: float
    columns_std: float
    ms_mean: float
    ms_std: float
    objective_mean: float
    objective_std: float


@dataclass
class EvaluationReport:
    stats: list                        # PolicyStats per policy
    per_instance: dict                 # (policy, instance idx) -> summary dict
    traces: dict                       # (policy, instance idx) -> CgTrace


def _std(xs) -> float:
    return float(statistics.pstdev(xs)) if len(xs) > 1 else 0.0


def evaluate(weights, instances: Sequence, policy_names: Sequence[str],
             candidates: int = 10, gap: float = 0.15, fixed_k: int = 5,
             seed: int = 0, objective_agreement: float = 1e-6) -> EvaluationReport:
    """Run each policy over each instance; asserts all policies converge to
    the same LP optimum per instance (within the stated relative tolerance)."""
    if not policy_names:
        raise EmptyCandidates("evaluate needs at least one policy")
    stats = []
    per_instance = {}
    traces = {}
    for name in policy_names:
        iters, cols, times, objs = [], [], [], []
        for j, inst in enumerate(instances):
            policy = make_policy(name, weights=weights, k=fixed_k,
                                 rng=np.random.default_rng(seed + j))
            cfg = engine.CgConfig(candidates=candidates, gap=gap,
                                  rng=np.random.default_rng(seed + j))
            t0 = time.perf_counter()
            result = engine.run(inst, policy, cfg)
            wall = (time.perf_counter() - t0) * 1e3
            trace = result.trace
            iters.append(trace.iterations)
            cols.append(trace.total_selected)
            times.append(wall)
            objs.append(result.solution.objective)
            per_instance[(name, j)] = {
                "iterations": trace.iterations,
                "columns": trace.total_selected,
                "ms": wall,
                "objective": result.solution.objective,
            }
            traces[(name, j)] = trace
        stats.append(PolicyStats(
            policy=name, n_instances=len(instances),
            iterations_mean=float(np.mean(iters)), iterations_std=_std(iters),
            columns_mean=float(np.mean(cols)), columns_std=_std(cols),
            ms_mean=float(np.mean(times)), ms_std=_std(times),
            objective_mean=float(np.mean(objs)), objective_std=_std(objs),
        ))
    for j in range(len(instances)):
        objs = [per_instance[(name, j)]["objective"] for name in policy_names]
        spread = max(objs) - min(objs)
        if spread > objective_agreement * max(1.0, abs(objs[0])):
            raise AssertionError(
                f"policies disagree on instance {j}: objectives {objs}")
    return EvaluationReport(stats=stats, per_instance=per_instance, traces=traces)
