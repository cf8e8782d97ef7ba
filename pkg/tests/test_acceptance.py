"""Acceptance suite: every criterion prints one [PASS]/[FAIL] line.

Run with `pytest tests/test_acceptance.py -v -s`. Criteria 6-9 share one
desk-scale training + benchmark run (module-scoped fixture).
"""

import time

import numpy as np
import pytest

from colgen import engine, plotting, qnet
from colgen.credit import RewardConfig, assign_credit, effective_set, leave_one_out
from colgen.credit import SubsetLp
from colgen.instances import generate_csp, generate_vrptw
from colgen.lp import LpProblem, LpStatus, SimplexSolver, reduced_cost, solve
from colgen.policies import make_policy
from colgen.pricing_csp import price as price_csp
from colgen.pricing_vrptw import price as price_vrptw
from colgen.training import TrainConfig, evaluate, train

import oracles
from test_qnet import draw_checkable_pair


def report(n, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"\n[{status}] criterion {n}: {name} {detail}")
    assert ok, f"criterion {n} ({name}) failed: {detail}"


# -- criterion 1: LP oracle equivalence -----------------------------------------


def test_criterion_1_lp_oracle_equivalence():
    started = time.perf_counter()
    rng = np.random.default_rng(1001)
    mismatches = []
    checked = 0
    for trial in range(100):
        m = int(rng.integers(1, 7))
        n = int(rng.integers(max(1, m - 1), 11))
        a = rng.integers(-3, 4, size=(m, n)).astype(float)
        if rng.random() < 0.75:
            b = a @ rng.integers(0, 3, size=n).astype(float)
        else:
            b = rng.integers(-4, 5, size=m).astype(float)
        c = rng.integers(-5, 6, size=n).astype(float)
        status, obj = oracles.enumerate_lp(c, a, b)
        sol = solve(LpProblem(c, a, b))
        if sol.status is not status:
            mismatches.append(f"trial {trial}: status {sol.status} != {status}")
            continue
        if status is not LpStatus.OPTIMAL:
            continue
        checked += 1
        if abs(sol.objective - obj) > 1e-6 * max(1.0, abs(obj)):
            mismatches.append(f"trial {trial}: obj {sol.objective} != {obj}")
        if abs(sol.objective - float(sol.duals @ b)) > 1e-6 * max(1.0, abs(sol.objective)):
            mismatches.append(f"trial {trial}: strong duality violated")
        for j in range(n):
            if sol.primal[j] > 1e-6 and abs(reduced_cost(sol, c[j], a[:, j])) > 1e-6:
                mismatches.append(f"trial {trial}: complementary slackness violated")
    elapsed = time.perf_counter() - started
    ok = not mismatches and checked >= 30 and elapsed < 10.0
    report(1, "LP-oracle equivalence", ok,
           f"({checked} optima of 100 LPs, {elapsed:.1f}s; issues: {mismatches[:3]})")


# -- criterion 2: pricing exactness ----------------------------------------------


def test_criterion_2_pricing_exactness():
    started = time.perf_counter()
    rng = np.random.default_rng(2002)
    bad = []
    for trial in range(50):
        n = int(rng.integers(20, 61))
        m = int(rng.integers(2, 16))
        inst = generate_csp(seed=20_000 + trial, roll_length=n, n_item_types=m)
        duals = rng.uniform(0.0, 1.3, size=m)
        got = price_csp(inst, duals, k=1, gap=0.0)
        best_value = oracles.best_pattern_value(n, inst.item_weights, duals)
        want_rc = 1.0 - best_value
        if want_rc >= -1e-9:
            if got:
                bad.append(f"csp {trial}: expected empty, got {got[0][1]}")
        elif not got or abs(got[0][1] - want_rc) > 1e-9:
            bad.append(f"csp {trial}: rc {got[0][1] if got else None} != {want_rc}")
    for trial in range(20):
        n_cust = int(rng.integers(3, 9))
        inst = generate_vrptw(seed=30_000 + trial, n_customers=n_cust)
        duals = rng.uniform(0.0, 70.0, size=n_cust)
        got = price_vrptw(inst, duals, k=1, gap=0.0)
        want = oracles.enumerate_routes(inst, duals)
        if not want:
            if got:
                bad.append(f"vrptw {trial}: expected empty")
        elif not got or abs(got[0][1] - want[0][2]) > 1e-9:
            bad.append(f"vrptw {trial}: rc {got[0][1] if got else None} != {want[0][2]}")
    elapsed = time.perf_counter() - started
    ok = not bad and elapsed < 60.0
    report(2, "pricing exactness", ok, f"(50 CSP + 20 VRPTW, {elapsed:.1f}s; {bad[:3]})")


# -- criterion 3: CG optimality ---------------------------------------------------


ALL_POLICIES = ("greedy-s", "greedy-m", "fixed-k", "rl-single", "ffcg", "random")


def test_criterion_3_cg_reaches_full_lp_optimum():
    started = time.perf_counter()
    solver = SimplexSolver()
    weights = qnet.init_weights(hidden=8, seed=33)
    bad = []
    rng = np.random.default_rng(3003)
    for trial in range(30):
        m = int(rng.integers(4, 10))
        n = int(rng.integers(18, 31))
        inst = generate_csp(seed=40_000 + trial, roll_length=n, n_item_types=m)
        patterns = [p for p in oracles.enumerate_patterns(n, inst.item_weights)
                    if any(p)]
        mat = np.array(patterns, dtype=float).T
        full = solver.solve(LpProblem(np.ones(len(patterns)), mat,
                                      np.asarray(inst.item_demands, float)))
        assert full.status is LpStatus.OPTIMAL
        for name in ALL_POLICIES:
            policy = make_policy(name, weights=weights, rng=np.random.default_rng(trial))
            result = engine.run(inst, policy,
                                engine.CgConfig(rng=np.random.default_rng(trial)))
            if abs(result.solution.objective - full.objective) > 1e-6 * max(
                    1.0, abs(full.objective)):
                bad.append(f"csp {trial}/{name}: {result.solution.objective} vs {full.objective}")
    for trial in range(10):
        n_cust = int(rng.integers(3, 8))
        inst = generate_vrptw(seed=50_000 + trial, n_customers=n_cust)
        routes = oracles.enumerate_routes(inst, duals=None, only_improving=False)
        mat = np.zeros((n_cust, len(routes)))
        for j, (seq, _, _) in enumerate(routes):
            for v in seq[1:-1]:
                mat[v - 1, j] = 1.0
        full = solver.solve(LpProblem([c for _, c, _ in routes], mat, np.ones(n_cust)))
        assert full.status is LpStatus.OPTIMAL
        for name in ALL_POLICIES:
            policy = make_policy(name, weights=weights, rng=np.random.default_rng(trial))
            result = engine.run(inst, policy,
                                engine.CgConfig(rng=np.random.default_rng(trial)))
            if abs(result.solution.objective - full.objective) > 1e-6 * max(
                    1.0, abs(full.objective)):
                bad.append(f"vrptw {trial}/{name}: {result.solution.objective} vs {full.objective}")
    elapsed = time.perf_counter() - started
    ok = not bad and elapsed < 120.0
    report(3, "CG optimality vs full-column LP", ok,
           f"(30 CSP x 6 policies + 10 VRPTW x 6 policies, {elapsed:.1f}s; {bad[:3]})")


# -- criterion 4: credit-assignment oracle ---------------------------------------


def test_criterion_4_credit_matches_from_scratch_oracle():
    started = time.perf_counter()
    cfg = RewardConfig(alpha=2000.0, beta=0.3)
    rng = np.random.default_rng(4004)
    solver = SimplexSolver()
    bad = []
    for event in range(200):
        m = int(rng.integers(2, 6))
        base = tuple((1.0, tuple(1.0 if j == i else 0.0 for j in range(m)))
                     for i in range(m))
        rhs = rng.integers(2, 10, size=m).astype(float)
        snap = SubsetLp(base_columns=base, rhs=rhs, basis=tuple(range(m)))
        obj_prev = snap.solve_with([], solver)
        n_sel = int(rng.integers(1, 5))
        selected = {}
        for cid in range(n_sel):
            coeffs = rng.integers(0, 4, size=m).astype(float)
            if coeffs.sum() == 0:
                coeffs[int(rng.integers(0, m))] = 1.0
            selected[cid] = (float(rng.uniform(0.6, 1.4)), tuple(coeffs.tolist()))
        obj_all, loo = leave_one_out(snap, selected, solver)
        effective = effective_set(snap, selected, cfg, solver)
        rep = assign_credit(obj_prev, obj_all, obj_prev, loo, effective, cfg)
        want_eff, want_rd, want_phi, want_obj = oracles.credit_oracle(
            base, rhs, list(selected.items()), obj_prev, obj_prev,
            cfg.alpha, cfg.beta)
        if effective != want_eff:
            bad.append(f"event {event}: effective {effective} != {want_eff}")
            continue
        for cid in selected:
            got, want = rep.marginal_rewards[cid], want_rd[cid]
            if abs(got - want) > 1e-9 * max(1.0, abs(want)):
                bad.append(f"event {event}: r_delta[{cid}] {got} != {want}")
            if cid not in effective and rep.column_rewards[cid] != -cfg.beta:
                bad.append(f"event {event}: redundant reward not exactly -beta")
        if effective:
            s = sum(rep.contribution_weights.values())
            if abs(s - 1.0) > 1e-9:
                bad.append(f"event {event}: sum phi {s} != 1")
            for cid in effective:
                got, want = rep.contribution_weights[cid], want_phi[cid]
                if abs(got - want) > 1e-9 * max(1.0, abs(want)):
                    bad.append(f"event {event}: phi[{cid}] {got} != {want}")
    elapsed = time.perf_counter() - started
    ok = not bad and elapsed < 30.0
    report(4, "credit assignment vs from-scratch oracle", ok,
           f"(200 events, {elapsed:.1f}s; {bad[:3]})")


# -- criterion 5: gradient correctness -------------------------------------------


def test_criterion_5_gradient_checks():
    started = time.perf_counter()
    bad = []
    for pair in range(10):
        weights, state = draw_checkable_pair(pair + 100, hidden=32)
        rng = np.random.default_rng(pair)
        score_grads = {int(i): float(rng.normal())
                       for i in state.selectable_indices()}
        analytic = qnet.backward(weights, state, score_grads)

        def objective():
            cache = qnet._forward_full(weights, state)
            return float(sum(g * cache.scores[i] for i, g in score_grads.items()))

        for name, arr in weights.params.items():
            fd = oracles.finite_difference_grad(objective, arr, eps=1e-4)
            num = np.linalg.norm(analytic[name] - fd)
            den = max(np.linalg.norm(analytic[name]) + np.linalg.norm(fd), 1e-8)
            if num / den > 1e-4:
                bad.append(f"pair {pair} block {name}: rel err {num / den:.2e}")
    elapsed = time.perf_counter() - started
    ok = not bad and elapsed < 30.0
    report(5, "gradient finite-difference checks", ok,
           f"(10 pairs x all blocks, {elapsed:.1f}s; {bad[:3]})")


# -- criteria 6-9: shared training + benchmark run --------------------------------


def _csp_suite(count, seed0, n=50, m_range=(20, 41)):
    r = np.random.default_rng(seed0)
    return [generate_csp(seed=seed0 + i, roll_length=n,
                         n_item_types=int(r.integers(*m_range)))
            for i in range(count)]


@pytest.fixture(scope="module")
def bench_run():
    started = time.perf_counter()
    train_instances = _csp_suite(100, 11_000)
    test_instances = _csp_suite(30, 77_000)
    cfg = TrainConfig(seed=5, passes=2, hidden=32, batch_size=32,
                      target_sync=200, epsilon_start=1.0, epsilon_end=0.05,
                      learning_rate=1e-3, gap=1.0, gamma=0.0)
    weights, log = train(train_instances, cfg)
    train_s = time.perf_counter() - started

    report_eval = evaluate(weights, test_instances, ["greedy-s", "greedy-m"],
                           gap=1.0)
    ffcg_traces, ffcg_episodes = [], []
    for j, inst in enumerate(test_instances):
        result = engine.run(inst, make_policy("ffcg", weights=weights),
                            engine.CgConfig(candidates=10, gap=1.0))
        ffcg_traces.append(result.trace)
        ffcg_episodes.append(result.episodes)
    elapsed = time.perf_counter() - started
    by = {s.policy: s for s in report_eval.stats}
    return {
        "weights": weights,
        "log": log,
        "n_train": len(train_instances),
        "passes": cfg.passes,
        "greedy_s": by["greedy-s"],
        "greedy_m": by["greedy-m"],
        "ffcg_traces": ffcg_traces,
        "ffcg_episodes": ffcg_episodes,
        "elapsed": elapsed,
        "train_s": train_s,
    }


def test_criterion_6_iteration_reduction(bench_run):
    gs = bench_run["greedy_s"].iterations_mean
    gm = bench_run["greedy_m"].iterations_mean
    ff = float(np.mean([t.iterations for t in bench_run["ffcg_traces"]]))
    ok_a = gm <= 0.4 * gs
    ok_b = ff <= 0.5 * gs
    ok_scale = bench_run["n_train"] >= 100 and bench_run["passes"] >= 2
    ok_time = bench_run["elapsed"] < 1800.0
    ok = ok_a and ok_b and ok_scale and ok_time
    report(6, "directional iteration reduction", ok,
           f"(greedy-m/greedy-s {gm / gs:.3f} <= 0.4: {ok_a}; "
           f"ffcg/greedy-s {ff / gs:.3f} <= 0.5: {ok_b}; "
           f"trained on {bench_run['n_train']}x{bench_run['passes']} in "
           f"{bench_run['train_s']:.0f}s, total {bench_run['elapsed']:.0f}s)")


def test_criterion_7_fewer_columns_than_greedy_m(bench_run):
    gm_cols = bench_run["greedy_m"].columns_mean
    ff_cols = float(np.mean([t.total_selected for t in bench_run["ffcg_traces"]]))
    ok = ff_cols < gm_cols
    report(7, "ffcg adds fewer columns than greedy-m", ok,
           f"(ffcg {ff_cols:.2f} vs greedy-m {gm_cols:.2f})")


def test_criterion_8_action_budget(bench_run):
    violations = []
    total = 0
    for episodes in bench_run["ffcg_episodes"]:
        for ep in episodes:
            total += 1
            budget = (len(ep.candidate_ids) + 1) ** 2
            if ep.q_evaluations > budget:
                violations.append((ep.q_evaluations, budget))
    ok = not violations and total > 0
    report(8, "quadratic Q-evaluation budget", ok,
           f"({total} ffcg iterations checked; violations: {violations[:3]})")


def test_criterion_9_more_columns_early_than_late(bench_run):
    first, last = plotting.quartile_means(bench_run["ffcg_traces"])
    ok = first > last
    report(9, "selection size larger early than late", ok,
           f"(first-quartile mean {first:.2f} > last-quartile mean {last:.2f})")
