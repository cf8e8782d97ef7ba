import numpy as np
import pytest

from colgen.columns import Column, ColumnStatus
from colgen.errors import StateInconsistency, UnknownColumn
from colgen.features import (
    STATUS_IDX,
    STOP_ID,
    BipartiteState,
    ScalingProfile,
    build_state,
    normalize_features,
    update_context,
    with_stop_node,
)
from colgen.lp import LpProblem, solve


def make_solution_and_columns():
    cols = [
        Column(cost=1.0, coeffs=[2.0, 0.0], id=0, status=ColumnStatus.EXISTING,
               iters_in_basis=3, iters_out_of_basis=1, entered_last_iter=True,
               problem_feature=4.0),
        Column(cost=1.0, coeffs=[0.0, 3.0], id=1, status=ColumnStatus.EXISTING,
               iters_in_basis=2, left_last_iter=True, problem_feature=1.0),
    ]
    problem = LpProblem([c.cost for c in cols],
                        np.column_stack([c.coeffs for c in cols]),
                        [4.0, 6.0])
    return cols, solve(problem)


def make_candidates():
    return [
        Column(cost=1.0, coeffs=[1.0, 1.0], id=10, problem_feature=2.0),
        Column(cost=1.0, coeffs=[0.0, 2.0], id=11, problem_feature=3.0),
    ], [-0.4, -0.2]


def test_counting_nodes_and_edges():
    cols, sol = make_solution_and_columns()
    state = build_state(cols, sol, [], [])
    assert state.n_columns == 2
    assert state.n_constraints == 2
    assert len(state.edge_columns) == 2  # one nonzero per column
    cands, rcs = make_candidates()
    state = build_state(cols, sol, cands, rcs)
    assert state.n_columns == 4
    assert len(state.edge_columns) == 5
    assert state.constraint_features[:, 1].tolist() == [2.0, 3.0]


def test_dense_two_by_two_gives_four_nodes_four_edges():
    cols = [
        Column(cost=1.0, coeffs=[2.0, 1.0], id=0, status=ColumnStatus.EXISTING),
        Column(cost=1.0, coeffs=[1.0, 3.0], id=1, status=ColumnStatus.EXISTING),
    ]
    sol = solve(LpProblem([1.0, 1.0],
                          np.column_stack([c.coeffs for c in cols]),
                          [4.0, 6.0]))
    state = build_state(cols, sol, [], [])
    assert state.n_columns + state.n_constraints == 4
    assert len(state.edge_columns) == 4


def test_existing_features():
    cols, sol = make_solution_and_columns()
    state = build_state(cols, sol, *make_candidates())
    f0 = state.column_features[0]
    assert abs(f0[0]) <= 1e-7          # basic column: reduced cost ~ 0
    assert f0[1] == pytest.approx(2.0)  # primal value 4/2
    assert f0[2] == 1.0                 # connectivity
    assert f0[3] == 3.0 and f0[4] == 1.0
    assert f0[5] == 0.0 and f0[6] == 1.0
    assert f0[STATUS_IDX] == -1.0
    assert f0[8] == 4.0
    f1 = state.column_features[1]
    assert f1[5] == 1.0 and f1[6] == 0.0


def test_candidate_features():
    cols, sol = make_solution_and_columns()
    cands, rcs = make_candidates()
    state = build_state(cols, sol, cands, rcs)
    f = state.column_features[2]
    assert f[0] == pytest.approx(-0.4)
    assert f[1] == 0.0                  # candidates carry solution value 0
    assert f[2] == 2.0
    assert f[STATUS_IDX] == 1.0
    # constraint features: dual values in column 0
    assert state.constraint_features[:, 0] == pytest.approx(sol.duals)


def test_candidate_without_reduced_cost():
    cols, sol = make_solution_and_columns()
    cands, _ = make_candidates()
    with pytest.raises(StateInconsistency):
        build_state(cols, sol, cands, [-0.4])
    with pytest.raises(StateInconsistency):
        build_state(cols, sol, cands, [-0.4, float("nan")])


def test_selected_candidate_status_flip():
    cols, sol = make_solution_and_columns()
    cands, rcs = make_candidates()
    state = build_state(cols, sol, cands, rcs, selected_ids={10})
    assert state.column_features[2, STATUS_IDX] == 0.0
    assert state.column_features[3, STATUS_IDX] == 1.0


def test_update_context_inserts_stop_once():
    cols, sol = make_solution_and_columns()
    cands, rcs = make_candidates()
    state = build_state(cols, sol, cands, rcs)
    s1 = update_context(state, 10)
    assert s1.stop_node_index == 4
    assert s1.column_ids[-1] == STOP_ID
    stop_feats = s1.column_features[s1.stop_node_index]
    assert stop_feats[STATUS_IDX] == 1.0
    assert np.all(stop_feats[:STATUS_IDX] == 0.0) and stop_feats[8] == 0.0
    s2 = update_context(s1, 11)
    assert s2.stop_node_index == 4  # STOP appears exactly once
    assert (s2.statuses == 0.0).sum() == 2


def test_update_context_only_touches_status_and_stop():
    cols, sol = make_solution_and_columns()
    cands, rcs = make_candidates()
    state = build_state(cols, sol, cands, rcs)
    s1 = update_context(state, 10)
    before = state.column_features
    after = s1.column_features[: state.n_columns]
    mask = np.ones_like(before, dtype=bool)
    mask[2, STATUS_IDX] = False
    assert np.array_equal(before[mask], after[mask])
    assert np.array_equal(s1.constraint_features, state.constraint_features)


def test_update_context_unknown_column():
    cols, sol = make_solution_and_columns()
    cands, rcs = make_candidates()
    state = build_state(cols, sol, cands, rcs)
    with pytest.raises(UnknownColumn):
        update_context(state, 99)
    with pytest.raises(UnknownColumn):
        update_context(state, 0)  # existing node, not selectable
    s1 = update_context(state, 10)
    with pytest.raises(UnknownColumn):
        update_context(s1, 10)  # already selected


def test_identity_profile_is_noop():
    cols, sol = make_solution_and_columns()
    state = build_state(cols, sol, *make_candidates())
    out = normalize_features(state, ScalingProfile.identity())
    assert np.array_equal(out.column_features, state.column_features)
    assert np.array_equal(out.constraint_features, state.constraint_features)


def test_scaling_reduced_costs():
    cols, sol = make_solution_and_columns()
    state = build_state(cols, sol, *make_candidates())
    obj0 = 5.0
    scale = np.ones(9)
    scale[0] = obj0
    profile = ScalingProfile(np.zeros(9), scale, np.zeros(2), np.ones(2))
    out = normalize_features(state, profile)
    assert out.column_features[:, 0] == pytest.approx(state.column_features[:, 0] / obj0)


def test_profile_never_rescales_flags_or_status():
    profile = ScalingProfile(np.full(9, 7.0), np.full(9, 3.0),
                             np.zeros(2), np.ones(2))
    assert profile.column_shift[5] == 0.0
    assert profile.column_scale[STATUS_IDX] == 1.0


def test_standardization_bounds_training_features():
    rng = np.random.default_rng(0)
    states = []
    cols, sol = make_solution_and_columns()
    for _ in range(20):
        cands = [Column(cost=1.0, coeffs=rng.integers(0, 3, 2).astype(float), id=50)]
        states.append(build_state(cols, sol, cands, [float(rng.uniform(-5, -0.1))]))
    profile = ScalingProfile.from_states(states)
    for s in states:
        out = normalize_features(s, profile)
        cont = out.column_features[:, [0, 1, 2, 3, 4, 8]]
        assert np.all(np.abs(cont) <= 5.0)
        assert np.all(np.abs(out.constraint_features) <= 5.0)


def test_normalization_preserves_stop_encoding():
    cols, sol = make_solution_and_columns()
    state = with_stop_node(build_state(cols, sol, *make_candidates()))
    profile = ScalingProfile(np.full(9, 2.0), np.full(9, 4.0), np.zeros(2), np.ones(2))
    out = normalize_features(state, profile)
    stop = out.column_features[out.stop_node_index]
    assert stop[STATUS_IDX] == 1.0
    assert np.all(stop[:STATUS_IDX] == 0.0) and stop[8] == 0.0


def test_rebuild_is_deterministic():
    cols, sol = make_solution_and_columns()
    cands, rcs = make_candidates()
    a = build_state(cols, sol, cands, rcs)
    b = build_state(cols, sol, cands, rcs)
    assert np.array_equal(a.column_features, b.column_features)
    assert np.array_equal(a.constraint_features, b.constraint_features)
    assert np.array_equal(a.edge_weights, b.edge_weights)
    assert a.column_ids == b.column_ids
