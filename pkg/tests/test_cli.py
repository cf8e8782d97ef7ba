import json
import re

import numpy as np
import pytest

from colgen.cli import main
from colgen.engine import CgTrace
from colgen.instances import from_json, generate_csp, to_json
from colgen.qnet import init_weights, save_weights


def write_suite(tmp_path, count=3, n=25, m=4, seed0=100):
    d = tmp_path / "suite"
    d.mkdir(exist_ok=True)
    for i in range(count):
        inst = generate_csp(seed=seed0 + i, roll_length=n, n_item_types=m)
        (d / f"csp_{i:03d}.json").write_text(to_json(inst))
    return d


def test_gen_writes_instances(tmp_path, capsys):
    out = tmp_path / "gen"
    code = main(["gen", "--problem", "csp", "--count", "4", "--seed", "7",
                 "--roll-length", "30", "--item-types", "3", "5",
                 "--out", str(out)])
    assert code == 0
    files = sorted(out.glob("*.json"))
    assert len(files) == 4
    inst = from_json(files[0].read_text())
    assert inst.roll_length == 30


def test_gen_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["gen", "--count", "3", "--seed", "5", "--out", str(a)])
    main(["gen", "--count", "3", "--seed", "5", "--out", str(b)])
    fa = sorted(p.read_text() for p in a.glob("*.json"))
    fb = sorted(p.read_text() for p in b.glob("*.json"))
    assert fa == fb


def test_gen_vrptw(tmp_path):
    out = tmp_path / "v"
    code = main(["gen", "--problem", "vrptw", "--count", "2", "--seed", "3",
                 "--customers", "4", "6", "--out", str(out)])
    assert code == 0
    assert len(list(out.glob("vrptw_*.json"))) == 2


def test_solve_smoke(tmp_path, capsys):
    suite = write_suite(tmp_path, count=1)
    inst_path = next(suite.glob("*.json"))
    code = main(["solve", "--instance", str(inst_path), "--policy", "greedy-s"])
    assert code == 0
    out = capsys.readouterr().out
    assert re.search(r"objective=[\d.]+", out)
    assert "iterations=" in out and "columns_added=" in out


def test_solve_missing_model_is_usage_error(tmp_path, capsys):
    suite = write_suite(tmp_path, count=1)
    inst_path = next(suite.glob("*.json"))
    code = main(["solve", "--instance", str(inst_path), "--policy", "ffcg"])
    assert code == 2
    assert "requires --model" in capsys.readouterr().err


def test_solve_unknown_policy(tmp_path, capsys):
    suite = write_suite(tmp_path, count=1)
    inst_path = next(suite.glob("*.json"))
    assert main(["solve", "--instance", str(inst_path), "--policy", "magic"]) == 2


def test_solve_trace_format(tmp_path):
    suite = write_suite(tmp_path, count=1)
    inst_path = next(suite.glob("*.json"))
    trace_path = tmp_path / "trace.csv"
    code = main(["solve", "--instance", str(inst_path), "--policy", "greedy-m",
                 "--trace", str(trace_path)])
    assert code == 0
    lines = trace_path.read_text().splitlines()
    assert lines[0] == "iter,obj,n_candidates,n_selected,n_redundant,ms"
    trace = CgTrace.from_csv(trace_path.read_text())
    assert trace.rows[-1].n_candidates == 0


def test_solve_rl_policy_with_model(tmp_path, capsys):
    suite = write_suite(tmp_path, count=1)
    inst_path = next(suite.glob("*.json"))
    model = tmp_path / "w.json"
    save_weights(init_weights(hidden=8, seed=0), model)
    code = main(["solve", "--instance", str(inst_path), "--policy", "ffcg",
                 "--model", str(model)])
    assert code == 0
    assert "objective=" in capsys.readouterr().out


def test_train_then_solve(tmp_path, capsys):
    suite = write_suite(tmp_path, count=3)
    weights_path = tmp_path / "weights.json"
    log_path = tmp_path / "log.csv"
    code = main(["train", "--instances", str(suite), "--out", str(weights_path),
                 "--passes", "1", "--hidden", "8", "--batch-size", "4",
                 "--replay", "64", "--log", str(log_path), "--seed", "2"])
    assert code == 0
    assert weights_path.exists()
    header = log_path.read_text().splitlines()[0]
    assert header == "episode,instance,loss_mean,iters,cols_added,epsilon"
    inst_path = next(suite.glob("*.json"))
    assert main(["solve", "--instance", str(inst_path), "--policy", "rl-single",
                 "--model", str(weights_path)]) == 0


def test_bench_counts_rows_and_traces(tmp_path, capsys):
    suite = write_suite(tmp_path, count=3)
    results = tmp_path / "results.csv"
    traces = tmp_path / "traces"
    code = main(["bench", "--instances", str(suite),
                 "--policies", "greedy-s,greedy-m",
                 "--out", str(results), "--traces", str(traces)])
    assert code == 0
    rows = results.read_text().strip().splitlines()
    assert rows[0] == "policy,instance,iterations,columns,ms,objective"
    assert len(rows) == 1 + 2 * 3  # 2 policies x 3 instances
    assert len(list(traces.glob("greedy-s__*.csv"))) == 3
    table = capsys.readouterr().out
    assert "greedy-s" in table and "greedy-m" in table
    aligned = (tmp_path / "results.txt").read_text()
    assert aligned.splitlines()[0].startswith("policy")
    assert "greedy-m" in aligned


def test_bench_means_match_trace_recomputation(tmp_path):
    suite = write_suite(tmp_path, count=3)
    results = tmp_path / "results.csv"
    traces = tmp_path / "traces"
    main(["bench", "--instances", str(suite), "--policies", "greedy-m",
          "--out", str(results), "--traces", str(traces)])
    per_rows = [ln.split(",") for ln in results.read_text().strip().splitlines()[1:]]
    from_csv = {r[1]: (int(r[2]), int(r[3])) for r in per_rows}
    for f in traces.glob("greedy-m__*.csv"):
        label = f.stem.split("__", 1)[1]
        trace = CgTrace.from_csv(f.read_text())
        assert from_csv[label] == (trace.iterations, trace.total_selected)
    table_line = (tmp_path / "results.txt").read_text().splitlines()[1]
    mean_iters = float(table_line.split()[1])
    assert mean_iters == pytest.approx(
        np.mean([v[0] for v in from_csv.values()]), abs=5e-3)


def test_bench_workers_deterministic_results(tmp_path):
    suite = write_suite(tmp_path, count=4)
    r1 = tmp_path / "r1.csv"
    r2 = tmp_path / "r2.csv"
    main(["bench", "--instances", str(suite), "--policies", "greedy-m",
          "--out", str(r1), "--workers", "1", "--seed", "9"])
    main(["bench", "--instances", str(suite), "--policies", "greedy-m",
          "--out", str(r2), "--workers", "3", "--seed", "9"])
    strip_ms = lambda text: [",".join(ln.split(",")[:4]) for ln in text.splitlines()]
    assert strip_ms(r1.read_text()) == strip_ms(r2.read_text())


def test_bench_rejects_unknown_policy(tmp_path):
    suite = write_suite(tmp_path, count=1)
    assert main(["bench", "--instances", str(suite), "--policies", "nope"]) == 2


def test_plot_convergence_and_sizes(tmp_path):
    suite = write_suite(tmp_path, count=2)
    traces = tmp_path / "traces"
    main(["bench", "--instances", str(suite), "--policies", "greedy-s,greedy-m",
          "--out", str(tmp_path / "r.csv"), "--traces", str(traces)])
    out = tmp_path / "chart.svg"
    assert main(["plot", "--traces", str(traces), "--out", str(out)]) == 0
    assert out.exists() and "<svg" in out.read_text()
    sizes = tmp_path / "sizes.svg"
    assert main(["plot", "--traces", str(traces), "--mode", "sizes",
                 "--out", str(sizes)]) == 0
    assert sizes.exists()


def test_plot_malformed_trace(tmp_path, capsys):
    traces = tmp_path / "traces"
    traces.mkdir()
    (traces / "greedy-s__x.csv").write_text("not,a,trace\n1,2,3\n")
    assert main(["plot", "--traces", str(traces), "--out",
                 str(tmp_path / "o.svg")]) == 2


def test_usage_error_exit_code():
    assert main(["solve"]) == 2  # missing required args
    assert main(["no-such-command"]) == 2
