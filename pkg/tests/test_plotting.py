import numpy as np
import pytest

from colgen.engine import CgTrace, TraceRow
from colgen.plotting import (
    column_size_profile,
    normalize_trajectory,
    normalized_mean_trajectories,
    plot_column_sizes,
    plot_convergence,
    quartile_means,
)


def trace_from(objs, selected=None):
    selected = selected or [1] * (len(objs) - 1) + [0]
    rows = [TraceRow(i, o, 10 if s else 0, s, 0, 1.0)
            for i, (o, s) in enumerate(zip(objs, selected))]
    return CgTrace(obj0=objs[0], rows=rows)


def test_normalize_trajectory_endpoints():
    out = normalize_trajectory([10.0, 6.0, 5.0])
    assert out[0] == 1.0
    assert out[-1] == 0.0
    assert np.all((0.0 <= out) & (out <= 1.0))


def test_constant_trajectory_is_flat_zero():
    out = normalize_trajectory([4.0, 4.0, 4.0])
    assert np.all(out == 0.0)
    mean, std = normalized_mean_trajectories([trace_from([4.0, 4.0, 4.0])])
    assert np.all(mean == 0.0)
    assert np.all(std == 0.0)


def test_padding_with_final_value():
    t1 = trace_from([10.0, 5.0, 0.0])
    t2 = trace_from([8.0, 0.0])
    mean, std = normalized_mean_trajectories([t1, t2])
    assert len(mean) == 3
    # t2 padded with its final normalized value 0
    assert mean[2] == pytest.approx(0.0)
    assert mean[0] == pytest.approx(1.0)


def test_column_size_profile_recounts_trace_rows():
    t1 = trace_from([10.0, 6.0, 5.0, 5.0], selected=[4, 2, 1, 0])
    t2 = trace_from([9.0, 5.0, 5.0], selected=[5, 1, 0])
    means, buckets = column_size_profile([t1, t2])
    assert buckets[0] == [4, 5]
    assert buckets[1] == [2, 1]
    assert buckets[2] == [1, 0]
    assert buckets[3] == [0]
    assert means[0] == pytest.approx(4.5)
    assert means[3] == pytest.approx(0.0)


def test_quartile_means_shape():
    traces = [trace_from([10, 9, 8, 7, 6, 5, 4, 3], selected=[8, 8, 6, 4, 3, 2, 1, 0])]
    first, last = quartile_means(traces)
    assert first == pytest.approx(8.0)
    assert last == pytest.approx((1 + 0) / 2)
    assert first > last


def test_charts_written(tmp_path):
    groups = {
        "greedy-s": [trace_from([10.0, 7.0, 5.0, 5.0])],
        "ffcg": [trace_from([10.0, 5.0, 5.0], selected=[7, 2, 0])],
    }
    conv = tmp_path / "conv.svg"
    plot_convergence(groups, conv)
    text = conv.read_text()
    assert text.lstrip().startswith("<?xml")
    assert "svg" in text
    sizes = tmp_path / "sizes.svg"
    plot_column_sizes(groups, sizes)
    assert sizes.exists() and sizes.stat().st_size > 0
