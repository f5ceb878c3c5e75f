import math

import numpy as np
import pandas as pd
import pytest

from harness.models import ExperimentConfig, ExperimentKind, TrialRecord
from harness.reports import (
    PLOT_COLUMNS,
    load_records,
    quantile,
    report_plot_data,
    summarize,
    write_jsonl,
    write_summary_csv,
)
from sketches.errors import InvalidArgumentError


def _record(trial, ratio, success=True, aborted=False, parameter=0.5, wall=None):
    return TrialRecord(
        trial=trial, seed=trial, kind=ExperimentKind.SET_QUERY_L2, parameter=parameter,
        n=100, k=10, w=840, error_ratio=ratio, success=success, aborted=aborted, wall_time_s=wall,
    )


def test_quantile_interpolates_order_statistics():
    values = list(range(1, 101))
    assert quantile(values, 0.5) == pytest.approx(50.5)
    assert quantile(values, 0.0) == 1 and quantile(values, 1.0) == 100
    assert math.isnan(quantile([], 0.5))
    with pytest.raises(InvalidArgumentError):
        quantile(values, 1.5)


@pytest.mark.parametrize("seed", range(5))
def test_quantile_matches_sorted_oracle(seed):
    rng = np.random.default_rng(seed)
    values = rng.normal(size=int(rng.integers(2, 60)))
    ordered = sorted(values)
    for q in (0.1, 0.5, 0.9):
        position = q * (len(ordered) - 1)
        low = int(math.floor(position))
        high = min(low + 1, len(ordered) - 1)
        expected = ordered[low] + (position - low) * (ordered[high] - ordered[low])
        assert quantile(values, q) == pytest.approx(expected)


def test_summarize_rates_and_threshold():
    records = [_record(0, 0.1), _record(1, 0.2), _record(2, math.inf, success=False, aborted=True), _record(3, 0.3)]
    config = ExperimentConfig(n=100, k=10, min_success_rate=0.75)
    summary = summarize(config, records, levels=[0.5])
    assert summary.success_rate == 0.75 and summary.abort_rate == 0.25
    assert summary.infinite_ratios == 1
    assert summary.quantiles == {"q0.5": pytest.approx(0.2)}
    assert summary.passed
    assert not summarize(config.model_copy(update={"min_success_rate": 0.9}), records).passed


def test_summarize_without_trials():
    summary = summarize(ExperimentConfig(n=100, k=10, min_success_rate=1.0), [])
    assert summary.trials == 0 and summary.passed


def test_jsonl_round_trip_keeps_infinity(tmp_path):
    records = [_record(0, 0.25, wall=0.5), _record(1, math.inf, success=False, aborted=True, wall=0.7)]
    path = write_jsonl(records, tmp_path / "out" / "run.jsonl")
    lines = path.read_text().splitlines()
    assert len(lines) == 2 and "Infinity" in lines[1]
    assert "wall_time_s" not in lines[0]

    loaded = load_records(path)
    assert loaded[0].model_dump() == records[0].model_copy(update={"wall_time_s": None}).model_dump()
    assert math.isinf(loaded[1].error_ratio)

    timed = load_records(write_jsonl(records, tmp_path / "timed.jsonl", include_timing=True))
    assert timed[1].wall_time_s == 0.7


def test_load_rejects_malformed_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text(_record(0, 0.1).model_dump_json() + "\n{\"trial\": \"x\"}\n")
    with pytest.raises(InvalidArgumentError):
        load_records(path)


def test_plot_data_groups_by_parameter(tmp_path):
    records = [_record(i, float(i), parameter=p) for i, p in enumerate([0.5, 0.5, 0.5, 0.25, 0.25])]
    records.append(_record(9, math.inf, parameter=0.25))
    table = report_plot_data(records, tmp_path / "plot.csv", levels=[0.5])
    assert list(table.columns) == PLOT_COLUMNS
    assert table["parameter"].tolist() == [0.25, 0.5]
    assert table["error_ratio"].tolist() == pytest.approx([3.5, 1.0])
    assert pd.read_csv(tmp_path / "plot.csv").shape == (2, 3)


def test_plot_data_for_empty_report_has_only_headers(tmp_path):
    path = tmp_path / "empty.csv"
    table = report_plot_data([], path)
    assert table.empty
    assert path.read_text().strip() == ",".join(PLOT_COLUMNS)


def test_plot_data_rejects_foreign_rows():
    with pytest.raises(InvalidArgumentError):
        report_plot_data([{"parameter": 1}])


def test_summary_csv(tmp_path):
    config = ExperimentConfig(n=100, k=10)
    summary = summarize(config, [_record(0, 0.1), _record(1, 0.3)], levels=[0.5, 0.9])
    frame = pd.read_csv(write_summary_csv(summary, tmp_path / "summary.csv"))
    assert frame.loc[0, "trials"] == 2
    assert frame.loc[0, "q0.5"] == pytest.approx(0.2)
    assert "q0.9" in frame.columns
