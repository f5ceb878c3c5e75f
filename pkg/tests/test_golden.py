import json
from pathlib import Path

import pytest

from harness.models import ExperimentConfig
from harness.runner import run_experiment

GOLDEN = Path(__file__).resolve().parent / "golden" / "set_query_l2.json"


def test_success_rate_matches_reference_run():
    golden = json.loads(GOLDEN.read_text())
    report = run_experiment(ExperimentConfig(**golden["config"]), write=False)
    assert report.summary.trials == golden["config"]["trials"]
    assert report.summary.success_rate == pytest.approx(golden["success_rate"], abs=0.03)
    assert report.summary.abort_rate == pytest.approx(golden["abort_rate"], abs=0.03)
