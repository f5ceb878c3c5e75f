import json
import subprocess
import sys
from pathlib import Path

import pytest

import cli
from harness.models import ExperimentKind, Report, Summary

ROOT = Path(__file__).resolve().parents[1]


def _run(*args, cwd=ROOT):
    return subprocess.run([sys.executable, str(ROOT / "cli.py"), *args], cwd=cwd, capture_output=True, text=True)


def test_gen_sketch_recover_pipeline(tmp_path):
    signal = tmp_path / "x.json"
    out = _run("gen", "--family", "random", "--n", "2000", "--k", "20", "--seed", "5", "--out", str(signal), "--json")
    assert out.returncode == 0, out.stderr
    support = sorted(i for i, _ in json.loads(signal.read_text())["pairs"])

    out = _run("sketch", "--signal", str(signal), "--k", "20", "--eps", "0.25", "--seed", "9",
               "--out", str(tmp_path / "sk"), "--json")
    assert out.returncode == 0, out.stderr
    assert json.loads(out.stdout)["w"] == 15_680

    out = _run("recover", "--matrix", str(tmp_path / "sk" / "matrix.sqs"), "--sketch", str(tmp_path / "sk" / "sketch.sqs"),
               "--support", ",".join(map(str, support)), "--json")
    assert out.returncode == 0, out.stderr
    result = json.loads(out.stdout)
    assert not result["aborted"] and result["peeled"] == 20
    truth = dict((int(i), v) for i, v in json.loads(signal.read_text())["pairs"])
    for i, v in result["estimate"]:
        assert v == pytest.approx(truth[i], abs=1e-9)


def test_usage_errors_exit_with_two(tmp_path):
    assert _run("gen", "--family", "zipfian").returncode == 2  # --n ausente
    assert _run("nope").returncode == 2
    assert cli.main(["gen", "--family", "block", "--n", "100"]) == cli.EXIT_USAGE
    assert cli.main(["recover", "--matrix", str(tmp_path / "missing.sqs"), "--sketch", "x", "--support", "1"]) == 2
    assert cli.main(["experiment", "--config", str(tmp_path / "missing.env")]) == 2


def test_json_error_payload(tmp_path, capsys):
    assert cli.main(["sketch", "--signal", str(tmp_path / "none.json"), "--k", "3", "--out", str(tmp_path), "--json"]) == 2
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "error"


def test_config_file_with_flag_override(tmp_path):
    config_file = tmp_path / "exp.env"
    config_file.write_text("KIND=set_query_l1\nN=500\nK=5\nTRIALS=7\nNOISE=gaussian\nNOISE_SIGMA=0.01\n")
    args = cli.build_parser().parse_args(["experiment", "--config", str(config_file), "--k", "8", "--trials", "2"])
    config = cli.build_config(args)
    assert config.kind is ExperimentKind.SET_QUERY_L1
    assert (config.n, config.k, config.trials) == (500, 8, 2)
    assert config.noise.kind.value == "gaussian" and config.noise.sigma == 0.01


def test_experiment_writes_outputs(tmp_path, capsys):
    code = cli.main(["experiment", "--kind", "set_query_l2", "--n", "500", "--k", "5", "--trials", "2",
                     "--seed", "3", "--out", str(tmp_path), "--json"])
    assert code == cli.EXIT_OK
    payload = json.loads(capsys.readouterr().out)
    assert payload["trials"] == 2
    assert Path(payload["jsonl"]).exists() and Path(payload["summary_csv"]).exists()


def test_experiment_below_threshold_exits_with_one(tmp_path, monkeypatch):
    def failing(config, write=True):
        summary = Summary(kind=config.kind, trials=1, success_rate=0.0, abort_rate=1.0, passed=False)
        return Report(config=config, summary=summary)

    monkeypatch.setattr(cli, "run_experiment", failing)
    assert cli.main(["experiment", "--n", "100", "--k", "5", "--min-success-rate", "0.9"]) == cli.EXIT_THRESHOLD


def test_report_subcommand(tmp_path, capsys):
    assert cli.main(["experiment", "--n", "500", "--k", "5", "--trials", "3", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    jsonl = tmp_path / "set_query_l2.jsonl"
    assert cli.main(["report", "--input", str(jsonl), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["records"] == 3
    assert Path(payload["out"]).exists()


@pytest.mark.parametrize("bad_file", [False, True])
def test_malformed_support_is_a_usage_error(tmp_path, capsys, bad_file):
    signal = tmp_path / "x.json"
    assert cli.main(["gen", "--family", "random", "--n", "200", "--k", "5", "--seed", "1", "--out", str(signal)]) == 0
    assert cli.main(["sketch", "--signal", str(signal), "--k", "5", "--out", str(tmp_path / "sk")]) == 0
    capsys.readouterr()

    support = "1,a,3"
    if bad_file:
        support_file = tmp_path / "support.json"
        support_file.write_text("[1, 2,")
        support = str(support_file)
    code = cli.main(["recover", "--matrix", str(tmp_path / "sk" / "matrix.sqs"),
                     "--sketch", str(tmp_path / "sk" / "sketch.sqs"), "--support", support, "--json"])
    assert code == cli.EXIT_USAGE
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "error" and "Suporte inválido" in payload["message"]
