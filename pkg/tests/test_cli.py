import pandas as pd
import pytest
from typer.testing import CliRunner

from src.fronthaul import cli
from src.fronthaul.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, app, main
from src.fronthaul.models import InstanceCheck, ValidationReport


runner = CliRunner()


def _report(mc_passed):
    check = InstanceCheck(index=0, num_aps=2, num_ues=2, antennas_per_ap=4, ue=0, mc_passed=mc_passed,
                          mc_checks=5, residual=1e-14, filter_error=1e-13)
    return ValidationReport(instances=[check], num_samples=1000)


def test_quantizer_table():
    result = runner.invoke(app, ["table", "--quantizer"])
    assert result.exit_code == EXIT_OK
    assert "0.3634" in result.output
    assert "published" in result.output


def test_table_needs_a_flag():
    assert runner.invoke(app, ["table"]).exit_code == EXIT_USAGE


def test_simulate_writes_records(tmp_path, config_file):
    out = tmp_path / "run"
    result = runner.invoke(app, ["simulate", "--config", str(config_file), "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    frame = pd.read_csv(out / "records.csv")
    assert len(frame) == 2 * 3
    assert frame["method"].tolist()[:3] == ["equal", "stage1", "stage1+2"]
    assert frame["wall_ms"].isna().all()
    assert (out / "summary.csv").exists()


def test_simulate_reproducible(tmp_path, config_file):
    outputs = []
    for name in ("first", "second"):
        out = tmp_path / name
        result = runner.invoke(app, ["simulate", "-c", str(config_file), "-o", str(out), "--seed", "5"])
        assert result.exit_code == EXIT_OK, result.output
        outputs.append((out / "records.csv").read_bytes())
    assert outputs[0] == outputs[1]


def test_simulate_json(tmp_path, config_file):
    out = tmp_path / "run"
    result = runner.invoke(app, ["simulate", "-c", str(config_file), "-o", str(out), "--format", "both",
                                 "--trials", "1"])
    assert result.exit_code == EXIT_OK, result.output
    assert (out / "records.json").exists()
    assert len(pd.read_csv(out / "records.csv")) == 3


def test_compare_rows(tmp_path, config_file):
    out = tmp_path / "compare"
    result = runner.invoke(app, ["compare", "-c", str(config_file), "--methods", "hs,ga,sa", "--trials", "2",
                                 "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    frame = pd.read_csv(out / "records.csv")
    assert len(frame) == 3 * 2
    assert set(frame["method"]) == {"hs", "ga", "sa"}
    assert "Paired differences" in result.output


def test_convergence_trace(tmp_path, config_file):
    out = tmp_path / "convergence"
    result = runner.invoke(app, ["convergence", "-c", str(config_file), "--out", str(out)])
    assert result.exit_code == EXIT_OK, result.output
    traces = pd.read_csv(out / "convergence.csv")
    assert len(traces) == 5 + 1
    assert traces["best_eval"].is_monotonic_increasing


@pytest.mark.parametrize("mc_passed, expected", [(5, EXIT_OK), (3, EXIT_VALIDATION)])
def test_validate_exit_codes(monkeypatch, mc_passed, expected):
    monkeypatch.setattr(cli, "run_validation", lambda *args, **kwargs: _report(mc_passed))
    result = runner.invoke(app, ["validate", "--instances", "1", "--samples", "1000"])
    assert result.exit_code == expected


def test_main_usage_error():
    assert main(["simulate", "--no-such-option"]) == EXIT_USAGE


def test_main_unknown_flag():
    assert main(["table", "--no-such-flag"]) == EXIT_USAGE


def test_main_unknown_command():
    assert main(["frobnicate"]) == EXIT_USAGE


def test_main_bad_format(tmp_path, config_file):
    assert main(["simulate", "-c", str(config_file), "-o", str(tmp_path), "--format", "xml"]) == EXIT_USAGE


def test_main_config_error(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("num_ues = 0\n", encoding="utf-8")
    assert main(["simulate", "-c", str(bad), "-o", str(tmp_path / "out")]) == EXIT_USAGE


def test_main_unwritable_output(tmp_path, config_file):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    code = main(["simulate", "-c", str(config_file), "-o", str(blocker / "out"), "--trials", "1"])
    assert code == EXIT_IO


def test_main_validation_failure(monkeypatch):
    monkeypatch.setattr(cli, "run_validation", lambda *args, **kwargs: _report(0))
    assert main(["validate", "--instances", "1"]) == EXIT_VALIDATION
