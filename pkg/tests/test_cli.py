"""Command-line surface: tables, exit codes and config discovery."""
from __future__ import annotations

import json
import math
from pathlib import Path

import pytest
from typer.testing import CliRunner

from fermikit import cli, main as entry
from fermikit.cli import EXIT_CONVERGENCE, EXIT_FAILED, EXIT_USAGE, create_app, parse_complex, parse_grid, parse_ints
from fermikit.errors import ConvergenceError, DomainError

runner = CliRunner()


@pytest.fixture()
def app():
    return create_app()


def test_parsers():
    assert parse_grid("0:1:0.25") == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert parse_grid("1, 2.5") == [1.0, 2.5]
    assert parse_ints("4,8") == [4, 8]
    assert parse_complex("0.3+0.2i") == 0.3 + 0.2j
    for bad in ("1:0:1", "0:1", "a,b"):
        with pytest.raises(DomainError):
            parse_grid(bad)
    with pytest.raises(DomainError):
        parse_ints("1.5")


def test_rightmost_writes_a_csv_table(app, tmp_path):
    target = tmp_path / "cdf.csv"
    result = runner.invoke(app, ["-o", str(target), "rightmost", "--n", "2", "--q", "0.3", "--s-grid", "0,1"])
    assert result.exit_code == 0, result.output
    lines = target.read_text().splitlines()
    assert "# command: rightmost" in lines
    assert "# options.n: 2" in lines
    body = [line for line in lines if not line.startswith("#")]
    assert body[0] == "s,cdf,im_residual"
    assert len(body) == 3
    values = [float(row.split(",")[1]) for row in body[1:]]
    assert 0.0 < values[0] < values[1] < 1.0


def test_gap_as_json(app, tmp_path):
    target = tmp_path / "gap.json"
    result = runner.invoke(
        app, ["--format", "json", "-o", str(target), "gap", "--n", "1", "--q", "0.5", "--region", "-inf:0.8"]
    )
    assert result.exit_code == 0, result.output
    payload = json.loads(target.read_text())
    (row,) = payload["rows"]
    expected = 0.5 * (1.0 + math.erf(0.8 / math.sqrt(6.0)))
    assert row["probability"] == pytest.approx(expected, abs=1e-9)
    assert payload["config"]["command"] == "gap"


def test_limit_sine(app, tmp_path):
    target = tmp_path / "sine.json"
    result = runner.invoke(app, ["--format", "json", "-o", str(target), "limit", "sine", "--points", "0,0.5"])
    assert result.exit_code == 0, result.output
    (row,) = json.loads(target.read_text())["rows"]
    assert row["correlation"] == pytest.approx(1.0 - 4.0 / math.pi ** 2)


def test_sampling_is_reproducible(app, tmp_path):
    renders = []
    for name in ("first.csv", "second.csv"):
        target = tmp_path / name
        result = runner.invoke(
            app, ["-o", str(target), "sample", "--n", "2", "--q", "0.4", "--draws", "3", "--seed", "17"]
        )
        assert result.exit_code == 0, result.output
        renders.append(target.read_text())
    assert renders[0] == renders[1]
    assert "# options.rng: philox4x64" in renders[0].splitlines()


@pytest.mark.parametrize(
    "args",
    [
        ["gap", "--n", "2", "--q", "0.3", "--c", "1", "--region", "-inf:1"],
        ["gap", "--n", "2", "--q", "1.5", "--region", "-inf:1"],
        ["gap", "--n", "2", "--q", "0.3", "--region", "1:0"],
        ["gap", "--n", "2", "--q", "0.3"],
        ["--format", "xml", "limit", "sine", "--points", "0"],
        ["self-test", "--only", "everything"],
    ],
)
def test_usage_errors_exit_2(app, args):
    assert runner.invoke(app, args).exit_code == EXIT_USAGE


def test_bad_config_file_exits_2(app, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"contour": {"points": 3}}')
    result = runner.invoke(app, ["--config", str(path), "limit", "sine", "--points", "0"])
    assert result.exit_code == EXIT_USAGE


def test_convergence_failure_exits_3(app, monkeypatch):
    def stalled(*args, **kwargs):
        raise ConvergenceError("contour did not settle", {"nodes": 1024})

    monkeypatch.setattr(cli, "rightmost_cdf", stalled)
    result = runner.invoke(app, ["rightmost", "--n", "2", "--q", "0.3", "--s-grid", "0"])
    assert result.exit_code == EXIT_CONVERGENCE
    assert "nodes: 1024" in result.output


def test_unexpected_failure_exits_1(app, monkeypatch):
    def broken(*args, **kwargs):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "limit_corr_sine", broken)
    result = runner.invoke(app, ["limit", "sine", "--points", "0"])
    assert result.exit_code == EXIT_FAILED


def test_verify_identities_exit_codes(app, tmp_path):
    target = tmp_path / "mehler.csv"
    passed = runner.invoke(app, ["-o", str(target), "verify-identities", "--model", "mehler", "--z", "0.3,0.5"])
    assert passed.exit_code == 0, passed.output
    assert [line for line in target.read_text().splitlines() if not line.startswith("#")][0] == "z,lhs,rhs,gap"
    failed = runner.invoke(
        app, ["-o", str(target), "verify-identities", "--model", "mehler", "--z", "0.3", "--tol", "0"]
    )
    assert failed.exit_code == EXIT_FAILED
    unknown = runner.invoke(app, ["-o", str(target), "verify-identities", "--model", "tasep"])
    assert unknown.exit_code == EXIT_USAGE


def test_config_discovery(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.delenv(entry.CONFIG_ENV, raising=False)
    assert entry.with_config(["limit", "tw"]) == ["limit", "tw"]

    (tmp_path / "fermikit.json").write_text("{}")
    assert entry.with_config(["limit", "tw"]) == ["--config", str(Path.cwd() / "fermikit.json"), "limit", "tw"]
    assert entry.with_config(["--config", "other.json", "limit", "tw"])[:2] == ["--config", "other.json"]
    short = ["--threads", "2", "-c", "other.yaml", "limit", "tw"]
    assert entry.with_config(short) == short
