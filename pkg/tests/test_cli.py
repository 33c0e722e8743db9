import json

import numpy as np
import pytest

from resdecay import cli
from resdecay.cli import EXIT_NUMERIC, EXIT_OK, EXIT_VALIDATION, main, obtain_poles
from resdecay.model import DeltaShell
from resdecay.poles import NoConvergence


def small_config(tmp_path, **over):
    cfg = {"preset": "fig2", "name": "small", "n_poles": 40,
           "grids": [{"name": "peak", "kind": "linear", "start": 0.1, "stop": 40.0, "points": 400},
                     {"name": "tail", "kind": "log", "start": 0.5, "stop": 1e4, "points": 400}],
           "out_dir": str(tmp_path / "out"), "cache_dir": str(tmp_path / "cache")}
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_poles_command_and_cache_idempotence(tmp_path, capsys):
    args = ["poles", "--preset", "fig1", "--n-poles", "4", "--cache", str(tmp_path)]
    assert main(args) == EXIT_OK
    out = capsys.readouterr().out
    ups = [float(line.split(",")[1]) for line in out.splitlines()[2:6]]
    assert np.allclose(ups, [3.11052, 6.2213, 9.3325, 12.4444], atol=1e-3)
    (cache,) = tmp_path.glob("*.csv")
    first = cache.read_bytes()
    assert main(args) == EXIT_OK
    assert cache.read_bytes() == first
    assert len(list(tmp_path.glob("*.csv"))) == 1


def test_double_barrier_cache_flags_sharp_resonances(tmp_path, capsys):
    assert main(["poles", "--preset", "fig6", "--cache", str(tmp_path)]) == EXIT_OK
    (cache,) = tmp_path.glob("double_barrier_*_N50.csv")
    assert "# n_below_barrier=2" in cache.read_text().splitlines()
    assert "below barrier=2" in capsys.readouterr().out


def test_larger_cache_is_reused_by_truncation(tmp_path, monkeypatch):
    spec = DeltaShell()
    big = obtain_poles(spec, 20, tmp_path)

    def boom(*a, **k):
        raise AssertionError("should not solve again")

    monkeypatch.setattr(cli, "find_poles", boom)
    small = obtain_poles(spec, 5, tmp_path)
    assert np.array_equal(small.kappas, big.kappas[:5])


def test_zero_poles_is_a_validation_error(tmp_path, capsys):
    assert main(["run", "--preset", "fig1", "--n-poles", "0", "--out", str(tmp_path)]) == EXIT_VALIDATION
    assert "n_poles" in capsys.readouterr().err
    assert main(["run", "--config", str(small_config(tmp_path, n_poles=0))]) == EXIT_VALIDATION
    assert main(["run", "--preset", "nope"]) == EXIT_VALIDATION
    assert main(["run", "--preset", "fig1", "--config", "x.json"]) == EXIT_VALIDATION


def test_numeric_failure_exit_code(tmp_path, monkeypatch, capsys):
    def fail(spec, n):
        raise NoConvergence("synthetic")

    monkeypatch.setattr(cli, "find_poles", fail)
    assert main(["poles", "--preset", "fig1", "--cache", str(tmp_path)]) == EXIT_NUMERIC
    assert "NoConvergence" in capsys.readouterr().err


def test_run_writes_outputs_deterministically(tmp_path):
    path = small_config(tmp_path)
    assert main(["run", "--config", str(path)]) == EXIT_OK
    out = tmp_path / "out"
    names = sorted(p.name for p in out.iterdir())
    assert names == ["small.gp", "small_antisymmetric_peak.csv", "small_antisymmetric_tail.csv",
                     "small_symmetric_peak.csv", "small_symmetric_tail.csv", "summary.json"]
    before = {p.name: p.read_bytes() for p in out.iterdir()}
    assert main(["run", "--config", str(path)]) == EXIT_OK
    assert {p.name: p.read_bytes() for p in out.iterdir()} == before

    summary = json.loads((out / "summary.json").read_text())
    assert summary["poles_used"] == 40 and summary["units"] == "hbar=2m=1"
    assert summary["tau"] == pytest.approx(84.0585766762383, rel=1e-10)
    tail = summary["series"]["antisymmetric/tail"]
    assert tail["tail_exponent"] == pytest.approx(-10.0, abs=0.5)
    peaks = summary["series"]["symmetric/peak"]["predicted_peaks"]
    assert {p["pole"] for p in peaks} >= {1, 2, 6}
    gp = (out / "small.gp").read_text()
    assert "small_symmetric_peak.csv" in gp and "set logscale x" in gp


def test_sumrule_command(tmp_path, capsys):
    assert main(["sumrule", "--preset", "fig2", "--n-poles", "1000", "--cache", str(tmp_path),
                 "--out", str(tmp_path / "c")]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    values = [float(line.rsplit("=", 1)[1]) for line in lines]
    assert np.allclose(values, 1.0, atol=1e-3)
    assert (tmp_path / "c" / "coefficients_beta.csv").exists()


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        main([])
