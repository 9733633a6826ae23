import subprocess
import sys

import numpy as np
import pytest

from lasso_se import cli
from lasso_se import experiments as ex
from lasso_se.errors import ConfigError

SMALL = ["--set", "N=40", "--set", "replicates=1", "--set", "lambda_count=3", "--set", "folds=2"]


def test_empty_config_gives_defaults():
    cfg = cli.parse_config("")
    assert cfg == ex.ExperimentConfig()
    assert (cfg.N, cfg.delta, cfg.sigma, str(cfg.prior), cfg.design, cfg.folds, cfg.replicates) == \
        (2000, 0.8, 0.2, "sparse-gaussian:s=0.1", "iid", 4, 8)


@pytest.mark.parametrize("text,where", [
    ("delta=0", "line 1"),
    ("N=100\n\n# comment\nsigma=-1", "line 4"),
    ("N=ten", "line 1"),
    ("N=100\nN=200", "line 2"),
    ("colour=blue", "line 1"),
    ("just words", "line 1"),
    ("prior=sparse-gaussian:s=2", "line 1"),
])
def test_config_errors_name_the_line(text, where):
    with pytest.raises(ConfigError) as info:
        cli.parse_config(text)
    assert str(info.value).startswith(where)


def test_unknown_key_lists_valid_keys():
    with pytest.raises(ConfigError) as info:
        cli.parse_config("colour=blue")
    assert "replicates" in str(info.value) and "delta" in str(info.value)


def test_overrides():
    cfg = cli.parse_config("N=100\nseed=3  # trailing comment", ["N=200", "lambda_min=auto"])
    assert cfg.N == 200 and cfg.seed == 3 and cfg.lambda_min is None
    with pytest.raises(ConfigError) as info:
        cli.parse_config("", ["folds=1"])
    assert "--set #1" in str(info.value)


def test_config_round_trip():
    cfg = ex.ExperimentConfig(N=321, delta=0.55, prior="lp:p=1.5,xi=0.3", design="ar", phi=0.7,
                              lambda_values=(0.05, 0.5), minimax_s0=0.2, seed=9)
    assert cli.parse_config(cli.serialize_config(cfg)) == cfg
    assert cli.parse_config(cli.serialize_config(ex.ExperimentConfig())) == ex.ExperimentConfig()


def test_number_format():
    assert cli._fmt(3) == "3"
    assert cli._fmt(0.1 + 0.2) == "0.3"
    assert cli._fmt(1 / 3) == "0.333333333333"
    assert cli._fmt(float("nan")) == "nan"
    assert cli._fmt(np.int64(7)) == "7"


def test_csv_shape_and_round_trip(tmp_path):
    cfg = ex.ExperimentConfig(N=40, replicates=1, lambda_count=1, folds=2)
    res = ex.run_experiment(cfg, threads=1)
    path = tmp_path / "one.csv"
    cli.emit_csv(res.records, str(path))
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().split("\n")
    assert lines[-1] == "" and len(lines) == 3
    assert lines[0].split(",") == list(ex.CSV_COLUMNS)
    header, rows = cli.read_csv(str(path))
    want = np.array(res.records[0].row(), dtype=float)
    assert np.allclose(rows[0], want, rtol=1e-11, atol=0, equal_nan=True)
    with pytest.raises(ConfigError):
        cli.emit_csv([], str(path))


def test_run_command_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli.dispatch(["run", *SMALL, "--out", str(a)]) == 0
    assert cli.dispatch(["run", *SMALL, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["a.csv", "b.csv"]


def test_config_file(tmp_path):
    conf = tmp_path / "exp.conf"
    conf.write_text("N=40\nreplicates=1\nlambda_count=2\nfolds=0\n")
    out = tmp_path / "se.csv"
    assert cli.dispatch(["se-curve", "--config", str(conf), "--out", str(out)]) == 0
    header, rows = cli.read_csv(str(out))
    assert header[0] == "lambda" and len(rows) == 2


def test_exit_codes(tmp_path, capsys):
    assert cli.dispatch(["run", "--set", "delta=0"]) == cli.EXIT_CONFIG
    assert "delta" in capsys.readouterr().err
    assert cli.dispatch(["no-such-command"]) == cli.EXIT_CONFIG
    assert cli.dispatch(["run", "--config", str(tmp_path / "missing.conf")]) == cli.EXIT_IO
    blocked = tmp_path / "nodir" / "out.csv"
    assert cli.dispatch(["se-curve", *SMALL, "--out", str(blocked)]) == cli.EXIT_IO
    assert cli.dispatch(["delta-sweep", *SMALL, "--deltas", "a,b"]) == cli.EXIT_CONFIG
    assert cli.dispatch(["ladder-demo", "--N", "10", "--k", "20"]) == cli.EXIT_CONFIG


def test_numeric_exit_code(monkeypatch):
    from lasso_se.errors import NumericError

    def boom(*a, **k):
        raise NumericError("forced")

    monkeypatch.setattr(ex, "run_experiment", boom)
    assert cli.dispatch(["run", *SMALL]) == cli.EXIT_NUMERIC


def test_delta_sweep_rows(tmp_path):
    out = tmp_path / "sweep.csv"
    assert cli.dispatch(["delta-sweep", *SMALL, "--deltas", "0.5,0.9", "--out", str(out)]) == 0
    header, rows = cli.read_csv(str(out))
    assert header == ["delta", *ex.CSV_COLUMNS]
    assert len(rows) == 2 * 3
    assert [r[0] for r in rows] == [0.5] * 3 + [0.9] * 3


def test_sparsity_sweep_and_mmse_curve(tmp_path):
    out = tmp_path / "s.csv"
    assert cli.dispatch(["sparsity-sweep", *SMALL, "--s-values", "0.1", "--out", str(out)]) == 0
    assert cli.read_csv(str(out))[0][0] == "s"
    out = tmp_path / "m.csv"
    assert cli.dispatch(["mmse-curve", "--set", "lambda_count=8", "--set", "se_atoms=201",
                         "--s-values", "0,0.1", "--out", str(out)]) == 0
    header, rows = cli.read_csv(str(out))
    assert header[3] == "mmse_limit" and rows[0][3] == 0.0
    assert rows[1][3] <= rows[1][4]


def test_ladder_demo_command(tmp_path, capsys):
    out = tmp_path / "ladder.csv"
    assert cli.dispatch(["ladder-demo", "--N", "100", "--k", "5", "--replicates", "4", "--out", str(out)]) == 0
    header, rows = cli.read_csv(str(out))
    assert header == ["replicate", "w2", "bound", "exceeds"] and len(rows) == 4
    assert "fraction" in capsys.readouterr().err


def test_selftest_command(capsys):
    assert cli.dispatch(["selftest"]) == 0
    assert "7 passed, 0 failed" in capsys.readouterr().out


def test_console_entry_point():
    done = subprocess.run([sys.executable, "-m", "lasso_se", "se-curve", "--set", "lambda_count=2",
                           "--set", "se_atoms=101"], capture_output=True, text=True, timeout=300)
    assert done.returncode == 0
    assert done.stdout.splitlines()[0].startswith("lambda,beta_star")
