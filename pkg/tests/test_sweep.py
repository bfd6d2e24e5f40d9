import csv
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from hexice import sweep as sw
from hexice.hamiltonian import ModelParams
from hexice.sweep import (ConfigError, PairMeasures, SweepConfig, SweepError, SweepRecord, config_from_mapping,
                          csv_header, emit_csv, emit_plot_script, load_config, parse_pairs, record_at, run_sweep,
                          temperature_grid)


@pytest.fixture(scope="module")
def two_records():
    return run_sweep(SweepConfig(T_grid=(5.0, 80.0)))


def test_default_config():
    cfg = SweepConfig().validate()
    assert cfg.T_grid[0] == 2.0 and cfg.T_grid[-1] == 150.0 and len(cfg.T_grid) == 149
    assert cfg.params.J_x == -1.0 and cfg.params.J_z_intra == 10.0
    assert cfg.pairs == ((1, 2), (2, 3))


@pytest.mark.parametrize("changes", [
    dict(T_grid=()),
    dict(T_grid=(0.0, 1.0)),
    dict(T_grid=(5.0, 5.0)),
    dict(T_grid=(5.0, float("nan"))),
    dict(pairs=()),
    dict(pairs=((1, 1),)),
    dict(pairs=((1, 13),)),
    dict(pairs=((1, 2), (1, 2))),
    dict(validation="deep"),
    dict(workers=0),
])
def test_invalid_config(changes):
    with pytest.raises(ConfigError):
        sw.with_overrides(SweepConfig(), **changes)


def test_temperature_grid():
    assert temperature_grid(2, 150, 1) == tuple(float(t) for t in range(2, 151))
    assert temperature_grid(1, 2, 0.1)[-1] == 2.0
    assert len(temperature_grid(1, 2, 0.1)) == 11
    with pytest.raises(ConfigError):
        temperature_grid(5, 1, 1)


def test_parse_pairs():
    assert parse_pairs("1:2, 2:3") == ((1, 2), (2, 3))
    assert parse_pairs([[3, 4]]) == ((3, 4),)
    with pytest.raises(ConfigError):
        parse_pairs("1-2")


def test_config_file(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text('J_x = -1.5\nJ_z_intra = 12.0\ntmin = 10\ntmax = 20\ntstep = 5\npairs = "1:2"\n'
                    'out = "res"\nworkers = 1\n', encoding="utf-8")
    cfg = load_config(path)
    assert cfg.params.J == 3.0 and cfg.params.V_intra == 48.0
    assert cfg.T_grid == (10.0, 15.0, 20.0)
    assert cfg.pairs == ((1, 2),) and cfg.output_path == Path("res")
    over = config_from_mapping({"tmax": 30, "W": 5.0}, cfg)
    assert over.T_grid == (10.0, 15.0, 20.0, 25.0, 30.0) and over.params.W == 5.0 and over.params.J == 3.0


@pytest.mark.parametrize("text, match", [
    ("J = 2\nJ_x = -1\n", "either J or J_x"),
    ("bogus = 1\n", "unknown"),
    ("[model]\nJ = 2\n", "flat"),
    ("J = \n", "not valid"),
    ("J = 'abc'\n", "bad model parameter"),
])
def test_bad_config_file(tmp_path, text, match):
    path = tmp_path / "bad.toml"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError, match=match):
        load_config(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")


def test_single_temperature():
    out = run_sweep(SweepConfig(T_grid=(5.0,)))
    assert len(out) == 1
    assert out[0].S_bits == pytest.approx(1.0, abs=1e-3)
    assert out[0].pairs[(2, 3)].geo_discord <= 1e-8


def test_records_sorted_and_parallel_identical():
    serial = run_sweep(SweepConfig(T_grid=(3.0, 40.0, 90.0)))
    parallel = run_sweep(SweepConfig(T_grid=(3.0, 40.0, 90.0), workers=2))
    assert [r.T for r in serial] == [3.0, 40.0, 90.0]
    assert sw.csv_text(serial) == sw.csv_text(parallel)


def test_lamb_shift_leaves_records_unchanged():
    p = ModelParams()
    assert record_at(p, 30.0, ((1, 2),), lamb_shift=True) == record_at(p, 30.0, ((1, 2),))


def test_failure_reports_temperature(monkeypatch):
    real = sw.steady_state_ice

    def flaky(params, T):
        if T == 40.0:
            raise ArithmeticError("boom")
        return real(params, T)

    monkeypatch.setattr(sw, "steady_state_ice", flaky)
    with pytest.raises(SweepError, match="T = 40 K") as info:
        run_sweep(SweepConfig(T_grid=(3.0, 40.0)))
    assert info.value.T == 40.0


def test_record_invariants():
    pm = PairMeasures(0, 0, 0, 0, 0, 0)
    with pytest.raises(ArithmeticError):
        SweepRecord(5.0, 1.2, 1.0, 0.5, 0.1, {(1, 2): pm})
    with pytest.raises(ArithmeticError):
        SweepRecord(5.0, 0.5, 6.5, 0.5, 0.1, {(1, 2): pm})
    with pytest.raises(ArithmeticError):
        SweepRecord(5.0, 0.5, 1.0, float("inf"), 0.1, {(1, 2): pm})


def test_csv_schema(tmp_path, two_records):
    path = emit_csv(two_records, tmp_path / "out.csv")
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode("utf-8").splitlines()
    assert len(lines) == 3
    header = lines[0].split(",")
    assert len(header) == 17
    assert header[:5] == ["T_K", "P_BF", "S_bits", "C_l1", "C_rel_bits"]
    assert header[5] == "concurrence_s1_2" and header[-1] == "classical_J_bits_s2_3"
    rows = list(csv.reader(lines[1:]))
    assert [float(r[0]) for r in rows] == [5.0, 80.0]
    assert rows[0][1] == f"{two_records[0].P_BF:.12g}"
    assert all("-0" != v for r in rows for v in r)


@pytest.mark.parametrize("n_pairs", [1, 3, 5])
def test_column_count_formula(n_pairs):
    pairs = [(1, k) for k in range(2, 2 + n_pairs)]
    assert len(csv_header(pairs)) == 5 + 6 * n_pairs


def test_csv_deterministic(tmp_path):
    cfg = SweepConfig(T_grid=(5.0, 60.0, 120.0))
    a = emit_csv(run_sweep(cfg), tmp_path / "a.csv").read_bytes()
    b = emit_csv(run_sweep(cfg), tmp_path / "b.csv").read_bytes()
    assert a == b


def test_empty_records_write_nothing(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "x.csv")
    assert not (tmp_path / "x.csv").exists()


def test_unwritable_path(tmp_path, two_records):
    with pytest.raises(OSError):
        emit_csv(two_records, tmp_path / "missing" / "x.csv")


def test_plot_script(tmp_path, two_records):
    emit_csv(two_records, tmp_path / "sweep.csv")
    script = emit_plot_script(two_records, tmp_path / "plot.py")
    text = script.read_text(encoding="utf-8")
    compile(text, str(script), "exec")
    for marker in ("58.9", "73.4", "105.0"):
        assert marker in text
    assert "sweep.csv" in text
    assert emit_plot_script(two_records, tmp_path / "plot2.py").read_text(encoding="utf-8") == text


def test_plot_script_runs(tmp_path, two_records):
    pytest.importorskip("matplotlib")
    emit_csv(two_records, tmp_path / "sweep.csv")
    script = emit_plot_script(two_records, tmp_path / "plot.py")
    for _ in range(2):  # idempotent
        res = subprocess.run([sys.executable, str(script)], capture_output=True, text=True, cwd=tmp_path)
        assert res.returncode == 0, res.stderr
        assert (tmp_path / "sweep.png").stat().st_size > 0


def test_plot_script_without_csv(tmp_path, two_records):
    script = emit_plot_script(two_records, tmp_path / "plot.py")
    res = subprocess.run([sys.executable, str(script)], capture_output=True, text=True, cwd=tmp_path)
    assert res.returncode != 0
    assert "missing sweep CSV" in res.stderr
