import csv
import math

import numpy as np
import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from rhdsim import checkpoint as ck
from rhdsim.config import ConfigError, dumps, load_config, loads, validate
from rhdsim.grid import FluidState
from rhdsim.simulation import COLUMNS, format_value, run_simulation
from rhdsim.studies import SCENARIO_DIR

MINIMAL = "grid:\n  cells: [8]\n"


def test_minimal_config_fills_defaults():
    cfg = loads(MINIMAL)
    assert cfg.grid.cells == (8,)
    assert cfg["physics"]["mu"] == 1.0
    assert cfg["picard"]["max_iters"] == 20
    assert cfg["boundary"]["velocity"] == "dirichlet"


def test_strict_blowup_violation_is_named():
    with pytest.raises(ConfigError) as exc:
        loads(MINIMAL + "physics:\n  mu: 1.0\n  lambda: 4.0\n  strict_blowup: true\n")
    assert any("lambda < 3 mu" in e for e in exc.value.errors)


def test_unknown_key_is_rejected():
    with pytest.raises(ConfigError) as exc:
        loads(MINIMAL + "physics:\n  viscocity: 2.0\n")
    assert any("viscocity" in e for e in exc.value.errors)


def test_yaml_parse_error_carries_position():
    with pytest.raises(ConfigError) as exc:
        loads("grid:\n  cells: [8\n")
    assert "line" in exc.value.errors[0] and "column" in exc.value.errors[0]


def test_wrong_type_is_rejected():
    with pytest.raises(ConfigError):
        loads(MINIMAL + "picard:\n  max_iters: many\n")


def test_dump_and_reload_round_trip():
    cfg = load_config(SCENARIO_DIR / "reference_1d.yaml")
    again = loads(dumps(cfg))
    assert again.to_dict() == cfg.to_dict()


@pytest.mark.parametrize("name", ["reference_1d", "vacuum_bump_1d", "compression_1d", "compatible_1d",
                                  "equilibrium_1d"])
def test_bundled_scenarios_validate(name):
    load_config(SCENARIO_DIR / f"{name}.yaml")


# --- checkpoint ------------------------------------------------------------


def _state(shape=(6, 5), groups=2, ords=8, seed=0, t=0.125):
    rng = np.random.default_rng(seed)
    st_ = FluidState(rng.uniform(0, 2, shape), rng.normal(size=(3,) + shape), rng.uniform(0, 2, shape), t)
    return st_, rng.uniform(0, 1, (groups, ords) + shape)


def test_checkpoint_round_trip_is_bit_identical(tmp_path):
    s, I = _state()
    path = tmp_path / "a.ckpt"
    ck.write_checkpoint(s, I, path, (1.0, 2.0))
    s2, I2 = ck.read_checkpoint(path)
    for a, b in ((s.rho, s2.rho), (s.u, s2.u), (s.theta, s2.theta), (I, I2)):
        assert a.tobytes() == b.tobytes()
    assert s2.time == s.time
    h = ck.read_header(path)
    assert h.cells == (6, 5) and h.lengths == (1.0, 2.0) and h.n_groups == 2


def test_truncated_checkpoint_is_rejected(tmp_path):
    s, I = _state()
    path = tmp_path / "a.ckpt"
    ck.write_checkpoint(s, I, path)
    data = path.read_bytes()
    path.write_bytes(data[:-8])
    with pytest.raises(ck.CheckpointError):
        ck.read_checkpoint(path)
    # header only
    path.write_bytes(data[: data.index(b"END\n") + 4])
    with pytest.raises(ck.CheckpointError):
        ck.read_checkpoint(path)
    path.write_bytes(b"not a checkpoint\n")
    with pytest.raises(ck.CheckpointError):
        ck.read_header(path)


def test_checkpoint_dimension_guard(tmp_path):
    s, I = _state()
    path = tmp_path / "a.ckpt"
    ck.write_checkpoint(s, I, path)
    with pytest.raises(ck.CheckpointError):
        ck.read_checkpoint(path, expect_dim=3)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.lists(st.integers(1, 5), min_size=1, max_size=3),
       st.floats(0, 1e6, allow_nan=False))
def test_checkpoint_round_trip_property(tmp_path_factory, seed, shape, t):
    s, I = _state(tuple(shape), 1, 2, seed, t)
    path = tmp_path_factory.mktemp("ck") / "p.ckpt"
    ck.write_checkpoint(s, I, path)
    s2, I2 = ck.read_checkpoint(path)
    assert I2.tobytes() == I.tobytes() and s2.u.tobytes() == s.u.tobytes() and s2.time == t


# --- CSV and runs ----------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.floats(allow_nan=False))
def test_format_value_round_trips(x):
    assert float(format_value(x)) == x


def test_format_value_kinds():
    assert format_value(True) == "1" and format_value(np.bool_(False)) == "0"
    assert format_value(np.int64(7)) == "7"
    assert format_value(0.1) == "0.1"
    assert format_value(math.nan) == "nan"


def test_zero_length_run_writes_one_row(tmp_path):
    raw = yaml.safe_load((SCENARIO_DIR / "reference_1d.yaml").read_text())
    raw["time"]["t_end"] = 0.0
    out = tmp_path / "d.csv"
    res = run_simulation(validate(raw), csv_path=out)
    assert res.status == "completed" and res.steps == 0
    rows = list(csv.reader(out.open()))
    assert tuple(rows[0]) == COLUMNS and len(rows) == 2


def test_equilibrium_run_stays_constant():
    res = run_simulation(load_config(SCENARIO_DIR / "equilibrium_1d.yaml"))
    assert res.status == "completed" and res.steps == 100
    first = res.records[0]
    for rec in res.records:
        for key in ("mass", "rho_min", "rho_max", "theta_min", "theta_max", "total_energy"):
            assert rec[key] == pytest.approx(first[key], abs=1e-8)
        assert rec["u_max"] <= 1e-8 and rec["I_max"] == 0.0


def test_nontangential_initial_velocity_fails_cleanly():
    raw = {"grid": {"cells": [16]}, "initial": {"velocity": {"type": "linear", "slope": 1.0}},
           "time": {"t_end": 0.01}}
    res = run_simulation(validate(raw))
    assert res.status == "failed" and "Tangency" in res.error
