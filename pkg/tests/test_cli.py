from pathlib import Path

import numpy as np
import pytest

from cfdens.cli import main
from cfdens.config import parse_config
from cfdens.dataio import (
    format_curve_table,
    load_dataset,
    read_curve_table,
    write_curve_table,
)
from cfdens.errors import ConfigError, DataError

from conftest import unit_grid

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data" / "synthetic_mixed.csv"

SMALL_CONFIG = f"""
measure.interval = 10, 9990
measure.atoms = 0:1, 10000:1
measure.cap = 9990
measure.cap_atom = 10000
grid.bins = 20
basis.count = 8
basis.degree = 3
effect.edu = categorical(levels=low|mid|high, reference=low)
effect.age = smooth(count=6, degree=2)
penalty = 0
uncertainty.alpha = 0.05
uncertainty.draws = 3
uncertainty.seed = 42
data.path = {DATA}
data.outcome_column = income
data.group_column = group
data.treated_label = E
data.control_label = W
data.weight_column = weight
marginal.covariates = edu
simulate.n = 200
simulate.replications = 2
simulate.estimators = kde
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path


# ------------------------------------------------------------------ config

def test_parse_config_values():
    cfg = parse_config(SMALL_CONFIG)
    assert cfg.measure.continuous_interval == (10.0, 9990.0)
    assert cfg.measure.atoms == ((0.0, 1.0), (10000.0, 1.0))
    assert cfg.cap == 9990.0 and cfg.cap_atom == 10000.0
    assert cfg.n_bins == 20
    # intercept is prepended automatically
    assert [e.kind for e in cfg.effects] == ["intercept", "categorical", "smooth"]
    assert cfg.effects[1].levels == ("low", "mid", "high")
    assert cfg.effects[2].knot_count == 6 and cfg.effects[2].degree == 2
    assert cfg.marginal_covariates == ["edu"]
    assert cfg.sim_n == [200] and cfg.sim_estimators == ["kde"]


def test_parse_config_defaults():
    cfg = parse_config("measure.interval = 0, 1")
    assert cfg.n_bins == 50 and cfg.basis_count == 12 and cfg.basis_degree == 3
    assert cfg.alpha == 0.05 and cfg.draws == 100
    assert cfg.sim_n == [500, 1000, 5000] and cfg.sim_replications == 200


def test_parse_config_rejects_bad_lines():
    with pytest.raises(ConfigError):
        parse_config("measure.interval = 0, 1\nnot a key value line")
    with pytest.raises(ConfigError):
        parse_config("measure.interval = 0, 1\neffect.x = mystery(a=1)")
    with pytest.raises(ConfigError):
        parse_config("measure.interval = 0, 1\nuncertainty.alpha = 1.5")


# ------------------------------------------------------------------ dataio

def _write_csv(tmp_path, text):
    path = tmp_path / "data.csv"
    path.write_text(text, encoding="utf-8")
    return path


BASE_CFG = (
    "measure.interval = 0, 100\n"
    "measure.cap = 100\nmeasure.cap_atom = 200\nmeasure.atoms = 200:1\n"
    "effect.g = categorical(levels=u|v, reference=u)\n"
    "data.outcome_column = y\ndata.group_column = grp\n"
    "data.treated_label = E\ndata.control_label = W\n"
)


def test_load_dataset_splits_groups(tmp_path):
    cfg = parse_config(BASE_CFG)
    path = _write_csv(tmp_path, "grp,y,g\nE,10,u\nE,20,v\nW,30,u\n")
    treated, control = load_dataset(path, cfg)
    assert len(treated) == 2 and len(control) == 1
    assert treated.group == "E"
    # missing weight column means unit weights
    assert np.array_equal(treated.weights, [1.0, 1.0])


def test_load_dataset_caps_to_atom(tmp_path):
    cfg = parse_config(BASE_CFG)
    path = _write_csv(tmp_path, "grp,y,g\nE,150,u\nW,30,u\n")
    treated, _ = load_dataset(path, cfg)
    assert treated.outcomes[0] == 200.0


def test_load_dataset_unknown_group(tmp_path):
    cfg = parse_config(BASE_CFG)
    path = _write_csv(tmp_path, "grp,y,g\nE,10,u\nX,20,u\nW,5,u\n")
    with pytest.raises(DataError, match="row 3"):
        load_dataset(path, cfg)


def test_load_dataset_missing_column(tmp_path):
    cfg = parse_config(BASE_CFG)
    path = _write_csv(tmp_path, "grp,g\nE,u\n")
    with pytest.raises(DataError, match="missing columns"):
        load_dataset(path, cfg)


def test_load_dataset_unparseable_outcome(tmp_path):
    cfg = parse_config(BASE_CFG)
    path = _write_csv(tmp_path, "grp,y,g\nE,abc,u\nW,5,u\n")
    with pytest.raises(DataError, match="row 2"):
        load_dataset(path, cfg)


def test_curve_table_round_trip(tmp_path):
    grid = unit_grid(7)
    rng = np.random.default_rng(0)
    values = rng.uniform(0.1, 2.0, 7)
    valid = np.array([True] * 6 + [False])
    shown = values.copy()
    shown[~valid] = np.nan
    path = tmp_path / "curve.csv"
    write_curve_table(path, grid, [(0, shown, valid)])
    points, draws = read_curve_table(path)
    got_values, got_valid = draws[0]
    assert np.array_equal(got_valid, valid)
    # 17 significant digits round-trip doubles exactly
    assert np.array_equal(got_values[valid], values[valid])
    assert np.all(np.isnan(got_values[~valid]))
    assert points == [float("%.17g" % c) for c in grid.centers]


def test_curve_table_header_and_cell_types(mixed_grid):
    values = np.ones(mixed_grid.n_cells)
    text = format_curve_table(mixed_grid, [(0, values, values > 0)])
    lines = text.splitlines()
    assert lines[0] == "grid_point,cell_type,value,valid_flag,draw_index"
    assert lines[1].split(",")[1] == "bin"
    assert lines[-1].split(",")[1] == "atom"


# --------------------------------------------------------------------- CLI

def test_cli_fit_outputs(config_file, tmp_path):
    out = tmp_path / "fit_out"
    assert main(["fit", "--config", str(config_file), "--out", str(out)]) == 0
    for name in ("density_treated.csv", "density_control.csv",
                 "model_treated.txt", "model_control.txt", "manifest.txt"):
        assert (out / name).exists(), name
    points, draws = read_curve_table(out / "density_treated.csv")
    values, valid = draws[0]
    assert len(values) == 22  # 20 bins + 2 atoms
    assert np.all(valid)
    manifest = (out / "manifest.txt").read_text()
    assert "command = fit" in manifest and "seed = 42" in manifest


def test_cli_decompose_outputs_and_determinism(config_file, tmp_path):
    out1, out2 = tmp_path / "d1", tmp_path / "d2"
    assert main(["decompose", "--config", str(config_file), "--out", str(out1)]) == 0
    assert main(["decompose", "--config", str(config_file), "--out", str(out2)]) == 0
    for name in ("f11", "f10", "f01", "f00", "de", "ce", "te"):
        assert (out1 / f"{name}.csv").exists()
        assert (out1 / f"{name}.csv").read_bytes() == (out2 / f"{name}.csv").read_bytes()
    assert (out1 / "manifest.txt").read_bytes() == (out2 / "manifest.txt").read_bytes()
    _, draws = read_curve_table(out1 / "de.csv")
    assert sorted(draws) == [0, 1, 2, 3]  # point estimate plus 3 draws


def test_cli_decompose_seed_changes_draws(config_file, tmp_path):
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert main(["decompose", "--config", str(config_file), "--out", str(out1)]) == 0
    assert main(["decompose", "--config", str(config_file), "--out", str(out2),
                 "--seed", "43"]) == 0
    _, d1 = read_curve_table(out1 / "de.csv")
    _, d2 = read_curve_table(out2 / "de.csv")
    # same point estimate, different draws
    assert np.array_equal(d1[0][0], d2[0][0], equal_nan=True)
    assert not np.array_equal(d1[1][0], d2[1][0], equal_nan=True)


def test_cli_marginal_outputs(config_file, tmp_path):
    out = tmp_path / "m"
    assert main(["marginal", "--config", str(config_file), "--out", str(out)]) == 0
    for name in ("ce_edu.csv", "de_edu.csv"):
        assert (out / name).exists()
    _, draws = read_curve_table(out / "ce_edu.csv")
    assert sorted(draws) == [0, 1, 2, 3]


def test_cli_simulate_outputs_and_determinism(config_file, tmp_path):
    out1, out2 = tmp_path / "sim1", tmp_path / "sim2"
    assert main(["simulate", "--config", str(config_file), "--out", str(out1)]) == 0
    assert main(["simulate", "--config", str(config_file), "--out", str(out2)]) == 0
    assert (out1 / "mc_report.csv").read_bytes() == (out2 / "mc_report.csv").read_bytes()
    text = (out1 / "mc_report.csv").read_text()
    assert "estimator,n,target,mean_tv" in text
    assert "kde,200,f11" in text


def test_cli_missing_config_fails_cleanly(tmp_path, capsys):
    assert main(["fit", "--config", str(tmp_path / "nope.cfg")]) == 1
    err = capsys.readouterr().err
    assert err.startswith("cfdens: error:")
    assert "\n" == err[err.index("\n"):]  # single diagnostic line
