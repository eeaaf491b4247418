"""TOML run-configuration loading: happy path, defaults, strict rejection."""

import textwrap

import pytest

from torusgr.config import (
    config_from_dict,
    default_snapshot_times,
    load_config,
)
from torusgr.errors import ConfigError

from test_state import PARAMS

FULL_TOML = textwrap.dedent(
    """
    [flrw]
    lambda = 3.0
    a0 = 1.5
    psi0 = 0.25
    phi0 = 2.0
    alpha_convention = "unhalved_kinetic"

    [grid]
    n_points = [32, 8]

    [recipe]
    kind = "conformal_perturbation"
    amplitude = 1e-3
    modes = [{k = [1, 0, 0], coef = 1.0, phase = 0.5}, {k = [2, 1, 0]}]
    random_phases = true
    seed = 11

    [evolution]
    dt_cfl_factor = 0.2
    t_end = 6.0
    symmetrize = true
    n_sobolev = 3
    output_stride = 2
    implicit_lapse = true
    dt_override = 0.01
    freeze_lapse = false

    [output]
    directory = "scratch/run1"
    snapshot_times = [4.0, 0.0, 6.0]

    [acceptance]
    decay_rates = false
    forcing_consistency = false
    """
)


def test_full_config_parses(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(FULL_TOML)
    cfg = load_config(path)
    assert cfg.params.lambda_ == 3.0
    assert cfg.params.a0 == 1.5
    assert cfg.params.psi0 == 0.25
    assert cfg.params.phi0 == 2.0
    assert cfg.params.alpha_convention == "unhalved_kinetic"
    assert cfg.grid_points == (32, 8, 1)  # short lists pad with inactive axes
    assert cfg.recipe.kind == "conformal_perturbation"
    assert cfg.recipe.amplitude == 1e-3
    assert cfg.recipe.modes[0].wavevector == (1, 0, 0)
    assert cfg.recipe.modes[0].phase == 0.5
    assert cfg.recipe.modes[1].wavevector == (2, 1, 0)
    assert cfg.recipe.modes[1].coef == 1.0
    assert cfg.recipe.random_phases is True
    assert cfg.recipe.seed == 11
    assert cfg.evolution.dt_cfl_factor == 0.2
    assert cfg.evolution.t_end == 6.0
    assert cfg.evolution.symmetrize is True
    assert cfg.evolution.n_sobolev == 3
    assert cfg.evolution.output_stride == 2
    assert cfg.evolution.implicit_lapse is True
    assert cfg.evolution.dt_override == 0.01
    assert cfg.output_dir == "scratch/run1"
    assert cfg.snapshot_times == (0.0, 4.0, 6.0)  # sorted on load
    assert cfg.acceptance.decay_rates is False
    assert cfg.acceptance.energy_bound is True
    assert cfg.acceptance.forcing_consistency is False


def test_minimal_config_defaults():
    cfg = config_from_dict({"flrw": {"lambda": 3.0}})
    assert cfg.params.a0 == 1.0 and cfg.params.phi0 == 0.0
    assert cfg.params.alpha_convention == "constraint_consistent"
    assert cfg.grid_points == (64, 1, 1)
    assert cfg.recipe.kind == "exact_flrw"
    assert cfg.evolution.t_end == 8.0
    assert cfg.output_dir == "out"
    assert cfg.snapshot_times is None
    assert cfg.acceptance.constraints is True


def test_lambda_is_required():
    with pytest.raises(ConfigError, match="lambda"):
        config_from_dict({"flrw": {}})


@pytest.mark.parametrize(
    "data,fragment",
    [
        ({"flrw": {"lambda": 3.0}, "grdi": {}}, "unknown table"),
        ({"flrw": {"lambda": 3.0, "lamda": 2.0}}, "unknown key"),
        ({"flrw": {"lambda": 3.0}, "evolution": {"dt": 0.1}}, "unknown key"),
        (
            {"flrw": {"lambda": 3.0}, "recipe": {"modes": [{"k": [1, 0, 0], "wave": 2}]}},
            "unknown key",
        ),
    ],
)
def test_unknown_keys_are_hard_errors(data, fragment):
    with pytest.raises(ConfigError, match=fragment):
        config_from_dict(data)


@pytest.mark.parametrize(
    "data",
    [
        {"flrw": {"lambda": "three"}},
        {"flrw": {"lambda": 3.0}, "grid": {"n_points": [0]}},
        {"flrw": {"lambda": 3.0}, "grid": {"n_points": [16, True, 1]}},
        {"flrw": {"lambda": 3.0}, "grid": {"n_points": [16, 1, 1, 1]}},
        {"flrw": {"lambda": 3.0}, "recipe": {"modes": [{"k": [1, 0]}]}},
        {"flrw": {"lambda": 3.0}, "recipe": {"modes": ["1,0,0"]}},
        {"flrw": {"lambda": 3.0}, "recipe": {"kind": "fancy"}},
        {"flrw": {"lambda": 3.0}, "evolution": {"t_end": -2.0}},
        {"flrw": {"lambda": 3.0}, "evolution": {"dt_override": 0.0}},
        {"flrw": {"lambda": 3.0}, "evolution": {"output_stride": True}},
        {"flrw": {"lambda": 3.0}, "output": {"snapshot_times": ["soon"]}},
        {"flrw": {"lambda": -3.0}},
        {"flrw": {"lambda": 3.0, "alpha_convention": "casual"}},
    ],
)
def test_bad_values_are_config_errors(data):
    with pytest.raises(ConfigError):
        config_from_dict(data)


def test_toml_syntax_error_reports_file(tmp_path):
    path = tmp_path / "broken.toml"
    path.write_text("[flrw]\nlambda = = 3\n")
    with pytest.raises(ConfigError, match="broken.toml"):
        load_config(path)


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.toml")


def test_default_snapshot_ladder():
    # H = 1: t = 0 plus 2.0, 2.5, ..., 8.0
    times = default_snapshot_times(PARAMS, t_end=8.0)
    assert times[0] == 0.0
    assert times[1] == pytest.approx(2.0)
    assert times[-1] == pytest.approx(8.0)
    assert len(times) == 14
    clipped = default_snapshot_times(PARAMS, t_end=3.0)
    assert clipped == (0.0, 2.0, 2.5, 3.0)


def _scrub(obj):
    if isinstance(obj, dict):
        return {k: _scrub(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, list):
        return [_scrub(v) for v in obj]
    return obj


def test_jsonable_reparses_to_same_config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(FULL_TOML)
    cfg = load_config(path)
    again = config_from_dict(_scrub(cfg.jsonable()))
    assert again == cfg
