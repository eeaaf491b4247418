"""Time stepping: step bounds, background fixed point, guard rails, embedding."""

import numpy as np
import pytest

from torusgr.background import flrw_background
from torusgr.errors import ConfigError, StabilityViolationError
from torusgr.evolution import (
    EvolutionConfig,
    evolve,
    lapse_rhs_split,
    rhs_hyperbolic,
    step,
    timestep,
)
from torusgr.grid import TWO_PI, Grid
from torusgr.initial_data import DataRecipe, ModeSpec, build_initial_state
from torusgr.state import sym_trace, zero_state

from test_state import PARAMS, random_state


def perturbed_state(grid, k=2, amplitude=1e-3):
    recipe = DataRecipe(
        kind="conformal_perturbation",
        amplitude=amplitude,
        modes=(ModeSpec((k, 0, 0)),),
    )
    return build_initial_state(PARAMS, recipe, grid)


# ---------------------------------------------------------------------------
# configuration and step-size selection
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(dt_cfl_factor=0.0),
        dict(t_end=-1.0),
        dict(n_sobolev=0),
        dict(output_stride=0),
        dict(dt_override=-0.1),
    ],
)
def test_config_rejects_bad_values(kwargs):
    with pytest.raises(ConfigError):
        EvolutionConfig(**kwargs)


def test_timestep_bounds_hand_computed():
    grid = Grid((16, 1, 1))
    cfg = EvolutionConfig(dt_cfl_factor=0.25)
    bg0 = flrw_background(PARAMS, 0.0)
    dx = TWO_PI / 16
    # at t=0: a=1, frame factor 1 -> the parabolic bound dx^2/6 is tightest
    assert timestep(grid, bg0, PARAMS, cfg) == pytest.approx(
        0.25 * dx * dx / 6.0, rel=1e-12
    )
    # without an explicit parabolic lapse only the advective bound remains
    cfg_imex = EvolutionConfig(dt_cfl_factor=0.25, implicit_lapse=True)
    assert timestep(grid, bg0, PARAMS, cfg_imex) == pytest.approx(
        0.25 * 0.5 * dx * bg0.a, rel=1e-12
    )
    cfg_frozen = EvolutionConfig(dt_cfl_factor=0.25, freeze_lapse=True)
    assert timestep(grid, bg0, PARAMS, cfg_frozen) == pytest.approx(
        0.25 * 0.5 * dx * bg0.a, rel=1e-12
    )
    # late times: both spatial bounds relax like a(t); the reaction cap
    # 1/(3H) takes over
    bg3 = flrw_background(PARAMS, 3.0)
    assert timestep(grid, bg3, PARAMS, cfg) == pytest.approx(
        0.25 / (3.0 * PARAMS.hubble), rel=1e-12
    )
    # a grid with no active axes has no spatial bounds at all
    point = Grid((1, 1, 1))
    assert timestep(point, bg0, PARAMS, cfg) == pytest.approx(
        0.25 / (3.0 * PARAMS.hubble), rel=1e-12
    )


# ---------------------------------------------------------------------------
# the background is a fixed point of the discrete flow
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("t", [0.0, 0.8, 2.0])
def test_rhs_vanishes_on_background(t):
    grid = Grid((16, 1, 1))
    s = zero_state(grid, t=t)
    bg = flrw_background(PARAMS, t)
    d = rhs_hyperbolic(s, bg, PARAMS.lambda_)
    for name, comp in d.components():
        assert np.max(np.abs(comp)) < 1e-12, name
    explicit, mu = lapse_rhs_split(s, bg, PARAMS.lambda_)
    assert np.max(np.abs(explicit)) < 1e-11
    assert mu == pytest.approx(bg.frame_coef**2, rel=1e-15)


def test_step_leaves_background_invariant():
    grid = Grid((16, 1, 1))
    s = zero_state(grid, t=0.0)
    out = step(s, PARAMS, 0.01, EvolutionConfig())
    assert out.t == pytest.approx(0.01)
    for name, comp in out.components():
        assert np.max(np.abs(comp)) < 1e-12, name


# ---------------------------------------------------------------------------
# structural guarantees of the stepper
# ---------------------------------------------------------------------------


def test_step_keeps_curvature_tracefree_and_input_intact():
    grid = Grid((16, 1, 1))
    s = perturbed_state(grid)
    before = [np.array(c, copy=True) for _, c in s.components()]
    cfg = EvolutionConfig()
    cur = s
    for _ in range(3):
        cur = step(cur, PARAMS, 0.005, cfg)
        assert np.max(np.abs(sym_trace(cur.k_hat))) < 1e-13
    for (name, c), saved in zip(s.components(), before):
        assert np.array_equal(c, saved), f"step mutated its input: {name}"


def test_freeze_lapse_keeps_lapse_exactly():
    grid = Grid((16, 1, 1))
    s = perturbed_state(grid)
    cfg = EvolutionConfig(freeze_lapse=True)
    cur = s
    for _ in range(4):
        cur = step(cur, PARAMS, 0.005, cfg)
    assert np.array_equal(cur.n_hat, s.n_hat)
    # and something else did evolve
    assert not np.array_equal(cur.psi_hat, s.psi_hat)


def test_imex_tracks_explicit_lapse():
    grid = Grid((16, 1, 1))
    s = perturbed_state(grid)
    dt = 0.005
    expl = evolve(s, PARAMS, EvolutionConfig(t_end=0.1, dt_override=dt),
                  snapshot_times=(0.1,)).snapshots[-1]
    imex = evolve(s, PARAMS, EvolutionConfig(t_end=0.1, dt_override=dt,
                                             implicit_lapse=True),
                  snapshot_times=(0.1,)).snapshots[-1]
    worst = 0.0
    for (name, a), (_, b) in zip(expl.components(), imex.components()):
        worst = max(worst, float(np.max(np.abs(a - b))))
    # the half-step lapse solves re-couple at first order in dt: close to
    # the explicit run but not identical
    assert 0.0 < worst < 1e-5


def test_unstable_timestep_raises():
    grid = Grid((16, 1, 1))
    s = perturbed_state(grid, k=4)
    cfg = EvolutionConfig(t_end=10.0, dt_override=1.0)
    with pytest.raises(StabilityViolationError):
        evolve(s, PARAMS, cfg)


# ---------------------------------------------------------------------------
# trajectory bookkeeping
# ---------------------------------------------------------------------------


def test_snapshots_land_exactly_and_times_recorded():
    grid = Grid((16, 1, 1))
    s = perturbed_state(grid)
    cfg = EvolutionConfig(t_end=0.1, dt_override=0.003, output_stride=2)
    traj = evolve(s, PARAMS, cfg, snapshot_times=(0.0, 0.0371, 0.1))
    assert len(traj.snapshots) == 3
    assert traj.snapshots[0].t == 0.0
    assert traj.snapshots[1].t == pytest.approx(0.0371, abs=1e-12)
    assert traj.snapshots[2].t == pytest.approx(0.1, abs=1e-12)
    assert traj.times[0] == 0.0
    assert traj.times[-1] == pytest.approx(0.1, abs=1e-12)
    assert len(traj.times) == len(traj.records)
    assert all(b > a for a, b in zip(traj.times, traj.times[1:]))


def test_three_dimensional_embedding_is_exact():
    # a y/z-independent profile evolved on a (16,4,4) grid must reproduce
    # the (16,1,1) run bitwise: every operation acts axis-by-axis and the
    # extra axes only carry the zero mode
    recipe = DataRecipe(
        kind="conformal_perturbation", amplitude=1e-3, modes=(ModeSpec((1, 0, 0)),)
    )
    cfg = EvolutionConfig(t_end=0.2, dt_override=0.005)
    s1 = build_initial_state(PARAMS, recipe, Grid((16, 1, 1)))
    s3 = build_initial_state(PARAMS, recipe, Grid((16, 4, 4)))
    f1 = evolve(s1, PARAMS, cfg, snapshot_times=(0.2,)).snapshots[-1]
    f3 = evolve(s3, PARAMS, cfg, snapshot_times=(0.2,)).snapshots[-1]
    for (name, c1), (_, c3) in zip(f1.components(), f3.components()):
        assert np.array_equal(c3[:, :1, :1], c1), name
        assert np.array_equal(c3, np.broadcast_to(c3[:, :1, :1], c3.shape)), name


def test_random_state_rhs_is_deterministic():
    grid = Grid((12, 1, 1))
    s = random_state(grid, seed=9, scale=1e-3)
    bg = flrw_background(PARAMS, s.t)
    d1 = rhs_hyperbolic(s, bg, PARAMS.lambda_)
    d2 = rhs_hyperbolic(s, bg, PARAMS.lambda_)
    for (name, a), (_, b) in zip(d1.components(), d2.components()):
        assert np.array_equal(a, b), name
