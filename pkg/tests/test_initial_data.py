"""Initial-data recipes: perturbations, frames, elliptic solve, assembly."""

import numpy as np
import pytest

from torusgr.background import FlrwParams, flrw_background
from torusgr.constraints import evaluate_constraints
from torusgr.errors import RecipeError, SingularFrameError
from torusgr.grid import Grid
from torusgr.initial_data import (
    DataRecipe,
    ModeSpec,
    build_initial_state,
    gram_schmidt_frame,
    initial_gamma,
    lichnerowicz_solve,
    perturbation_field,
)
from torusgr.state import gamma_full, unhat

from oracles import conformal_connection, dense_derivative
from test_state import PARAMS


# ---------------------------------------------------------------------------
# recipe validation and the perturbation field
# ---------------------------------------------------------------------------


def test_unknown_recipe_kind_rejected():
    with pytest.raises(RecipeError):
        DataRecipe(kind="maximally_sliced")


def test_perturbation_field_hand_formula():
    grid = Grid((16, 8, 1))
    recipe = DataRecipe(
        kind="conformal_perturbation",
        amplitude=2e-3,
        modes=(
            ModeSpec((1, 0, 0), coef=1.0, phase=0.2),
            ModeSpec((2, 1, 0), coef=-0.5, phase=1.1),
        ),
    )
    got = perturbation_field(recipe, grid)
    x = grid.coords(0)
    y = grid.coords(1)
    want = 2e-3 * (np.sin(x + 0.2) - 0.5 * np.sin(2 * x + y + 1.1))
    assert np.max(np.abs(got - want)) < 1e-15


@pytest.mark.parametrize(
    "modes",
    [
        (ModeSpec((0, 0, 0)),),  # zero wavevector
        (ModeSpec((1, 0)),),  # not three components
        (ModeSpec((0, 0, 1)),),  # excites a single-point axis
        (ModeSpec((7, 0, 0)),),  # beyond the 2/3 cutoff of 16 points
    ],
)
def test_perturbation_field_rejects_bad_modes(modes):
    grid = Grid((16, 4, 1))
    recipe = DataRecipe(kind="conformal_perturbation", amplitude=1e-3, modes=modes)
    with pytest.raises(RecipeError):
        perturbation_field(recipe, grid)


def test_random_phases_deterministic():
    grid = Grid((16, 1, 1))
    base = dict(
        kind="conformal_perturbation",
        amplitude=1e-3,
        modes=(ModeSpec((1, 0, 0)), ModeSpec((3, 0, 0))),
        random_phases=True,
    )
    f1 = perturbation_field(DataRecipe(seed=7, **base), grid)
    f2 = perturbation_field(DataRecipe(seed=7, **base), grid)
    f3 = perturbation_field(DataRecipe(seed=8, **base), grid)
    assert np.array_equal(f1, f2)
    assert not np.array_equal(f1, f3)
    # phases are drawn from the seeded generator in mode order
    phases = np.random.default_rng(7).uniform(0.0, 2.0 * np.pi, size=2)
    x = grid.coords(0)
    want = 1e-3 * (np.sin(x + phases[0]) + np.sin(3 * x + phases[1]))
    assert np.max(np.abs(f1 - want)) < 1e-15


# ---------------------------------------------------------------------------
# frame construction
# ---------------------------------------------------------------------------


def test_gram_schmidt_orthonormal_and_triangular():
    grid = Grid((6, 4, 1))
    rng = np.random.default_rng(21)
    a = rng.normal(size=grid.shape + (3, 3))
    spd = np.einsum("...ab,...cb->...ac", a, a) + 0.5 * np.eye(3)
    metric = np.moveaxis(spd, (-2, -1), (0, 1))
    e = gram_schmidt_frame(grid, metric)
    # metric-orthonormality: e_I . e_J = delta_IJ pointwise
    for i in range(3):
        for j in range(3):
            inner = np.zeros(grid.shape)
            for a_ in range(3):
                for b_ in range(3):
                    inner += metric[a_, b_] * e[i, a_] * e[j, b_]
            assert np.max(np.abs(inner - (1.0 if i == j else 0.0))) < 1e-12
    # ordered orthonormalization is lower-triangular in (leg, coordinate)
    for i in range(3):
        for a_ in range(i + 1, 3):
            assert np.all(e[i, a_] == 0.0)
    assert np.all(e[0, 0] > 0.0)


def test_gram_schmidt_rejects_degenerate_metric():
    grid = Grid((4, 1, 1))
    metric = np.zeros((3, 3) + grid.shape)
    metric[0, 0] = 1.0
    metric[1, 1] = 1.0  # third direction has zero norm
    with pytest.raises(SingularFrameError):
        gram_schmidt_frame(grid, metric)


def test_initial_gamma_matches_conformal_oracle():
    grid = Grid((16, 12, 1))
    a0 = 1.3
    x = grid.coords(0)
    y = grid.coords(1)
    conf = 1.0 + 0.05 * np.sin(x) + 0.03 * np.cos(2 * y)
    metric = np.zeros((3, 3) + grid.shape)
    for a in range(3):
        metric[a, a] = a0 * a0 * conf**4
    e = gram_schmidt_frame(grid, metric)
    got = gamma_full(initial_gamma(grid, e))
    want = conformal_connection(grid, conf, a0)
    assert np.max(np.abs(got - want)) < 1e-11


# ---------------------------------------------------------------------------
# the Lichnerowicz solve
# ---------------------------------------------------------------------------


def test_lichnerowicz_trivial_for_unperturbed_data():
    grid = Grid((16, 1, 1))
    sol = lichnerowicz_solve(PARAMS, grid, grid.zeros())
    assert sol.iterations == 0
    assert np.all(sol.phi == 1.0)
    assert sol.k_diag == pytest.approx(flrw_background(PARAMS, 0.0).trk / 3.0)


def test_lichnerowicz_perturbed_residual_verified_independently():
    grid = Grid((32, 1, 1))
    x = grid.coords(0)
    dphi = 1e-2 * np.sin(2 * x)
    sol = lichnerowicz_solve(PARAMS, grid, dphi)
    assert sol.iterations >= 1
    assert sol.residual_sup <= 1e-11
    assert abs(float(np.mean(sol.phi)) - 1.0) < 1e-11
    # recompute the PDE residual with the dense-DFT derivative oracle
    lap = sum(dense_derivative(dense_derivative(sol.phi, a), a) for a in range(3))
    s_coef = (
        2.0 * PARAMS.lambda_ + (PARAMS.phi0 + dphi) ** 2 - 6.0 * sol.k_diag**2
    )
    res = -8.0 * lap - PARAMS.a0**2 * s_coef * sol.phi**5
    assert np.max(np.abs(res)) < 5e-11


# ---------------------------------------------------------------------------
# state assembly
# ---------------------------------------------------------------------------


def test_exact_flrw_state_is_zero():
    grid = Grid((8, 1, 1))
    s = build_initial_state(PARAMS, DataRecipe(kind="exact_flrw"), grid)
    for name, comp in s.components():
        assert np.all(comp == 0.0), name
    assert s.t == 0.0


def test_conformal_state_satisfies_constraints():
    grid = Grid((32, 1, 1))
    recipe = DataRecipe(
        kind="conformal_perturbation",
        amplitude=1e-3,
        modes=(ModeSpec((2, 0, 0)),),
    )
    s = build_initial_state(PARAMS, recipe, grid)
    bg = flrw_background(PARAMS, 0.0)
    full = unhat(s, bg)
    res = evaluate_constraints(full, bg, PARAMS.lambda_)
    assert res.ham_sup < 1e-10
    assert res.mom_sup < 1e-12
    # scalar momentum carries exactly the prescribed perturbation
    dphi = perturbation_field(recipe, grid)
    assert np.max(np.abs(s.e0psi_hat - dphi)) < 1e-15
    # assembled data is a fixed point of the anti-aliasing filter (up to the
    # round-off of one more FFT round trip)
    for f in (s.n_hat, s.e_hat[0, 0], s.gamma_hat[0, 0]):
        scale = max(float(np.max(np.abs(f))), 1e-30)
        assert np.max(np.abs(grid.dealias(f) - f)) < 1e-14 * scale


def test_conformal_state_deterministic():
    grid = Grid((16, 1, 1))
    recipe = DataRecipe(
        kind="conformal_perturbation", amplitude=1e-3, modes=(ModeSpec((1, 0, 0)),)
    )
    s1 = build_initial_state(PARAMS, recipe, grid)
    s2 = build_initial_state(PARAMS, recipe, grid)
    for (name, c1), (_, c2) in zip(s1.components(), s2.components()):
        assert np.array_equal(c1, c2), name


def test_homogeneous_state_hand_checked():
    grid = Grid((4, 1, 1))
    bg = flrw_background(PARAMS, 0.0)
    kap1 = bg.trk / 3.0 + 0.3
    kap2 = bg.trk / 3.0 - 0.2
    recipe = DataRecipe(kind="homogeneous_anisotropic", kappa1=kap1, kappa2=kap2)
    s = build_initial_state(PARAMS, recipe, grid)
    kap3 = (2.0 * PARAMS.lambda_ + PARAMS.phi0**2 - 2.0 * kap1 * kap2) / (
        2.0 * (kap1 + kap2)
    )
    trk = kap1 + kap2 + kap3
    assert np.max(np.abs(s.n_hat - (bg.trk - trk))) < 1e-12
    # diagonal trace-free curvature deviation
    from torusgr.state import sym_get, sym_trace

    assert np.max(np.abs(sym_trace(s.k_hat))) < 1e-13
    assert np.max(np.abs(sym_get(s.k_hat, 0, 0) - (kap1 - trk / 3.0))) < 1e-12
    assert np.max(np.abs(sym_get(s.k_hat, 0, 1))) == 0.0
    # and the constraints hold
    full = unhat(s, bg)
    res = evaluate_constraints(full, bg, PARAMS.lambda_)
    assert res.ham_sup < 1e-11
    assert res.mom_sup < 1e-12


def test_homogeneous_state_rejects_singular_kappa():
    grid = Grid((4, 1, 1))
    recipe = DataRecipe(kind="homogeneous_anisotropic", kappa1=1.0, kappa2=-1.0)
    with pytest.raises(RecipeError):
        build_initial_state(PARAMS, recipe, grid)
