"""Constraint-satisfying initial data on the flat 3-torus.

Three recipes are supported:

* ``exact_flrw`` — the zero hatted state (pure background).
* ``conformal_perturbation`` — conformally-flat data: the spatial metric is
  g = a0^2 Phi^4 delta with the conformal factor Phi solving the discrete
  Lichnerowicz equation

      -8 lap(Phi) = a0^2 (2 lambda + phi0x^2 - 6 kdiag^2) Phi^5,

  where phi0x = phi0 + delta_phi is the perturbed initial scalar momentum
  and k_IJ = kdiag * delta_IJ.  With k pure trace, constant kdiag and
  e_I psi = 0 the momentum constraint is satisfied identically, so solving
  the scalar equation above settles the full constraint set.  The pair
  (Phi, kdiag) is fixed by Newton iteration with the zero-mean gauge
  mean(Phi - 1) = 0 closing the system.
* ``homogeneous_anisotropic`` — spatially constant diagonal curvature
  (kappa1, kappa2, kappa3) with kappa3 chosen so the (homogeneous)
  Hamiltonian constraint holds:

      2 (kappa1 kappa2 + (kappa1 + kappa2) kappa3) = 2 lambda + phi0^2.

  This is linear in kappa3 and fails only when kappa1 + kappa2 = 0.

The orthonormal frame is produced by pointwise Gram-Schmidt against the
coordinate basis and the connection coefficients then follow from the frame
commutators:

    gamma_IJB = (c_IJB - c_JBI + c_BIJ) / 2,
    c_IJ^a   = e_I^b d_b e_J^a - e_J^b d_b e_I^a,   c_IJB = c_IJ^a v_a^B,

with v the pointwise inverse of the frame-component matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .background import FlrwParams, flrw_background
from .errors import (
    NoConvergenceError,
    NonPositivePhiError,
    RecipeError,
    SingularFrameError,
)
from .grid import Grid
from .state import State, sym_project_tracefree, zero_state

__all__ = [
    "EXACT_FLRW",
    "CONFORMAL_PERTURBATION",
    "HOMOGENEOUS_ANISOTROPIC",
    "RECIPE_KINDS",
    "ModeSpec",
    "DataRecipe",
    "LichnerowiczSolution",
    "perturbation_field",
    "gram_schmidt_frame",
    "initial_gamma",
    "lichnerowicz_solve",
    "build_initial_state",
]

EXACT_FLRW = "exact_flrw"
CONFORMAL_PERTURBATION = "conformal_perturbation"
HOMOGENEOUS_ANISOTROPIC = "homogeneous_anisotropic"
RECIPE_KINDS = (EXACT_FLRW, CONFORMAL_PERTURBATION, HOMOGENEOUS_ANISOTROPIC)


@dataclass(frozen=True)
class ModeSpec:
    """One Fourier mode of the scalar-momentum perturbation."""

    wavevector: tuple[int, int, int]
    coef: float = 1.0
    phase: float = 0.0


@dataclass(frozen=True)
class DataRecipe:
    kind: str = EXACT_FLRW
    amplitude: float = 0.0
    modes: tuple[ModeSpec, ...] = (ModeSpec((1, 0, 0)),)
    kappa1: float | None = None
    kappa2: float | None = None
    random_phases: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in RECIPE_KINDS:
            raise RecipeError(f"unknown recipe kind {self.kind!r}; expected one of {RECIPE_KINDS}")


def perturbation_field(recipe: DataRecipe, grid: Grid) -> np.ndarray:
    """Scalar-momentum perturbation delta_phi = amplitude * sum of sine modes."""
    phases = [m.phase for m in recipe.modes]
    if recipe.random_phases:
        rng = np.random.default_rng(recipe.seed)
        phases = list(rng.uniform(0.0, 2.0 * np.pi, size=len(recipe.modes)))
    out = grid.zeros()
    for mode, phase in zip(recipe.modes, phases):
        kvec = mode.wavevector
        if len(kvec) != 3 or any(int(k) != k for k in kvec):
            raise RecipeError(f"mode wavevector must be three integers, got {kvec!r}")
        if all(k == 0 for k in kvec):
            raise RecipeError("zero wavevector is not a valid perturbation mode")
        arg = grid.zeros() + phase
        for ax, k in enumerate(kvec):
            if k == 0:
                continue
            n = grid.n_points[ax]
            if n == 1:
                raise RecipeError(
                    f"mode {kvec} excites axis {ax} which has a single grid point"
                )
            if abs(k) > n // 3:
                raise RecipeError(
                    f"mode {kvec} lies beyond the two-thirds cutoff of a "
                    f"{grid.n_points} grid (axis {ax}: |k| <= {n // 3})"
                )
            arg = arg + k * grid.coords(ax)
        out += mode.coef * np.sin(arg)
    return recipe.amplitude * out


def _metric_inner(metric: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.zeros(u.shape[1:])
    for a in range(3):
        for b in range(3):
            out += metric[a, b] * u[a] * v[b]
    return out


def gram_schmidt_frame(grid: Grid, metric: np.ndarray) -> np.ndarray:
    """Pointwise orthonormal frame e[I, a] for the coordinate metric (3,3,...).

    Orthonormalizes the coordinate basis in order, so the result is
    lower-triangular in (I, a); raises SingularFrameError when the metric
    fails positive-definiteness (squared norms <= 1e-10 somewhere).
    """
    e = np.zeros((3, 3) + grid.shape)
    for i in range(3):
        u = np.zeros((3,) + grid.shape)
        u[i] = 1.0
        for j in range(i):
            coef = _metric_inner(metric, u, e[j])
            for a in range(3):
                u[a] = u[a] - coef * e[j, a]
        nrm2 = _metric_inner(metric, u, u)
        if float(np.min(nrm2)) <= 1e-10:
            raise SingularFrameError(
                f"metric not positive-definite within tolerance at frame leg {i}"
            )
        root = np.sqrt(nrm2)
        for a in range(3):
            e[i, a] = u[a] / root
    return e


def initial_gamma(grid: Grid, e: np.ndarray) -> np.ndarray:
    """Connection coefficients of an orthonormal frame, packed (3, 3 pairs, ...).

    Computed from the structure constants of the frame commutators; valid at
    any instant but used here for t=0 data assembly.
    """
    shape = grid.shape
    # pointwise inverse v[a, I] with sum_a e[I, a] v[a, J] = delta_IJ
    mat = np.zeros(shape + (3, 3))
    for i in range(3):
        for a in range(3):
            mat[..., i, a] = e[i, a]
    vin = np.linalg.inv(mat)  # vin[..., a, I]

    de = [[grid.coord_derivs(e[j, a]) for a in range(3)] for j in range(3)]

    # c[i][j][b] = frame commutator [e_i, e_j] projected on frame leg b
    cfull = np.zeros((3, 3, 3) + shape)
    for i in range(3):
        for j in range(i + 1, 3):
            cvec = np.zeros((3,) + shape)
            for a in range(3):
                for b in range(3):
                    cvec[a] += e[i, b] * de[j][a][b] - e[j, b] * de[i][a][b]
            for bleg in range(3):
                comp = np.zeros(shape)
                for a in range(3):
                    comp += cvec[a] * vin[..., a, bleg]
                cfull[i, j, bleg] = comp
                cfull[j, i, bleg] = -comp

    from .state import GAMMA_PAIRS, gamma_pack

    gam_full = np.zeros((3, 3, 3) + shape)
    for i in range(3):
        for j in range(3):
            for b in range(3):
                gam_full[i, j, b] = 0.5 * (cfull[i, j, b] - cfull[j, b, i] + cfull[b, i, j])
    return gamma_pack(gam_full)


@dataclass(frozen=True)
class LichnerowiczSolution:
    phi: np.ndarray
    k_diag: float
    iterations: int
    residual_sup: float


def lichnerowicz_solve(
    params: FlrwParams,
    grid: Grid,
    delta_phi: np.ndarray,
    tol: float = 1e-11,
    max_iter: int = 12,
) -> LichnerowiczSolution:
    """Newton solve for (Phi, kdiag) with the zero-mean gauge mean(Phi)=1.

    Each Newton step solves the bordered linear system

        [ -8 lap - 5 a0^2 S Phi^4    12 a0^2 kdiag Phi^5 ] [dPhi ]   [ -R  ]
        [        mean(.)                     0           ] [dkdiag] = [1 - mean(Phi)]

    by preconditioned GMRES, the preconditioner being the exact inverse of
    (1 - 8 lap) applied spectrally.  Steps are damped (halved) whenever the
    residual fails to decrease.
    """
    asq = params.a0 * params.a0
    phi0x = params.phi0 + delta_phi
    lam = flrw_background(params, 0.0).trk / 3.0
    phi = np.ones(grid.shape)
    npts = grid.num_points
    shape = grid.shape

    def residual(p: np.ndarray, kd: float) -> np.ndarray:
        s_coef = 2.0 * params.lambda_ + phi0x * phi0x - 6.0 * kd * kd
        return -8.0 * grid.laplacian(p) - asq * s_coef * p**5

    def resnorm(p: np.ndarray, kd: float) -> float:
        return max(float(np.max(np.abs(residual(p, kd)))), abs(float(np.mean(p)) - 1.0))

    res = resnorm(phi, lam)
    iterations = 0
    for _ in range(max_iter):
        if res <= tol:
            break
        iterations += 1
        s_coef = 2.0 * params.lambda_ + phi0x * phi0x - 6.0 * lam * lam
        phi4 = phi**4
        phi5 = phi4 * phi
        diag = -5.0 * asq * s_coef * phi4
        dlam_col = 12.0 * asq * lam * phi5

        def matvec(x: np.ndarray) -> np.ndarray:
            xf = x[:-1].reshape(shape)
            xl = x[-1]
            yf = -8.0 * grid.laplacian(xf) + diag * xf + dlam_col * xl
            return np.concatenate([yf.ravel(), [float(np.mean(xf))]])

        def precond(y: np.ndarray) -> np.ndarray:
            yf = y[:-1].reshape(shape)
            zf = grid.helmholtz_solve(yf, 1.0, 8.0)
            return np.concatenate([zf.ravel(), [y[-1]]])

        dim = npts + 1
        rhs = np.concatenate(
            [-residual(phi, lam).ravel(), [1.0 - float(np.mean(phi))]]
        )
        if dim <= 512:
            # tiny bordered systems sit near Krylov breakdown (restart
            # exceeds the dimension) where scipy's GMRES can stall; build
            # the matrix column-by-column and solve directly instead
            cols = np.empty((dim, dim))
            eye_col = np.zeros(dim)
            for j in range(dim):
                eye_col[j] = 1.0
                cols[:, j] = matvec(eye_col)
                eye_col[j] = 0.0
            sol = np.linalg.solve(cols, rhs)
        else:
            op = LinearOperator((dim, dim), matvec=matvec, dtype=float)
            pre = LinearOperator((dim, dim), matvec=precond, dtype=float)
            sol, info = gmres(
                op, rhs, M=pre, rtol=1e-10, atol=0.0, restart=60, maxiter=200
            )
            if info != 0:
                # a stalled stopping test can hide a converged iterate;
                # accept on the true residual before giving up
                true_rel = float(
                    np.linalg.norm(op.matvec(sol) - rhs) / np.linalg.norm(rhs)
                )
                if true_rel > 1e-8:
                    raise NoConvergenceError(
                        f"GMRES failed to converge (info={info}, "
                        f"true relative residual {true_rel:.2e})"
                    )
        dphi = sol[:-1].reshape(shape)
        dlam = float(sol[-1])

        scale = 1.0
        while True:
            cand_phi = phi + scale * dphi
            cand_lam = lam + scale * dlam
            cand_res = resnorm(cand_phi, cand_lam)
            if cand_res < res or scale < 1.0 / 32.0:
                phi, lam, res = cand_phi, cand_lam, cand_res
                break
            scale *= 0.5
        if float(np.min(phi)) <= 0.0:
            raise NonPositivePhiError(
                f"conformal factor lost positivity (min {float(np.min(phi)):.3e})"
            )
    else:
        raise NoConvergenceError(
            f"Lichnerowicz Newton iteration stalled at residual {res:.3e} "
            f"after {max_iter} steps (tol {tol:.1e})"
        )
    return LichnerowiczSolution(phi=phi, k_diag=lam, iterations=iterations, residual_sup=res)


def _dealias_state(s: State) -> None:
    grid = s.grid
    s.n_hat = grid.dealias(s.n_hat)
    for i in range(3):
        for j in range(3):
            s.e_hat[i, j] = grid.dealias(s.e_hat[i, j])
            s.gamma_hat[i, j] = grid.dealias(s.gamma_hat[i, j])
    for p in range(6):
        s.k_hat[p] = grid.dealias(s.k_hat[p])
    s.e0psi_hat = grid.dealias(s.e0psi_hat)
    for i in range(3):
        s.epsi_hat[i] = grid.dealias(s.epsi_hat[i])
    s.psi_hat = grid.dealias(s.psi_hat)


def build_initial_state(params: FlrwParams, recipe: DataRecipe, grid: Grid) -> State:
    """Assemble a constraint-satisfying hatted state at t = 0."""
    bg0 = flrw_background(params, 0.0)
    s = zero_state(grid, 0.0)

    if recipe.kind == EXACT_FLRW:
        return s

    if recipe.kind == CONFORMAL_PERTURBATION:
        dphi = perturbation_field(recipe, grid)
        sol = lichnerowicz_solve(params, grid, dphi)
        phi = sol.phi
        metric = np.zeros((3, 3) + grid.shape)
        conf = params.a0 * params.a0 * phi**4
        for a in range(3):
            metric[a, a] = conf
        e = gram_schmidt_frame(grid, metric)
        s.gamma_hat = initial_gamma(grid, e)
        for i in range(3):
            for a in range(3):
                s.e_hat[i, a] = e[i, a] - (bg0.frame_coef if i == a else 0.0)
        # k = kdiag * delta is pure trace: trace-free part stays zero
        s.n_hat = np.full(grid.shape, bg0.trk - 3.0 * sol.k_diag)
        s.e0psi_hat = dphi.copy()
        _dealias_state(s)
        return s

    # homogeneous_anisotropic
    kap1 = recipe.kappa1 if recipe.kappa1 is not None else bg0.trk / 3.0
    kap2 = recipe.kappa2 if recipe.kappa2 is not None else bg0.trk / 3.0
    denom = 2.0 * (kap1 + kap2)
    if abs(denom) < 1e-12 * max(1.0, abs(kap1), abs(kap2)):
        raise RecipeError(
            "kappa1 + kappa2 = 0: the Hamiltonian constraint cannot fix kappa3"
        )
    kap3 = (2.0 * params.lambda_ + params.phi0 * params.phi0 - 2.0 * kap1 * kap2) / denom
    trk = kap1 + kap2 + kap3
    diag = (kap1, kap2, kap3)
    from .state import SYM_INDEX

    for i in range(3):
        s.k_hat[SYM_INDEX[(i, i)]] = np.full(grid.shape, diag[i] - trk / 3.0)
    s.k_hat = sym_project_tracefree(s.k_hat)
    s.n_hat = np.full(grid.shape, bg0.trk - trk)
    return s
