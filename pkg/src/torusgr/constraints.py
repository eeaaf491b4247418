"""Discrete energy (Hamiltonian) and momentum constraint residuals.

Both constraints are evaluated on full (un-hatted) variables in frame form.
With e_C denoting the frame derivative e_C^a d_a, the residuals are

    ham = [2 e_C gamma_DDC - gamma_CDE gamma_EDC - gamma_CCD gamma_EED]
          - [k_CD k_CD - trk^2 + 2 lambda + (e0 psi)^2 + e_C psi e_C psi]

(the first bracket is the scalar curvature of the slice expressed through
the connection coefficients; trk enters through the time gauge, where the
lapse perturbation equals the curvature-trace perturbation), and per frame
direction I

    mom_I = e_C k_CI + e_I n - k_ID gamma_CCD - k_CD gamma_CID
            + (e0 psi) e_I psi.

Free evolution never feeds these back; they are monitored as the primary
correctness signal.  A hatted rearrangement of the momentum residual is
provided as an algebraic cross-check: the two forms agree identically
because the pure-trace part of k drops out of the gamma contractions by
antisymmetry.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .background import BackgroundState
from .grid import Grid
from .state import FullVars, State, sym_get

__all__ = [
    "ConstraintResiduals",
    "frame_derivative",
    "hamiltonian_residual",
    "momentum_residual",
    "momentum_residual_hatted",
    "evaluate_constraints",
]


def frame_derivative(grid: Grid, e: np.ndarray, f: np.ndarray) -> np.ndarray:
    """All three frame derivatives e_C f = e_C^a d_a f; returns (3, ...)."""
    df = grid.coord_derivs(f)
    out = np.zeros((3,) + grid.shape)
    for c in range(3):
        for a in range(3):
            out[c] += e[c, a] * df[a]
    return out


def _gamma_dd(gamma: np.ndarray) -> np.ndarray:
    """Contracted connection gamma_DDC (sum over first two slots); (3, ...)."""
    return gamma[0, 0] + gamma[1, 1] + gamma[2, 2]


def hamiltonian_residual(full: FullVars, bg: BackgroundState, lambda_: float) -> np.ndarray:
    """Pointwise Hamiltonian residual (zero on exact solutions)."""
    grid = full.grid
    gamma = full.gamma
    gdd = _gamma_dd(gamma)  # gdd[c] = gamma_DDC

    # 2 e_C gamma_DDC
    lhs = np.zeros(grid.shape)
    for c in range(3):
        dc = grid.coord_derivs(gdd[c])
        for a in range(3):
            lhs += 2.0 * full.e[c, a] * dc[a]
    # - gamma_CDE gamma_EDC
    for c in range(3):
        for d in range(3):
            for e_idx in range(3):
                lhs -= gamma[c, d, e_idx] * gamma[e_idx, d, c]
    # - gamma_CCD gamma_EED
    for d in range(3):
        lhs -= gdd[d] * gdd[d]

    k2 = np.zeros(grid.shape)
    for c in range(3):
        for d in range(3):
            k2 += full.k[c, d] * full.k[c, d]
    grad_psi2 = np.zeros(grid.shape)
    for c in range(3):
        grad_psi2 += full.epsi[c] * full.epsi[c]
    # (n - 1 - trk_bg)^2 == trk^2 under the time gauge
    rhs = k2 - full.trk * full.trk + 2.0 * lambda_ + full.e0psi * full.e0psi + grad_psi2
    return lhs - rhs


def momentum_residual(full: FullVars, bg: BackgroundState) -> np.ndarray:
    """Pointwise momentum residual per frame direction; returns (3, ...)."""
    grid = full.grid
    gamma = full.gamma
    gdd = _gamma_dd(gamma)
    # coordinate derivatives of the 6 independent curvature components
    dk = {}
    for i in range(3):
        for j in range(i, 3):
            dk[(i, j)] = grid.coord_derivs(full.k[i, j])
    dn = grid.coord_derivs(full.n)

    out = np.zeros((3,) + grid.shape)
    for i in range(3):
        m = np.zeros(grid.shape)
        for c in range(3):
            dkc = dk[(min(c, i), max(c, i))]
            for a in range(3):
                m += full.e[c, a] * dkc[a]          # e_C k_CI
        for a in range(3):
            m += full.e[i, a] * dn[a]               # e_I n
        for d in range(3):
            m -= full.k[i, d] * gdd[d]              # -k_ID gamma_CCD
        for c in range(3):
            for d in range(3):
                m -= full.k[c, d] * gamma[c, i, d]  # -k_CD gamma_CID
        m += full.e0psi * full.epsi[i]              # -(rhs) = +e0psi e_I psi
        out[i] = m
    return out


def momentum_residual_hatted(s: State, full: FullVars, bg: BackgroundState) -> np.ndarray:
    """Momentum residual assembled from hatted variables (identity cross-check).

    e_C khat_CI + (2/3) e_I nhat - khat_ID gamma_CCD - khat_CD gamma_CID
    + (e0 psi) ehat_I psi  — equal to momentum_residual() to round-off.
    """
    grid = full.grid
    gamma = full.gamma
    gdd = _gamma_dd(gamma)
    dkh = {}
    for i in range(3):
        for j in range(i, 3):
            dkh[(i, j)] = grid.coord_derivs(sym_get(s.k_hat, i, j))
    dn = grid.coord_derivs(s.n_hat)

    out = np.zeros((3,) + grid.shape)
    for i in range(3):
        m = np.zeros(grid.shape)
        for c in range(3):
            d_comp = dkh[(min(c, i), max(c, i))]
            for a in range(3):
                m += full.e[c, a] * d_comp[a]
        for a in range(3):
            m += (2.0 / 3.0) * full.e[i, a] * dn[a]
        for d in range(3):
            m -= sym_get(s.k_hat, i, d) * gdd[d]
        for c in range(3):
            for d in range(3):
                m -= sym_get(s.k_hat, c, d) * gamma[c, i, d]
        m += full.e0psi * s.epsi_hat[i]
        out[i] = m
    return out


@dataclass(frozen=True)
class ConstraintResiduals:
    """Residual fields with their sup and L2 summaries."""

    hamiltonian: np.ndarray
    momentum: np.ndarray
    ham_sup: float
    mom_sup: float
    ham_l2: float
    mom_l2: float


def evaluate_constraints(full: FullVars, bg: BackgroundState, lambda_: float) -> ConstraintResiduals:
    grid = full.grid
    ham = hamiltonian_residual(full, bg, lambda_)
    mom = momentum_residual(full, bg)
    mom_l2_sq = 0.0
    for i in range(3):
        mom_l2_sq += grid.l2_norm(mom[i]) ** 2
    return ConstraintResiduals(
        hamiltonian=ham,
        momentum=mom,
        ham_sup=float(np.max(np.abs(ham))),
        mom_sup=float(np.max(np.abs(mom))),
        ham_l2=grid.l2_norm(ham),
        mom_l2=float(np.sqrt(mom_l2_sq)),
    )
