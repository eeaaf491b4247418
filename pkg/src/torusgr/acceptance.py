"""Acceptance suite: quantitative checks of the predicted late-time behavior.

Each criterion is a self-contained method on AcceptanceContext returning a
CriterionResult; the context caches the one expensive shared run (the
amplitude-1e-3 conformal decay run on 64 points) that several criteria
inspect.  The suite is callable both from pytest and from the CLI `accept`
subcommand; every criterion reports one PASS/FAIL line with the measured
numbers.

Two independent oracles live here because the CLI needs them at run time:

* a homogeneous (spatially constant, diagonal) reduction of the full system
  to scalar ODEs, integrated with an adaptive high-order method, against
  which the grid code's RK4 trajectory is compared; and
* the hand-linearized constant-coefficient mode system about the rolling
  background, used to check the nonlinear right-hand side at tiny amplitude.
"""

from __future__ import annotations

import math
import tempfile
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp

from .background import UNHALVED_KINETIC, FlrwParams, flrw_background
from .config import AcceptanceToggles, RunConfig, default_snapshot_times
from .constraints import evaluate_constraints
from .diagnostics import causal_character, reconstruct_metric
from .evolution import EvolutionConfig, lapse_rhs_split, rhs_hyperbolic
from .grid import Grid
from .harness import RunResult, convergence_study, run
from .initial_data import (
    CONFORMAL_PERTURBATION,
    EXACT_FLRW,
    HOMOGENEOUS_ANISOTROPIC,
    DataRecipe,
    ModeSpec,
    lichnerowicz_solve,
    perturbation_field,
)
from .state import (
    GAMMA_PAIRS,
    SYM_PAIRS,
    State,
    gamma_full,
    gamma_get,
    sym_get,
    sym_project_tracefree,
    sym_trace,
    unhat,
    zero_state,
)

__all__ = ["CriterionResult", "AcceptanceContext", "run_all", "format_result"]


@dataclass(frozen=True)
class CriterionResult:
    index: int
    name: str
    passed: bool
    detail: str


def format_result(res: CriterionResult) -> str:
    tag = "PASS" if res.passed else "FAIL"
    return f"{tag} criterion {res.index:2d} [{res.name}]: {res.detail}"


# ----------------------------------------------------------------------
# independent oracles
# ----------------------------------------------------------------------


def homogeneous_oracle_final(
    params: FlrwParams, kappa1: float, kappa2: float, t_end: float
) -> np.ndarray:
    """Adaptive ODE solution of the homogeneous diagonal reduction.

    State vector: [khat_1, khat_2, khat_3, nhat, ehat_1, ehat_2, ehat_3,
    e0psi_hat, psi_hat].  The equations are the spatially-constant diagonal
    specialization written directly in scalar form.
    """
    lam = params.lambda_
    bg0 = flrw_background(params, 0.0)
    kappa3 = (2.0 * lam + params.phi0**2 - 2.0 * kappa1 * kappa2) / (
        2.0 * (kappa1 + kappa2)
    )
    kappas = (kappa1, kappa2, kappa3)
    trk0 = sum(kappas)
    y0 = np.array(
        [kappas[0] - trk0 / 3.0, kappas[1] - trk0 / 3.0, kappas[2] - trk0 / 3.0,
         bg0.trk - trk0, 0.0, 0.0, 0.0, 0.0, 0.0]
    )

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        bg = flrw_background(params, float(t))
        kh = y[0:3]
        nh = y[3]
        eh = y[4:7]
        p_hat = y[7]
        n = 1.0 + nh
        trk = bg.trk - nh
        k = kh + trk / 3.0
        f = -n * (nh - bg.trk) * k - lam * n
        dkh = f - np.mean(f)
        dnh = (
            -n * float(np.sum(k * k))
            + n * lam
            - n * (p_hat + bg.phi) ** 2
            + bg.trk_dot
        )
        deh = n * k * (eh + bg.frame_coef) - bg.frame_coef_dot
        dp = -n * (nh - bg.trk) * (p_hat + bg.phi) - bg.phi_dot
        dpsi = n * (p_hat + bg.phi) - bg.phi
        return np.concatenate([dkh, [dnh], deh, [dp], [dpsi]])

    sol = solve_ivp(
        rhs, (0.0, t_end), y0, method="DOP853", rtol=1e-12, atol=1e-14,
        t_eval=[t_end],
    )
    if not sol.success:
        raise RuntimeError(f"oracle ODE integration failed: {sol.message}")
    return sol.y[:, -1]


def linearized_rhs(s: State, params: FlrwParams) -> State:
    """Hand-linearized evolution about the rolling background.

    Written directly from the first-order mode system (constant-in-space
    background coefficients, flat spectral derivatives), independently of
    the nonlinear assembly in the evolution module.
    """
    grid = s.grid
    bg = flrw_background(params, s.t)
    a = bg.a
    trk = bg.trk
    phi = bg.phi
    lam = params.lambda_
    inv_a = 1.0 / a
    d = zero_state(grid, s.t)
    dn = grid.coord_derivs(s.n_hat)

    raw = np.zeros((6,) + grid.shape)
    for p, (i, j) in enumerate(SYM_PAIRS):
        hess = grid.spectral_derivative(dn[i], j)
        div_g = np.zeros(grid.shape)
        for c in range(3):
            div_g += grid.spectral_derivative(gamma_get(s.gamma_hat, i, j, c), c)
        gmid_j = np.zeros(grid.shape)
        for c in range(3):
            gmid_j += gamma_get(s.gamma_hat, c, j, c)
        raw[p] = (
            trk * sym_get(s.k_hat, i, j)
            - inv_a * inv_a * hess
            + inv_a * (div_g - grid.spectral_derivative(gmid_j, i))
        )
    d.k_hat = sym_project_tracefree(raw)

    coef = (trk - 1.0) / 3.0
    for q, (j, b) in enumerate(GAMMA_PAIRS):
        for i in range(3):
            comp = (trk / 3.0) * s.gamma_hat[i, q] + inv_a * (
                grid.spectral_derivative(sym_get(s.k_hat, i, j), b)
                - grid.spectral_derivative(sym_get(s.k_hat, b, i), j)
            )
            if i == j:
                comp = comp + coef * inv_a * dn[b]
            if i == b:
                comp = comp - coef * inv_a * dn[j]
            d.gamma_hat[i, q] = comp

    for i in range(3):
        for aa in range(3):
            comp = (trk / 3.0) * s.e_hat[i, aa] + inv_a * sym_get(s.k_hat, i, aa)
            if i == aa:
                comp = comp + coef * inv_a * s.n_hat
            d.e_hat[i, aa] = comp

    div_eps = np.zeros(grid.shape)
    for c in range(3):
        div_eps += grid.spectral_derivative(s.epsi_hat[c], c)
    d.e0psi_hat = trk * s.e0psi_hat + (trk - 1.0) * phi * s.n_hat + inv_a * div_eps

    de0 = grid.coord_derivs(s.e0psi_hat)
    for i in range(3):
        d.epsi_hat[i] = (trk / 3.0) * s.epsi_hat[i] + inv_a * de0[i] + phi * inv_a * dn[i]

    d.psi_hat = s.e0psi_hat + phi * s.n_hat

    d.n_hat = (
        inv_a * inv_a * grid.laplacian(s.n_hat)
        + (lam - trk * trk / 3.0 + (2.0 / 3.0) * trk - phi * phi) * s.n_hat
        - 2.0 * phi * s.e0psi_hat
    )
    return d


def _nonlinear_rhs(s: State, params: FlrwParams) -> State:
    bg = flrw_background(params, s.t)
    d = rhs_hyperbolic(s, bg, params.lambda_)
    expl, mu = lapse_rhs_split(s, bg, params.lambda_)
    d.n_hat = s.grid.dealias(expl + mu * s.grid.laplacian(s.n_hat))
    return d


def _single_mode_state(grid: Grid, t: float, eps: float) -> State:
    """All hatted components set to distinct single-mode profiles of size eps."""
    x = grid.coords(0) + grid.zeros()
    s = zero_state(grid, t)

    def prof(shift: float) -> np.ndarray:
        return eps * np.sin(x + shift)

    s.n_hat = prof(0.15)
    for p in range(6):
        s.k_hat[p] = prof(0.3 + 0.11 * p)
    s.k_hat = sym_project_tracefree(s.k_hat)
    for i in range(3):
        for q in range(3):
            s.gamma_hat[i, q] = prof(1.0 + 0.13 * (3 * i + q))
        for a in range(3):
            s.e_hat[i, a] = prof(2.2 + 0.07 * (3 * i + a))
    s.e0psi_hat = prof(3.1)
    for i in range(3):
        s.epsi_hat[i] = prof(3.4 + 0.09 * i)
    s.psi_hat = prof(4.0)
    return s


# ----------------------------------------------------------------------
# the acceptance context
# ----------------------------------------------------------------------

_STATE_GROUPS = ("n_hat", "e_hat", "k_hat", "gamma_hat", "e0psi_hat", "epsi_hat", "psi_hat")


def _state_sup_diff(sa: State, sb: State) -> float:
    out = 0.0
    for name in _STATE_GROUPS:
        out = max(out, float(np.max(np.abs(getattr(sa, name) - getattr(sb, name)))))
    return out


class AcceptanceContext:
    """Shared profiles and cached runs for the acceptance criteria."""

    def __init__(self, workdir=None):
        if workdir is None:
            workdir = tempfile.mkdtemp(prefix="torusgr-accept-")
        self.workdir = Path(workdir)
        self.workdir.mkdir(parents=True, exist_ok=True)
        self._decay: RunResult | None = None
        self.params = FlrwParams(lambda_=3.0, a0=1.0, psi0=0.0, phi0=3.0)

    # -- shared profiles ------------------------------------------------

    def decay_config(self) -> RunConfig:
        return RunConfig(
            params=self.params,
            grid_points=(64, 1, 1),
            recipe=DataRecipe(
                kind=CONFORMAL_PERTURBATION,
                amplitude=1e-3,
                # mode 4: the forced e^{-2Ht} coefficients grow like the
                # square of the wavenumber, so a higher mode reaches the
                # asymptotic regime before the fit window opens at t = 2/H
                modes=(ModeSpec((4, 0, 0)),),
            ),
            evolution=EvolutionConfig(),
            output_dir=str(self.workdir / "decay"),
            snapshot_times=None,  # default ladder: 0 and 2/H..8/H step 0.5/H
        )

    @property
    def decay(self) -> RunResult:
        if self._decay is None:
            self._decay = run(self.decay_config(), write_artifacts=True)
        return self._decay

    def _decay_snapshot(self, t: float) -> State:
        for snap in self.decay.trajectory.snapshots:
            if abs(snap.t - t) < 1e-9:
                return snap
        raise AssertionError(f"decay run has no snapshot at t = {t}")

    # -- criteria ---------------------------------------------------------

    def criterion_1(self) -> CriterionResult:
        """FLRW fixed point and the convention arbiter."""
        t0 = time.perf_counter()
        cfg = RunConfig(
            params=self.params,
            grid_points=(16, 1, 1),
            recipe=DataRecipe(kind=EXACT_FLRW),
            evolution=EvolutionConfig(t_end=5.0),
            output_dir=str(self.workdir / "flrw"),
            snapshot_times=(),
        )
        rr = run(cfg, write_artifacts=False)
        elapsed = time.perf_counter() - t0
        traj = rr.trajectory
        sup_max = max(
            float(np.max(traj.column(c)))
            for c in ("sup_khat", "sup_gammahat", "sup_ehat", "sup_nhat", "sup_epsi", "sup_psihat")
        )
        cons_max = max(float(np.max(traj.column("ham_sup"))), float(np.max(traj.column("mom_sup"))))

        alt_params = replace(self.params, alpha_convention=UNHALVED_KINETIC)
        grid = Grid((16, 1, 1))
        s0 = zero_state(grid, 0.0)
        bg0 = flrw_background(alt_params, 0.0)
        cons_alt = evaluate_constraints(unhat(s0, bg0), bg0, alt_params.lambda_)
        rel_alt = cons_alt.ham_sup / (2.0 * alt_params.lambda_)

        passed = sup_max <= 1e-10 and cons_max <= 1e-11 and rel_alt >= 0.1 and elapsed < 60.0
        detail = (
            f"hatted sup {sup_max:.2e} (<=1e-10), residual sup {cons_max:.2e} (<=1e-11), "
            f"unhalved-alpha relative residual {rel_alt:.2f} (O(1) expected), {elapsed:.1f}s"
        )
        return CriterionResult(1, "flrw-fixed-point", passed, detail)

    def criterion_2(self) -> CriterionResult:
        """Vacuum limit: reconstructed metric is exactly the exponential throat."""
        params = FlrwParams(lambda_=3.0, a0=1.0, psi0=0.0, phi0=0.0)
        h = params.hubble
        cfg = RunConfig(
            params=params,
            grid_points=(16, 1, 1),
            recipe=DataRecipe(kind=EXACT_FLRW),
            evolution=EvolutionConfig(t_end=5.0),
            output_dir=str(self.workdir / "vacuum"),
            snapshot_times=tuple(0.5 * k for k in range(11)),
        )
        rr = run(cfg, write_artifacts=False)
        dev = 0.0
        for snap in rr.trajectory.snapshots:
            bg = flrw_background(params, snap.t)
            _, g = reconstruct_metric(unhat(snap, bg))
            w = math.exp(-2.0 * h * snap.t)
            for p, (i, j) in enumerate(SYM_PAIRS):
                target = params.a0**2 if i == j else 0.0
                dev = max(dev, float(np.max(np.abs(w * g[p] - target))))
        passed = dev <= 1e-8
        return CriterionResult(
            2, "vacuum-exponential", passed,
            f"max |e^(-2Ht) g - a0^2 delta| = {dev:.2e} over t in [0,5] (<=1e-8)",
        )

    def criterion_3(self) -> CriterionResult:
        """Decay-rate table on the shared conformal run."""
        res = self.decay
        h = self.params.hubble
        bands = {
            "nhat": -2.0, "khat": -2.0, "e0psi": -2.0, "psi_minus_inf": -2.0,
            "gammahat": -1.0, "ehat": -1.0, "epsi_spatial": -1.0,
        }
        parts = []
        ok = True
        for name, expect in bands.items():
            entry = res.rates.get(name)
            if entry is None:
                ok = False
                parts.append(f"{name}=missing")
                continue
            rate = entry["rate"]
            target = expect * h
            good = abs(rate - target) <= 0.10 * abs(target)
            ok = ok and good
            parts.append(f"{name}={rate:+.3f}" + ("" if good else "!"))
        ok = ok and res.runtime_seconds < 300.0
        detail = ", ".join(parts) + f" (targets +-10%), runtime {res.runtime_seconds:.0f}s"
        return CriterionResult(3, "decay-rates", ok, detail)

    def criterion_4(self) -> CriterionResult:
        energy = self.decay.trajectory.column("energy")
        ratio = float(np.max(energy) / energy[0])
        passed = bool(np.all(energy <= 10.0 * energy[0]))
        return CriterionResult(
            4, "energy-bound", passed,
            f"max E(t)/E(0) = {ratio:.3f} (<=10)",
        )

    def criterion_5(self) -> CriterionResult:
        asym = self.decay.asymptotics
        if asym is None:
            return CriterionResult(5, "forcing-consistency", False,
                                   f"extraction unavailable: {self.decay.extraction_note}")
        grid = self.decay.trajectory.grid

        def group_l2(field: np.ndarray) -> float:
            comps = field[None] if field.ndim == len(grid.shape) else field
            return math.sqrt(sum(grid.l2_norm(c) ** 2 for c in comps))

        rel_k = group_l2(asym.F_khat_fit - asym.F_khat) / group_l2(asym.F_khat)
        rel_p = group_l2(asym.F_e0psi_fit - asym.F_e0psi) / group_l2(asym.F_e0psi)
        passed = rel_k <= 0.05 and rel_p <= 0.05
        return CriterionResult(
            5, "forcing-consistency", passed,
            f"curvature forcing mismatch {100*rel_k:.3g}%, scalar forcing {100*rel_p:.3g}% (<=5%)",
        )

    def criterion_6(self) -> CriterionResult:
        """Causal flip of grad psi at the point of strongest limiting gradient."""
        res = self.decay
        asym = res.asymptotics
        if asym is None:
            return CriterionResult(6, "causal-flip", False, "extraction unavailable")
        grid = res.trajectory.grid
        dpsi = grid.coord_derivs(asym.psi_inf)
        gmag = dpsi[0] ** 2 + dpsi[1] ** 2 + dpsi[2] ** 2
        idx = np.unravel_index(int(np.argmax(gmag)), grid.shape)
        times = []
        qvals = []
        for snap in res.trajectory.snapshots:
            bg = flrw_background(self.params, snap.t)
            q = causal_character(unhat(snap, bg))
            times.append(snap.t)
            qvals.append(float(q[idx]))
        q0 = qvals[0] if abs(times[0]) < 1e-12 else None
        t_star = None
        for i in range(1, len(times)):
            if all(v < 0.0 for v in qvals[i:]):
                t_star = times[i]
                break
        passed = (
            q0 is not None and q0 > 0.0 and t_star is not None and t_star <= 6.0
            and qvals[-1] < 0.0
        )
        detail = (
            f"q(0,x*) = {q0:.3f}" if q0 is not None else "no t=0 snapshot"
        )
        detail += f", flip at t* = {t_star}" if t_star is not None else ", no persistent flip"
        detail += f", q(t_end,x*) = {qvals[-1]:.3e} (t* <= 6 required)"
        return CriterionResult(6, "causal-flip", passed, detail)

    def criterion_7(self) -> CriterionResult:
        traj = self.decay.trajectory
        total = traj.column("ham_l2") + traj.column("mom_l2")
        bound = 10.0 * total[0] + 1e-9
        worst = float(np.max(total))
        prop_ok = bool(np.all(total <= bound))

        ratios = []
        res_prev = None
        recipe = DataRecipe(
            kind=CONFORMAL_PERTURBATION,
            amplitude=1e-3,
            modes=tuple(ModeSpec((m, 0, 0), 3.0 ** (1 - m)) for m in range(1, 11)),
        )
        for n in (32, 64):
            grid = Grid((n, 1, 1))
            from .initial_data import build_initial_state

            s0 = build_initial_state(self.params, recipe, grid)
            bg0 = flrw_background(self.params, 0.0)
            cons = evaluate_constraints(unhat(s0, bg0), bg0, self.params.lambda_)
            tot = cons.ham_l2 + cons.mom_l2
            if res_prev is not None:
                ratios.append(res_prev / tot)
            res_prev = tot
        drop_ok = all(r >= 100.0 for r in ratios)
        passed = prop_ok and drop_ok
        detail = (
            f"max residual {worst:.2e} vs bound {bound:.2e}; "
            f"doubling drop x{ratios[0]:.0f} (>=100)"
        )
        return CriterionResult(7, "constraint-propagation", passed, detail)

    def criterion_8(self) -> CriterionResult:
        res = self.decay
        # (a) trace of khat after every stored step
        rel_trace = 0.0
        for snap in res.trajectory.snapshots:
            scale = float(np.max(np.abs(snap.k_hat)))
            if scale == 0.0:
                continue
            rel_trace = max(rel_trace, float(np.max(np.abs(sym_trace(snap.k_hat)))) / scale)
        # (b) antisymmetry of the expanded connection is structural
        snap = res.trajectory.snapshots[-1]
        gf = gamma_full(snap.gamma_hat)
        anti = 0.0
        for i in range(3):
            for j in range(3):
                for b in range(3):
                    anti = max(anti, float(np.max(np.abs(gf[i, j, b] + gf[i, b, j]))))
        # (c) symmetrized evolution stays within the momentum-residual scale
        cfg_sym = replace(
            self.decay_config(),
            evolution=EvolutionConfig(t_end=2.0, symmetrize=True),
            snapshot_times=(0.0, 2.0),
            output_dir=str(self.workdir / "symmetrized"),
        )
        rr_sym = run(cfg_sym, write_artifacts=False)
        s_sym = rr_sym.trajectory.snapshots[-1]
        s_def = self._decay_snapshot(2.0)
        grid = res.trajectory.grid
        diff_l2 = 0.0
        for name in _STATE_GROUPS:
            da = getattr(s_sym, name) - getattr(s_def, name)
            comps = da[None] if da.ndim == len(grid.shape) else da.reshape((-1,) + grid.shape)
            diff_l2 = math.hypot(diff_l2, math.sqrt(sum(grid.l2_norm(c) ** 2 for c in comps)))
        rec2 = None
        for rec in res.trajectory.records:
            if abs(rec.t - 2.0) < 1e-9:
                rec2 = rec
                break
        mom2 = rec2.mom_l2 if rec2 is not None else float("nan")
        sym_ok = diff_l2 <= 10.0 * mom2
        passed = rel_trace <= 1e-13 and anti == 0.0 and sym_ok
        detail = (
            f"khat trace rel {rel_trace:.1e} (<=1e-13), antisym dev {anti:.1e} (exact), "
            f"symmetrize diff L2 {diff_l2:.2e} vs 10x mom {10*mom2:.2e}"
        )
        return CriterionResult(8, "structure-preservation", passed, detail)

    def criterion_9(self) -> CriterionResult:
        # (a) homogeneous trajectory vs adaptive ODE oracle
        bg0 = flrw_background(self.params, 0.0)
        kap1 = bg0.trk / 3.0 - 0.02
        kap2 = bg0.trk / 3.0 + 0.03
        cfg = RunConfig(
            params=self.params,
            grid_points=(1, 1, 1),
            recipe=DataRecipe(kind=HOMOGENEOUS_ANISOTROPIC, kappa1=kap1, kappa2=kap2),
            evolution=EvolutionConfig(t_end=1.0, dt_override=0.005, output_stride=50),
            output_dir=str(self.workdir / "homogeneous"),
            snapshot_times=(1.0,),
        )
        rr = run(cfg, write_artifacts=False)
        s1 = rr.trajectory.snapshots[-1]
        oracle = homogeneous_oracle_final(self.params, kap1, kap2, 1.0)
        got = np.array(
            [
                float(s1.k_hat[0].flat[0]), float(s1.k_hat[3].flat[0]), float(s1.k_hat[5].flat[0]),
                float(s1.n_hat.flat[0]),
                float(s1.e_hat[0, 0].flat[0]), float(s1.e_hat[1, 1].flat[0]), float(s1.e_hat[2, 2].flat[0]),
                float(s1.e0psi_hat.flat[0]), float(s1.psi_hat.flat[0]),
            ]
        )
        ode_diff = float(np.max(np.abs(got - oracle)))

        # (b) nonlinear RHS vs hand-linearized mode system at tiny amplitude
        grid = Grid((16, 1, 1))
        t_probe = 0.4

        def rhs_gap(eps: float) -> float:
            s = _single_mode_state(grid, t_probe, eps)
            return _state_sup_diff(_nonlinear_rhs(s, self.params), linearized_rhs(s, self.params))

        gap6 = rhs_gap(1e-6)
        gap7 = rhs_gap(1e-7)
        ratio = gap6 / gap7 if gap7 > 0 else float("inf")
        # the residual is the quadratic remainder ~ C * eps^2 with C of order
        # a few; demand it at that scale and genuinely second order in eps
        lin_ok = gap6 <= 2e-11 and 50.0 <= ratio <= 200.0
        passed = ode_diff <= 1e-8 and lin_ok
        detail = (
            f"homogeneous vs ODE oracle sup {ode_diff:.2e} (<=1e-8); "
            f"linearization gap {gap6:.2e} at 1e-6 (<=2e-11), eps-scaling x{ratio:.0f} (~100)"
        )
        return CriterionResult(9, "oracle-equivalence", passed, detail)

    def criterion_10(self) -> CriterionResult:
        grid16 = Grid((16, 1, 1))
        sol0 = lichnerowicz_solve(self.params, grid16, grid16.zeros())
        bg0 = flrw_background(self.params, 0.0)
        exact_ok = bool(np.all(sol0.phi == 1.0)) and sol0.iterations == 0 \
            and sol0.k_diag == bg0.trk / 3.0

        grid = Grid((64, 1, 1))
        recipe = DataRecipe(
            kind=CONFORMAL_PERTURBATION, amplitude=1e-3, modes=(ModeSpec((1, 0, 0)),)
        )
        dphi = perturbation_field(recipe, grid)
        sol = lichnerowicz_solve(self.params, grid, dphi)
        from .initial_data import build_initial_state

        s0 = build_initial_state(self.params, recipe, grid)
        cons = evaluate_constraints(unhat(s0, bg0), bg0, self.params.lambda_)
        passed = exact_ok and cons.ham_sup <= 1e-9 and sol.iterations <= 6
        detail = (
            f"flat data: phi==1 {'exactly' if exact_ok else 'FAILED'}; perturbed: "
            f"assembled ham sup {cons.ham_sup:.2e} (<=1e-9), {sol.iterations} Newton steps (<=6)"
        )
        return CriterionResult(10, "initial-data-solver", passed, detail)

    def criterion_11(self) -> CriterionResult:
        # spatial: smooth broadband data, shared step, subsampled comparison
        spatial_cfg = RunConfig(
            params=self.params,
            grid_points=(64, 1, 1),
            recipe=DataRecipe(
                kind=CONFORMAL_PERTURBATION,
                amplitude=3e-3,
                modes=tuple(ModeSpec((m, 0, 0), 3.0 ** (1 - m)) for m in range(1, 6)),
            ),
            evolution=EvolutionConfig(t_end=0.2),
            output_dir=str(self.workdir / "conv-spatial"),
        )
        rep_s = convergence_study(spatial_cfg, resolutions=[16, 32, 64], dts=None)
        spatial_ok = all(r >= 100.0 for r in rep_s.spatial_ratios)

        temporal_cfg = RunConfig(
            params=self.params,
            grid_points=(16, 1, 1),
            recipe=DataRecipe(
                kind=CONFORMAL_PERTURBATION, amplitude=1e-3, modes=(ModeSpec((1, 0, 0)),)
            ),
            evolution=EvolutionConfig(t_end=0.5),
            output_dir=str(self.workdir / "conv-temporal"),
        )
        rep_t = convergence_study(temporal_cfg, resolutions=None, dts=[0.02, 0.01, 0.005])
        coupled_order = min(rep_t.temporal_orders)

        frozen_cfg = replace(
            temporal_cfg,
            evolution=EvolutionConfig(t_end=0.5, freeze_lapse=True),
        )
        rep_f = convergence_study(frozen_cfg, resolutions=None, dts=[0.02, 0.01, 0.005])
        frozen_order = min(rep_f.temporal_orders)

        passed = spatial_ok and coupled_order >= 3.0 and frozen_order >= 3.7
        ratios = "x".join(f"{r:.0f}" for r in rep_s.spatial_ratios)
        detail = (
            f"spatial doubling ratio {ratios} (>=100); temporal order coupled "
            f"{coupled_order:.2f} (>=3), lapse-frozen {frozen_order:.2f} (>=3.7)"
        )
        return CriterionResult(11, "convergence-orders", passed, detail)


_CRITERIA = [f"criterion_{i}" for i in range(1, 12)]


def run_all(ctx: AcceptanceContext | None = None) -> list[CriterionResult]:
    ctx = ctx or AcceptanceContext()
    return [getattr(ctx, name)() for name in _CRITERIA]
