"""Run diagnostics: energy, decay-rate fits, and future-infinity extraction.

The total energy of the reduced system is the weighted Sobolev sum

    E(t) = e^{2Ht} ( |khat|^2 + |gammahat|^2 + |ehat|^2
                     + e^{Ht} |nhat|^2 + |epsi-group|^2 )_{H^N},

whose boundedness (in fact decay) along a run is the discrete footprint of
the stability statement the code is designed to probe.

Limits "at t = +infinity" are realized by two-point Richardson
extrapolation: for a renormalized quantity W(t) = L + C g(t) + o(g) with a
known gap function g (a decaying exponential), two samples give

    C = (W(ta) - W(tb)) / (g(ta) - g(tb)),     L = W(tb) - C g(tb).

The leading hatted limits use gap e^{-2Ht} relative to their own weight;
the curvature and normal scalar-momentum variables decay one order faster
than the frame block, so their weighted forms e^{2Ht} khat carry both the
forcing coefficient (constant term) and the free second-order datum (the
e^{-Ht} coefficient), and a single Richardson pass against gap e^{-Ht}
yields both at once.  The forcing fields are additionally evaluated from
their defining first-order-limit expressions

    H F_khat_IJ = tf[ e_C(ginf_IJC) - e_I(ginf_CJC)
                      - ginf_CID ginf_DJC - ginf_IJD ginf_CCD
                      - pinf_I pinf_J ]
    H F_e0psi   = e_C(pinf_C) - ginf_CCD pinf_D

(tf = symmetric trace-free part; e_C here is the limiting frame derivative
built from e_inf) which gives the independent consistency check between the
trajectory fit and the constraint structure at infinity.

The causal character of the scalar-field gradient is monitored through

    q = (e0 psi)^2 - sum_I (e_I psi)^2        (rho = q/2),

positive where the gradient is timelike; the background value is phi(t)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields as dataclass_fields
from pathlib import Path

import numpy as np

from .background import BackgroundState, FlrwParams, flrw_background, flrw_limits
from .constraints import evaluate_constraints
from .errors import (
    InsufficientSamplesError,
    NonPositiveValueError,
    SingularFrameError,
    WindowTooEarlyError,
)
from .grid import Grid, write_field
from .state import (
    SYM_PAIRS,
    FullVars,
    State,
    gamma_full,
    state_norms,
    unhat,
)

__all__ = [
    "DiagnosticsRecord",
    "Trajectory",
    "AsymptoticData",
    "CSV_COLUMNS",
    "total_energy",
    "make_record",
    "fit_decay_rate",
    "causal_character",
    "energy_density",
    "reconstruct_metric",
    "extract_asymptotics",
    "write_diagnostics_csv",
    "read_diagnostics_csv",
    "write_snapshots",
    "write_asymptotics_report",
]


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    hn_khat: float
    hn_gammahat: float
    hn_ehat: float
    hn_nhat: float
    hn_epsi: float
    hn_psihat: float
    sup_khat: float
    sup_gammahat: float
    sup_ehat: float
    sup_nhat: float
    sup_epsi: float
    sup_psihat: float
    energy: float
    ham_sup: float
    ham_l2: float
    mom_sup: float
    mom_l2: float
    q_min: float
    q_max: float
    # the grouped sup_epsi mixes two decay orders; the split series below
    # let the normal and spatial scalar-derivative rates be fitted separately
    sup_e0psi: float
    sup_epsi_spatial: float


CSV_COLUMNS = tuple(f.name for f in dataclass_fields(DiagnosticsRecord))


@dataclass
class Trajectory:
    """Time series of diagnostics plus stored snapshot states."""

    params: FlrwParams
    grid: Grid
    n_sobolev: int
    times: list[float]
    records: list[DiagnosticsRecord]
    snapshots: list[State]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def total_energy(s: State, params: FlrwParams, order: int) -> float:
    """Weighted Sobolev energy of the hatted state at its own time."""
    nm = state_norms(s, order)
    h = params.hubble
    weight = math.exp(2.0 * h * s.t)
    return weight * (
        nm.h_khat**2
        + nm.h_gammahat**2
        + nm.h_ehat**2
        + math.exp(h * s.t) * nm.h_nhat**2
        + nm.h_epsi**2
    )


def causal_character(full: FullVars) -> np.ndarray:
    """q = (e0 psi)^2 - sum_I (e_I psi)^2; q > 0 where grad psi is timelike."""
    q = full.e0psi * full.e0psi
    for i in range(3):
        q = q - full.epsi[i] * full.epsi[i]
    return q


def energy_density(full: FullVars) -> np.ndarray:
    """Stiff-fluid energy density rho = q/2."""
    return 0.5 * causal_character(full)


def reconstruct_metric(full: FullVars) -> tuple[np.ndarray, np.ndarray]:
    """Dual frame v[i, C] (v_i^C e_C^j = delta) and metric g_ij = v_i^C v_j^C.

    Returns (v, g) with v shaped (3, 3, ...) and g packed as 6 components.
    Raises SingularFrameError when the pointwise frame matrix has condition
    number above 1e8.
    """
    grid = full.grid
    shape = grid.shape
    mat = np.zeros(shape + (3, 3))
    for c in range(3):
        for j in range(3):
            mat[..., c, j] = full.e[c, j]
    cond = float(np.max(np.linalg.cond(mat)))
    if not np.isfinite(cond) or cond > 1e8:
        raise SingularFrameError(f"frame condition number {cond:.3e} exceeds 1e8")
    vin = np.linalg.inv(mat)  # vin[..., i, C]
    v = np.zeros((3, 3) + shape)
    for i in range(3):
        for c in range(3):
            v[i, c] = vin[..., i, c]
    g = np.zeros((6,) + shape)
    for p, (i, j) in enumerate(SYM_PAIRS):
        comp = np.zeros(shape)
        for c in range(3):
            comp += v[i, c] * v[j, c]
        g[p] = comp
    return v, g


def make_record(s: State, bg: BackgroundState, params: FlrwParams, order: int) -> DiagnosticsRecord:
    nm = state_norms(s, order)
    energy = total_energy(s, params, order)
    full = unhat(s, bg)
    cons = evaluate_constraints(full, bg, params.lambda_)
    q = causal_character(full)
    return DiagnosticsRecord(
        t=s.t,
        hn_khat=nm.h_khat,
        hn_gammahat=nm.h_gammahat,
        hn_ehat=nm.h_ehat,
        hn_nhat=nm.h_nhat,
        hn_epsi=nm.h_epsi,
        hn_psihat=nm.h_psihat,
        sup_khat=nm.sup_khat,
        sup_gammahat=nm.sup_gammahat,
        sup_ehat=nm.sup_ehat,
        sup_nhat=nm.sup_nhat,
        sup_epsi=nm.sup_epsi,
        sup_psihat=nm.sup_psihat,
        energy=energy,
        ham_sup=cons.ham_sup,
        ham_l2=cons.ham_l2,
        mom_sup=cons.mom_sup,
        mom_l2=cons.mom_l2,
        q_min=float(np.min(q)),
        q_max=float(np.max(q)),
        sup_e0psi=float(np.max(np.abs(s.e0psi_hat))),
        sup_epsi_spatial=float(np.max(np.abs(s.epsi_hat))),
    )


def fit_decay_rate(
    times, values, window: tuple[float, float]
) -> tuple[float, float]:
    """Least-squares slope of log(value) against t inside the window.

    Returns (rate, r_squared).  Requires at least 5 in-window samples, all
    positive.  A bitwise-constant series yields rate exactly 0.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    lo, hi = window
    mask = (t >= lo - 1e-12) & (t <= hi + 1e-12)
    tm = t[mask]
    vm = v[mask]
    if tm.size < 5:
        raise InsufficientSamplesError(
            f"{tm.size} samples in window [{lo}, {hi}]; need at least 5"
        )
    if np.any(vm <= 0.0):
        raise NonPositiveValueError("decay-rate fit requires positive values")
    y = np.log(vm)
    tc = tm - tm.mean()
    yc = y - y.mean()
    denom = float(np.sum(tc * tc))
    slope = float(np.sum(tc * yc)) / denom
    resid = yc - slope * tc
    ss_res = float(np.sum(resid * resid))
    ss_tot = float(np.sum(yc * yc))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, r2


@dataclass(frozen=True)
class AsymptoticData:
    """Renormalized limits at future infinity and forcing coefficients.

    F_khat / F_e0psi hold the forcing fields evaluated from the extracted
    first-order limits (the defining expressions); F_khat_fit / F_e0psi_fit
    hold the same coefficients fitted directly from the trajectory, giving
    the independent cross-check.  window records the snapshot times used.
    """

    n_hat_inf: np.ndarray
    e_hat_inf: np.ndarray
    gamma_hat_inf: np.ndarray
    epsi_inf: np.ndarray
    F_khat: np.ndarray
    F_e0psi: np.ndarray
    k_hat_inf: np.ndarray
    e0psi_inf: np.ndarray
    g_inf: np.ndarray
    psi_inf: np.ndarray
    e_inf: np.ndarray
    F_khat_fit: np.ndarray
    F_e0psi_fit: np.ndarray
    window: tuple[float, float]


_GATE_COLUMNS = ("sup_nhat", "sup_khat", "sup_gammahat", "sup_ehat", "sup_epsi")
_GATE_FLOOR = 1e-13


def _gate_leading_fits(traj: Trajectory, window: tuple[float, float]) -> None:
    """Reject windows where the leading decays are not yet clean exponentials."""
    times = np.array(traj.times)
    for col in _GATE_COLUMNS:
        series = traj.column(col)
        lo, hi = window
        mask = (times >= lo - 1e-12) & (times <= hi + 1e-12)
        if not np.any(mask) or float(np.max(series[mask])) < _GATE_FLOOR:
            continue
        _, r2 = fit_decay_rate(times, series, window)
        if r2 < 0.99:
            raise WindowTooEarlyError(
                f"{col} decay fit has r^2 = {r2:.4f} < 0.99 in window {window}"
            )


def _richardson(wa: np.ndarray, wb: np.ndarray, ha: float, hb: float):
    coef = (wa - wb) / (ha - hb)
    return wb - coef * hb, coef


def _forcing_from_limits(
    grid: Grid,
    params: FlrwParams,
    gamma_hat_inf: np.ndarray,
    epsi_inf: np.ndarray,
    e_inf: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the forcing fields from the extracted first-order limits."""
    h = params.hubble
    shape = grid.shape
    gam = gamma_full(gamma_hat_inf)
    gdd = gam[0, 0] + gam[1, 1] + gam[2, 2]
    gmid = np.zeros((3,) + shape)
    for j in range(3):
        for c in range(3):
            gmid[j] += gam[c, j, c]
    dgam = [[[grid.coord_derivs(gam[i, j, c]) for c in range(3)] for j in range(3)] for i in range(3)]
    d_gmid = [grid.coord_derivs(gmid[j]) for j in range(3)]
    d_eps = [grid.coord_derivs(epsi_inf[i]) for i in range(3)]

    raw = np.zeros((3, 3) + shape)
    for i in range(3):
        for j in range(3):
            acc = np.zeros(shape)
            for c in range(3):
                for a in range(3):
                    acc += e_inf[c, a] * dgam[i][j][c][a]
            for a in range(3):
                acc -= e_inf[i, a] * d_gmid[j][a]
            for c in range(3):
                for d in range(3):
                    acc -= gam[c, i, d] * gam[d, j, c]
            for d in range(3):
                acc -= gam[i, j, d] * gdd[d]
            acc -= epsi_inf[i] * epsi_inf[j]
            raw[i, j] = acc
    trace = (raw[0, 0] + raw[1, 1] + raw[2, 2]) / 3.0
    fk = np.zeros((6,) + shape)
    for p, (i, j) in enumerate(SYM_PAIRS):
        comp = 0.5 * (raw[i, j] + raw[j, i])
        if i == j:
            comp = comp - trace
        fk[p] = comp / h

    fpsi = np.zeros(shape)
    for c in range(3):
        for a in range(3):
            fpsi += e_inf[c, a] * d_eps[c][a]
    for d in range(3):
        fpsi -= gdd[d] * epsi_inf[d]
    return fk, fpsi / h


def extract_asymptotics(
    traj: Trajectory,
    params: FlrwParams,
    window: tuple[float, float] | None = None,
) -> AsymptoticData:
    """Richardson-extrapolated limits at future infinity from stored snapshots.

    Uses the first and last snapshots inside the window (default [4/H, 8/H])
    for the widest weight separation.  Raises WindowTooEarlyError when fewer
    than 3 snapshots fall in the window, when the window starts before 3/H,
    or when the leading sup-norm decays fit worse than r^2 = 0.99.
    """
    h = params.hubble
    if window is None:
        window = (4.0 / h, 8.0 / h)
    lo, hi = window
    snaps = [s for s in traj.snapshots if lo - 1e-9 <= s.t <= hi + 1e-9]
    if len(snaps) < 3:
        raise WindowTooEarlyError(
            f"need at least 3 snapshots in window [{lo:.3g}, {hi:.3g}], have {len(snaps)}"
        )
    if snaps[0].t < 3.0 / h - 1e-9:
        raise WindowTooEarlyError(
            f"first usable snapshot at t = {snaps[0].t:.3g} is earlier than 3/H"
        )
    _gate_leading_fits(traj, window)

    grid = traj.grid
    sa, sb = snaps[0], snaps[-1]
    ta, tb = sa.t, sb.t
    g2a, g2b = math.exp(-2.0 * h * ta), math.exp(-2.0 * h * tb)
    g1a, g1b = math.exp(-h * ta), math.exp(-h * tb)
    w2a, w2b = math.exp(2.0 * h * ta), math.exp(2.0 * h * tb)
    w1a, w1b = math.exp(h * ta), math.exp(h * tb)

    n_hat_inf, _ = _richardson(w2a * sa.n_hat, w2b * sb.n_hat, g2a, g2b)
    e_hat_inf = np.zeros((3, 3) + grid.shape)
    gamma_hat_inf = np.zeros((3, 3) + grid.shape)
    for i in range(3):
        for j in range(3):
            e_hat_inf[i, j], _ = _richardson(
                w1a * sa.e_hat[i, j], w1b * sb.e_hat[i, j], g2a, g2b
            )
            gamma_hat_inf[i, j], _ = _richardson(
                w1a * sa.gamma_hat[i, j], w1b * sb.gamma_hat[i, j], g2a, g2b
            )
    epsi_inf = np.zeros((3,) + grid.shape)
    for i in range(3):
        epsi_inf[i], _ = _richardson(
            w1a * sa.epsi_hat[i], w1b * sb.epsi_hat[i], g2a, g2b
        )

    # weighted curvature carries forcing (constant) + free datum (e^{-Ht})
    f_khat_fit = np.zeros((6,) + grid.shape)
    k_hat_inf = np.zeros((6,) + grid.shape)
    for p in range(6):
        f_khat_fit[p], k_hat_inf[p] = _richardson(
            w2a * sa.k_hat[p], w2b * sb.k_hat[p], g1a, g1b
        )
    f_e0psi_fit, e0psi_inf = _richardson(
        w2a * sa.e0psi_hat, w2b * sb.e0psi_hat, g1a, g1b
    )

    bg_a = flrw_background(params, ta)
    bg_b = flrw_background(params, tb)
    _, g_a = reconstruct_metric(unhat(sa, bg_a))
    _, g_b = reconstruct_metric(unhat(sb, bg_b))
    g_inf = np.zeros((6,) + grid.shape)
    for p in range(6):
        g_inf[p], _ = _richardson(g2a * g_a[p], g2b * g_b[p], g2a, g2b)

    psi_inf, _ = _richardson(
        sa.psi_hat + bg_a.psi, sb.psi_hat + bg_b.psi, g2a, g2b
    )

    limits = flrw_limits(params)
    e_inf = e_hat_inf.copy()
    for i in range(3):
        e_inf[i, i] = e_inf[i, i] + 1.0 / limits.a_inf_coef

    f_khat, f_e0psi = _forcing_from_limits(grid, params, gamma_hat_inf, epsi_inf, e_inf)

    return AsymptoticData(
        n_hat_inf=n_hat_inf,
        e_hat_inf=e_hat_inf,
        gamma_hat_inf=gamma_hat_inf,
        epsi_inf=epsi_inf,
        F_khat=f_khat,
        F_e0psi=f_e0psi,
        k_hat_inf=k_hat_inf,
        e0psi_inf=e0psi_inf,
        g_inf=g_inf,
        psi_inf=psi_inf,
        e_inf=e_inf,
        F_khat_fit=f_khat_fit,
        F_e0psi_fit=f_e0psi_fit,
        window=(ta, tb),
    )


# ----------------------------------------------------------------------
# artifact writers
# ----------------------------------------------------------------------


def write_diagnostics_csv(traj: Trajectory, path) -> None:
    """Schema-stamped CSV; floats via repr for bitwise reproducibility."""
    lines = ["# schema 1", ",".join(CSV_COLUMNS)]
    for rec in traj.records:
        lines.append(",".join(repr(getattr(rec, c)) for c in CSV_COLUMNS))
    Path(path).write_text("\n".join(lines) + "\n")


def read_diagnostics_csv(path) -> dict[str, np.ndarray]:
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0].strip() != "# schema 1":
        raise ValueError(f"{path}: missing or unknown schema stamp")
    header = text[1].split(",")
    cols: dict[str, list[float]] = {name: [] for name in header}
    for line in text[2:]:
        for name, tok in zip(header, line.split(",")):
            cols[name].append(float(tok))
    return {name: np.array(vals) for name, vals in cols.items()}


def write_snapshots(traj: Trajectory, directory) -> list[str]:
    outdir = Path(directory)
    outdir.mkdir(parents=True, exist_ok=True)
    names = []
    for idx, snap in enumerate(traj.snapshots):
        name = f"snapshot_{idx:04d}.bin"
        from .state import write_state

        with open(outdir / name, "wb") as fh:
            write_state(fh, snap)
        names.append(name)
    return names


def _field_summary(grid: Grid, name: str, field: np.ndarray) -> str:
    if field.ndim == len(grid.shape):
        comps = field[None]
    else:
        comps = field.reshape((-1,) + grid.shape)
    sup = max(float(np.max(np.abs(c))) for c in comps)
    l2 = math.sqrt(sum(grid.l2_norm(c) ** 2 for c in comps))
    return f"{name:14s} sup {sup:.6e}   L2 {l2:.6e}"


def write_asymptotics_report(asym: AsymptoticData, grid: Grid, directory) -> None:
    """Text summary plus binary field blocks for the metric-level limits."""
    outdir = Path(directory)
    outdir.mkdir(parents=True, exist_ok=True)
    lines = [
        "asymptotics report",
        f"extraction snapshots: t = {asym.window[0]!r}, {asym.window[1]!r}",
        "",
        _field_summary(grid, "n_hat_inf", asym.n_hat_inf),
        _field_summary(grid, "e_hat_inf", asym.e_hat_inf),
        _field_summary(grid, "gamma_hat_inf", asym.gamma_hat_inf),
        _field_summary(grid, "epsi_inf", asym.epsi_inf),
        _field_summary(grid, "k_hat_inf", asym.k_hat_inf),
        _field_summary(grid, "e0psi_inf", asym.e0psi_inf),
        _field_summary(grid, "F_khat", asym.F_khat),
        _field_summary(grid, "F_khat_fit", asym.F_khat_fit),
        _field_summary(grid, "F_e0psi", asym.F_e0psi),
        _field_summary(grid, "F_e0psi_fit", asym.F_e0psi_fit),
        _field_summary(grid, "g_inf", asym.g_inf),
        _field_summary(grid, "psi_inf", asym.psi_inf),
    ]
    (outdir / "asymptotics.txt").write_text("\n".join(lines) + "\n")
    for fname, field in (
        ("g_inf.bin", asym.g_inf),
        ("psi_inf.bin", asym.psi_inf),
        ("f_khat.bin", asym.F_khat),
        ("f_e0psi.bin", asym.F_e0psi),
    ):
        comps = field[None] if field.ndim == len(grid.shape) else field.reshape((-1,) + grid.shape)
        with open(outdir / fname, "wb") as fh:
            for comp in comps:
                write_field(fh, comp)
