"""Energy, causal character, rate fits, CSV/snapshot IO, limit extraction."""

import dataclasses
import math

import numpy as np
import pytest

from torusgr.background import flrw_background, flrw_limits
from torusgr.diagnostics import (
    CSV_COLUMNS,
    DiagnosticsRecord,
    Trajectory,
    causal_character,
    energy_density,
    extract_asymptotics,
    fit_decay_rate,
    make_record,
    read_diagnostics_csv,
    reconstruct_metric,
    total_energy,
    write_diagnostics_csv,
    write_snapshots,
)
from torusgr.errors import (
    InsufficientSamplesError,
    NonPositiveValueError,
    SingularFrameError,
    WindowTooEarlyError,
)
from torusgr.grid import TWO_PI, Grid
from torusgr.state import read_state, sym_get, unhat, zero_state

from test_state import PARAMS
from test_evolution import perturbed_state


# ---------------------------------------------------------------------------
# pointwise diagnostics
# ---------------------------------------------------------------------------


def test_total_energy_hand_value():
    grid = Grid((16, 1, 1))
    t = 0.8
    s = zero_state(grid, t=t)
    assert total_energy(s, PARAMS, order=4) == 0.0
    s.e0psi_hat = s.e0psi_hat + 3.0
    s.epsi_hat[2] = s.epsi_hat[2] + 4.0
    s.n_hat = s.n_hat + 0.25
    # grouped scalar-gradient norm 5 (2pi)^{3/2}, lapse norm 0.25 (2pi)^{3/2},
    # with weights e^{2Ht} and e^{3Ht} respectively
    h = PARAMS.hubble
    want = math.exp(2 * h * t) * (25.0 + math.exp(h * t) * 0.0625) * TWO_PI**3
    assert total_energy(s, PARAMS, order=4) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("t", [0.0, 1.5])
def test_causal_character_background_value(t):
    grid = Grid((8, 1, 1))
    bg = flrw_background(PARAMS, t)
    full = unhat(zero_state(grid, t=t), bg)
    q = causal_character(full)
    assert np.max(np.abs(q - bg.phi**2)) < 1e-13
    assert np.max(np.abs(energy_density(full) - 0.5 * q)) == 0.0


def test_reconstruct_metric_background():
    grid = Grid((8, 1, 1))
    t = 1.0
    bg = flrw_background(PARAMS, t)
    full = unhat(zero_state(grid, t=t), bg)
    v, g = reconstruct_metric(full)
    for i in range(3):
        for j in range(3):
            want = bg.a if i == j else 0.0
            assert np.max(np.abs(v[i, j] - want)) < 1e-12
    for i in range(3):
        assert np.max(np.abs(sym_get(g, i, i) - bg.a**2)) < 1e-11
    assert np.max(np.abs(sym_get(g, 0, 1))) < 1e-12


def test_reconstruct_metric_rejects_singular_frame():
    grid = Grid((8, 1, 1))
    t = 0.0
    bg = flrw_background(PARAMS, t)
    s = zero_state(grid, t=t)
    s.e_hat[2, 2] = s.e_hat[2, 2] - bg.frame_coef + 1e-10
    full = unhat(s, bg)
    with pytest.raises(SingularFrameError):
        reconstruct_metric(full)


def test_make_record_matches_direct_measurements():
    grid = Grid((16, 1, 1))
    s = perturbed_state(grid)
    bg = flrw_background(PARAMS, 0.0)
    rec = make_record(s, bg, PARAMS, order=4)
    assert rec.t == 0.0
    assert rec.sup_e0psi == float(np.max(np.abs(s.e0psi_hat)))
    assert rec.sup_epsi_spatial == float(np.max(np.abs(s.epsi_hat)))
    q = causal_character(unhat(s, bg))
    assert rec.q_min == float(np.min(q))
    assert rec.q_max == float(np.max(q))
    assert rec.energy == total_energy(s, PARAMS, order=4)


# ---------------------------------------------------------------------------
# decay-rate fitting
# ---------------------------------------------------------------------------


def test_fit_decay_rate_exact_exponential():
    t = np.linspace(0.0, 5.0, 26)
    v = 3.0 * np.exp(-1.7 * t)
    rate, r2 = fit_decay_rate(t, v, (1.0, 4.0))
    assert rate == pytest.approx(-1.7, rel=1e-12)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_decay_rate_constant_series():
    t = np.linspace(0.0, 2.0, 9)
    v = np.full_like(t, 0.125)
    rate, r2 = fit_decay_rate(t, v, (0.0, 2.0))
    assert rate == 0.0
    assert r2 == 1.0


def test_fit_decay_rate_error_cases():
    t = np.linspace(0.0, 1.0, 4)
    v = np.exp(-t)
    with pytest.raises(InsufficientSamplesError):
        fit_decay_rate(t, v, (0.0, 1.0))
    t5 = np.linspace(0.0, 1.0, 5)
    v5 = np.exp(-t5)
    v5[2] = 0.0
    with pytest.raises(NonPositiveValueError):
        fit_decay_rate(t5, v5, (0.0, 1.0))


# ---------------------------------------------------------------------------
# artifact IO
# ---------------------------------------------------------------------------


def small_trajectory():
    grid = Grid((16, 1, 1))
    from torusgr.evolution import EvolutionConfig, evolve

    s0 = perturbed_state(grid)
    cfg = EvolutionConfig(t_end=0.05, dt_override=0.005, output_stride=2)
    return evolve(s0, PARAMS, cfg, snapshot_times=(0.0, 0.05))


def test_csv_roundtrip_bitwise(tmp_path):
    traj = small_trajectory()
    path = tmp_path / "diag.csv"
    write_diagnostics_csv(traj, path)
    cols = read_diagnostics_csv(path)
    assert set(cols) == set(CSV_COLUMNS)
    for name in CSV_COLUMNS:
        direct = traj.column(name)
        assert np.array_equal(cols[name], direct), name


def test_csv_schema_guard(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("t,energy\n0.0,1.0\n")
    with pytest.raises(ValueError):
        read_diagnostics_csv(path)


def test_write_snapshots_roundtrip(tmp_path):
    traj = small_trajectory()
    names = write_snapshots(traj, tmp_path)
    assert names == ["snapshot_0000.bin", "snapshot_0001.bin"]
    for name, snap in zip(names, traj.snapshots):
        with open(tmp_path / name, "rb") as fh:
            back = read_state(fh)
        assert back.t == snap.t
        for (cname, a), (_, b) in zip(snap.components(), back.components()):
            assert np.array_equal(a, b), cname


# ---------------------------------------------------------------------------
# future-infinity extraction on a planted two-term decay
# ---------------------------------------------------------------------------


def _blank_record(t: float, **overrides) -> DiagnosticsRecord:
    vals = {f.name: 0.0 for f in dataclasses.fields(DiagnosticsRecord)}
    vals["t"] = t
    vals.update(overrides)
    return DiagnosticsRecord(**vals)


def planted_trajectory(grid):
    """Snapshots following W = limit + coef * gap exactly, so the two-point
    extrapolation must recover the planted limits to round-off."""
    x = grid.coords(0)
    h = PARAMS.hubble
    plant = {
        "n_inf": 0.01 * (1.0 + 0.3 * np.sin(x)),
        "n_coef": 0.005 * np.cos(x),
        "e_inf": 0.002 * np.sin(x),
        "gam_inf": 0.004 * np.cos(2 * x),
        "eps_inf": 0.003 * np.sin(2 * x),
        "f_k": 0.003 * np.cos(x),
        "k_inf": 0.004 * np.sin(x),
        "f_psi": 0.006 * np.sin(x),
        "e0_inf": 0.002 * np.cos(x),
        "psi_lim": 0.7 + 0.01 * np.sin(x),
        "psi_coef": 0.02 * np.cos(x),
    }
    times = list(np.linspace(4.0, 8.0, 9))
    snaps = []
    records = []
    for t in times:
        s = zero_state(grid, t=t)
        bg = flrw_background(PARAMS, t)
        g1, g2, g3 = math.exp(-h * t), math.exp(-2 * h * t), math.exp(-3 * h * t)
        s.n_hat = g2 * (plant["n_inf"] + plant["n_coef"] * g2)
        s.e_hat[0, 1] = g1 * (plant["e_inf"] + 0.001 * g2)
        s.gamma_hat[1, 0] = g1 * (plant["gam_inf"] - 0.002 * g2)
        s.epsi_hat[0] = g1 * (plant["eps_inf"] + 0.0015 * g2)
        s.k_hat[1] = g2 * plant["f_k"] + g3 * plant["k_inf"]
        s.e0psi_hat = g2 * plant["f_psi"] + g3 * plant["e0_inf"]
        s.psi_hat = (plant["psi_lim"] - bg.psi) + plant["psi_coef"] * g2
        snaps.append(s)
        records.append(
            _blank_record(
                t,
                sup_nhat=float(np.max(np.abs(s.n_hat))),
                sup_khat=float(np.max(np.abs(s.k_hat))),
                sup_ehat=float(np.max(np.abs(s.e_hat))),
                sup_gammahat=float(np.max(np.abs(s.gamma_hat))),
                sup_epsi=float(np.max(np.abs(s.epsi_hat))),
            )
        )
    traj = Trajectory(
        params=PARAMS,
        grid=grid,
        n_sobolev=4,
        times=times,
        records=records,
        snapshots=snaps,
    )
    return traj, plant


def test_extraction_recovers_planted_limits():
    grid = Grid((8, 1, 1))
    traj, plant = planted_trajectory(grid)
    asym = extract_asymptotics(traj, PARAMS)
    assert asym.window == (4.0, 8.0)

    def close(a, b, tol=1e-9):
        scale = max(float(np.max(np.abs(b))), 1e-12)
        assert float(np.max(np.abs(a - b))) < tol * scale

    close(asym.n_hat_inf, plant["n_inf"])
    close(asym.e_hat_inf[0, 1], plant["e_inf"])
    close(asym.gamma_hat_inf[1, 0], plant["gam_inf"])
    close(asym.epsi_inf[0], plant["eps_inf"])
    close(asym.F_khat_fit[1], plant["f_k"])
    close(asym.k_hat_inf[1], plant["k_inf"])
    close(asym.F_e0psi_fit, plant["f_psi"])
    close(asym.e0psi_inf, plant["e0_inf"])
    close(asym.psi_inf, plant["psi_lim"])
    # the rescaled metric limit is the inverse-square of the limiting
    # rescaled frame: background diagonal plus the planted deviation
    lim = flrw_limits(PARAMS)
    mat = np.zeros(grid.shape + (3, 3))
    for i in range(3):
        mat[..., i, i] = 1.0 / lim.a_inf_coef
    mat[..., 0, 1] = plant["e_inf"]
    vin = np.linalg.inv(mat)
    from torusgr.state import SYM_PAIRS

    for p, (i, j) in enumerate(SYM_PAIRS):
        want = np.zeros(grid.shape)
        for c in range(3):
            want += vin[..., i, c] * vin[..., j, c]
        close(asym.g_inf[p], want, 1e-9)


def test_extraction_window_guards():
    grid = Grid((8, 1, 1))
    traj, _ = planted_trajectory(grid)
    # too few snapshots in a narrow window
    with pytest.raises(WindowTooEarlyError):
        extract_asymptotics(traj, PARAMS, window=(7.9, 8.0))
    # window opening before 3/H is refused outright
    for s in traj.snapshots:
        s.t = s.t - 2.0
    early = Trajectory(
        params=PARAMS,
        grid=grid,
        n_sobolev=4,
        times=[t - 2.0 for t in traj.times],
        records=[dataclasses.replace(r, t=r.t - 2.0) for r in traj.records],
        snapshots=traj.snapshots,
    )
    with pytest.raises(WindowTooEarlyError):
        extract_asymptotics(early, PARAMS, window=(2.0, 6.0))


def test_extraction_gate_rejects_ragged_decay():
    grid = Grid((8, 1, 1))
    traj, _ = planted_trajectory(grid)
    # corrupt the lapse sup series so its log is far from linear
    ragged = [
        dataclasses.replace(r, sup_nhat=(1e-3 if i % 2 == 0 else 1e-6))
        for i, r in enumerate(traj.records)
    ]
    bad = Trajectory(
        params=PARAMS,
        grid=grid,
        n_sobolev=4,
        times=traj.times,
        records=ragged,
        snapshots=traj.snapshots,
    )
    with pytest.raises(WindowTooEarlyError):
        extract_asymptotics(bad, PARAMS)
