"""Structured run configuration and its TOML loader.

The file format mirrors the run-config fields one table per block::

    [flrw]
    lambda = 3.0              # cosmological constant (> 0)
    a0 = 1.0                  # initial scale factor
    psi0 = 0.0                # initial scalar value
    phi0 = 3.0                # initial scalar momentum
    alpha_convention = "constraint_consistent"   # or "unhalved_kinetic"

    [grid]
    n_points = [64, 1, 1]     # per-axis points; 1 marks an inactive axis

    [recipe]
    kind = "conformal_perturbation"   # or exact_flrw / homogeneous_anisotropic
    amplitude = 1e-3
    modes = [{k = [1, 0, 0], coef = 1.0, phase = 0.0}]
    random_phases = false
    seed = 0
    # kappa1 / kappa2 only for homogeneous_anisotropic

    [evolution]
    dt_cfl_factor = 0.25
    t_end = 8.0
    symmetrize = false
    n_sobolev = 4
    output_stride = 4
    implicit_lapse = false
    freeze_lapse = false
    # dt_override = 0.01      # optional fixed step (bypasses the CFL bound)

    [output]
    directory = "out"
    # snapshot_times = [0.0, 2.0, ...]   # default: 0 and 2/H..8/H step 0.5/H

    [acceptance]              # which pass/fail flags run.json reports
    decay_rates = true
    energy_bound = true
    constraints = true
    causal_flip = true
    forcing_consistency = true

Unknown keys anywhere are hard errors: silent typos in gauge or physics
parameters are the dominant failure mode for this kind of code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - environment dependent
    import tomli as tomllib

from .background import ALPHA_CONVENTIONS, FlrwParams
from .errors import ConfigError
from .evolution import EvolutionConfig
from .initial_data import DataRecipe, ModeSpec

__all__ = [
    "AcceptanceToggles",
    "RunConfig",
    "load_config",
    "config_from_dict",
    "default_snapshot_times",
]

_REQUIRED = object()


@dataclass(frozen=True)
class AcceptanceToggles:
    decay_rates: bool = True
    energy_bound: bool = True
    constraints: bool = True
    causal_flip: bool = True
    forcing_consistency: bool = True


@dataclass(frozen=True)
class RunConfig:
    params: FlrwParams
    grid_points: tuple[int, int, int]
    recipe: DataRecipe
    evolution: EvolutionConfig
    output_dir: str = "out"
    snapshot_times: tuple[float, ...] | None = None  # None -> default ladder
    acceptance: AcceptanceToggles = field(default_factory=AcceptanceToggles)

    def jsonable(self) -> dict:
        return {
            "flrw": {
                "lambda": self.params.lambda_,
                "a0": self.params.a0,
                "psi0": self.params.psi0,
                "phi0": self.params.phi0,
                "alpha_convention": self.params.alpha_convention,
            },
            "grid": {"n_points": list(self.grid_points)},
            "recipe": {
                "kind": self.recipe.kind,
                "amplitude": self.recipe.amplitude,
                "modes": [
                    {"k": list(m.wavevector), "coef": m.coef, "phase": m.phase}
                    for m in self.recipe.modes
                ],
                "kappa1": self.recipe.kappa1,
                "kappa2": self.recipe.kappa2,
                "random_phases": self.recipe.random_phases,
                "seed": self.recipe.seed,
            },
            "evolution": {
                "dt_cfl_factor": self.evolution.dt_cfl_factor,
                "t_end": self.evolution.t_end,
                "symmetrize": self.evolution.symmetrize,
                "n_sobolev": self.evolution.n_sobolev,
                "output_stride": self.evolution.output_stride,
                "implicit_lapse": self.evolution.implicit_lapse,
                "dt_override": self.evolution.dt_override,
                "freeze_lapse": self.evolution.freeze_lapse,
            },
            "output": {
                "directory": self.output_dir,
                "snapshot_times": None
                if self.snapshot_times is None
                else list(self.snapshot_times),
            },
            "acceptance": {
                "decay_rates": self.acceptance.decay_rates,
                "energy_bound": self.acceptance.energy_bound,
                "constraints": self.acceptance.constraints,
                "causal_flip": self.acceptance.causal_flip,
                "forcing_consistency": self.acceptance.forcing_consistency,
            },
        }


def default_snapshot_times(params: FlrwParams, t_end: float) -> tuple[float, ...]:
    """t = 0 plus the ladder 2/H .. 8/H in steps of 0.5/H, clipped to t_end."""
    h = params.hubble
    times = [0.0]
    for k in range(13):
        t = (2.0 + 0.5 * k) / h
        if t <= t_end + 1e-12:
            times.append(t)
    return tuple(times)


def _expect_table(data: dict, name: str, source: str) -> dict:
    tab = data.get(name, {})
    if not isinstance(tab, dict):
        raise ConfigError(f"{source}: [{name}] must be a table")
    return dict(tab)


def _pop(table: dict, tpath: str, key: str, kind: str, default=_REQUIRED):
    if key not in table:
        if default is _REQUIRED:
            raise ConfigError(f"{tpath}.{key}: required key missing")
        return default
    val = table.pop(key)
    if kind == "float":
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ConfigError(f"{tpath}.{key}: expected a number, got {val!r}")
        return float(val)
    if kind == "int":
        if isinstance(val, bool) or not isinstance(val, int):
            raise ConfigError(f"{tpath}.{key}: expected an integer, got {val!r}")
        return int(val)
    if kind == "bool":
        if not isinstance(val, bool):
            raise ConfigError(f"{tpath}.{key}: expected true/false, got {val!r}")
        return val
    if kind == "str":
        if not isinstance(val, str):
            raise ConfigError(f"{tpath}.{key}: expected a string, got {val!r}")
        return val
    if kind == "list":
        if not isinstance(val, list):
            raise ConfigError(f"{tpath}.{key}: expected a list, got {val!r}")
        return val
    raise AssertionError(kind)


def _reject_unknown(table: dict, tpath: str) -> None:
    if table:
        keys = ", ".join(sorted(table))
        raise ConfigError(f"{tpath}: unknown key(s): {keys}")


def config_from_dict(data: dict, source: str = "<config>") -> RunConfig:
    unknown = set(data) - {"flrw", "grid", "recipe", "evolution", "output", "acceptance"}
    if unknown:
        raise ConfigError(f"{source}: unknown table(s): {', '.join(sorted(unknown))}")

    tab = _expect_table(data, "flrw", source)
    alpha_conv = _pop(tab, "flrw", "alpha_convention", "str", ALPHA_CONVENTIONS[0])
    try:
        params = FlrwParams(
            lambda_=_pop(tab, "flrw", "lambda", "float"),
            a0=_pop(tab, "flrw", "a0", "float", 1.0),
            psi0=_pop(tab, "flrw", "psi0", "float", 0.0),
            phi0=_pop(tab, "flrw", "phi0", "float", 0.0),
            alpha_convention=alpha_conv,
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: [flrw]: {exc}") from exc
    _reject_unknown(tab, "flrw")

    tab = _expect_table(data, "grid", source)
    raw_n = _pop(tab, "grid", "n_points", "list", [64, 1, 1])
    if not 1 <= len(raw_n) <= 3:
        raise ConfigError("grid.n_points: expected 1 to 3 entries")
    npts = []
    for v in raw_n:
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ConfigError(f"grid.n_points: entries must be positive integers, got {v!r}")
        npts.append(v)
    while len(npts) < 3:
        npts.append(1)
    _reject_unknown(tab, "grid")

    tab = _expect_table(data, "recipe", source)
    kind = _pop(tab, "recipe", "kind", "str", "exact_flrw")
    amplitude = _pop(tab, "recipe", "amplitude", "float", 0.0)
    raw_modes = _pop(tab, "recipe", "modes", "list", None)
    modes: tuple[ModeSpec, ...]
    if raw_modes is None:
        modes = (ModeSpec((1, 0, 0)),)
    else:
        built = []
        for idx, m in enumerate(raw_modes):
            if not isinstance(m, dict):
                raise ConfigError(f"recipe.modes[{idx}]: expected a table")
            m = dict(m)
            kvec = _pop(m, f"recipe.modes[{idx}]", "k", "list")
            if len(kvec) != 3 or any(isinstance(v, bool) or not isinstance(v, int) for v in kvec):
                raise ConfigError(f"recipe.modes[{idx}].k: expected three integers")
            coef = _pop(m, f"recipe.modes[{idx}]", "coef", "float", 1.0)
            phase = _pop(m, f"recipe.modes[{idx}]", "phase", "float", 0.0)
            _reject_unknown(m, f"recipe.modes[{idx}]")
            built.append(ModeSpec(tuple(kvec), coef, phase))
        modes = tuple(built)
    kappa1 = _pop(tab, "recipe", "kappa1", "float", None)
    kappa2 = _pop(tab, "recipe", "kappa2", "float", None)
    random_phases = _pop(tab, "recipe", "random_phases", "bool", False)
    seed = _pop(tab, "recipe", "seed", "int", 0)
    _reject_unknown(tab, "recipe")
    try:
        recipe = DataRecipe(
            kind=kind,
            amplitude=amplitude,
            modes=modes,
            kappa1=kappa1,
            kappa2=kappa2,
            random_phases=random_phases,
            seed=seed,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}: [recipe]: {exc}") from exc

    tab = _expect_table(data, "evolution", source)
    try:
        evolution = EvolutionConfig(
            dt_cfl_factor=_pop(tab, "evolution", "dt_cfl_factor", "float", 0.25),
            t_end=_pop(tab, "evolution", "t_end", "float", 8.0),
            symmetrize=_pop(tab, "evolution", "symmetrize", "bool", False),
            n_sobolev=_pop(tab, "evolution", "n_sobolev", "int", 4),
            output_stride=_pop(tab, "evolution", "output_stride", "int", 4),
            implicit_lapse=_pop(tab, "evolution", "implicit_lapse", "bool", False),
            dt_override=_pop(tab, "evolution", "dt_override", "float", None),
            freeze_lapse=_pop(tab, "evolution", "freeze_lapse", "bool", False),
        )
    except ConfigError:
        raise
    _reject_unknown(tab, "evolution")

    tab = _expect_table(data, "output", source)
    output_dir = _pop(tab, "output", "directory", "str", "out")
    raw_times = _pop(tab, "output", "snapshot_times", "list", None)
    snapshot_times: tuple[float, ...] | None = None
    if raw_times is not None:
        vals = []
        for v in raw_times:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError("output.snapshot_times: entries must be numbers")
            vals.append(float(v))
        snapshot_times = tuple(sorted(vals))
    _reject_unknown(tab, "output")

    tab = _expect_table(data, "acceptance", source)
    acceptance = AcceptanceToggles(
        decay_rates=_pop(tab, "acceptance", "decay_rates", "bool", True),
        energy_bound=_pop(tab, "acceptance", "energy_bound", "bool", True),
        constraints=_pop(tab, "acceptance", "constraints", "bool", True),
        causal_flip=_pop(tab, "acceptance", "causal_flip", "bool", True),
        forcing_consistency=_pop(tab, "acceptance", "forcing_consistency", "bool", True),
    )
    _reject_unknown(tab, "acceptance")

    return RunConfig(
        params=params,
        grid_points=tuple(npts),
        recipe=recipe,
        evolution=evolution,
        output_dir=output_dir,
        snapshot_times=snapshot_times,
        acceptance=acceptance,
    )


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        # TOMLDecodeError messages carry line/column positions
        raise ConfigError(f"{p}: {exc}") from exc
    return config_from_dict(data, source=str(p))
