"""Containers for the evolved variables and hatted <-> full conversions.

The evolved state holds the *hatted* variables — differences from the exact
homogeneous background:

    n_hat      = n - 1                      lapse perturbation
    e_hat      = e_I^i - delta_I^i / a      frame perturbation   (3x3)
    k_hat      = k_IJ - (trk/3) delta_IJ    trace-free curvature (6 stored)
    gamma_hat  = gamma_IJB                  connection (I x (J<B) pairs)
    e0psi_hat  = e0(psi) - phi_bg           scalar momentum perturbation
    epsi_hat   = e_I(psi)                   scalar frame gradient (3)
    psi_hat    = psi - psi_bg               scalar value perturbation

plus the time t.  The trace of the full curvature is never evolved: the
time gauge ties it to the lapse, trk = trk_bg - n_hat, so `unhat`
reconstructs the full 3x3 curvature from the 6 trace-free components and
the lapse.  gamma is antisymmetric in its last two indices and is stored
as 9 independent fields: first index I times the ordered pairs
(0,1), (0,2), (1,2).

Snapshot layout (binary, shared with the harness): one ASCII line
``state fields 30 t <repr(t)>`` then 30 field blocks in the fixed order

    n_hat;
    e_hat rows I=0..2, column i=0..2 within each row;
    k_hat components (0,0),(0,1),(0,2),(1,1),(1,2),(2,2);
    gamma_hat I=0..2, pair (0,1),(0,2),(1,2) within each I;
    e0psi_hat; epsi_hat I=0..2; psi_hat

each block in the grid module's field format.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import BinaryIO

import numpy as np

from .background import BackgroundState
from .errors import LapseNonPositiveError, NonFiniteFieldError
from .grid import Grid, read_field, write_field

# symmetric 3x3 storage order and lookup (both index orders)
SYM_PAIRS: tuple[tuple[int, int], ...] = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
SYM_INDEX: dict[tuple[int, int], int] = {}
for _p, (_i, _j) in enumerate(SYM_PAIRS):
    SYM_INDEX[(_i, _j)] = _p
    SYM_INDEX[(_j, _i)] = _p

# antisymmetric pair order for the last two gamma indices
GAMMA_PAIRS: tuple[tuple[int, int], ...] = ((0, 1), (0, 2), (1, 2))
GAMMA_PAIR_INDEX: dict[tuple[int, int], int] = {(j, b): p for p, (j, b) in enumerate(GAMMA_PAIRS)}

STATE_FIELD_COUNT = 30


@dataclass
class State:
    """All hatted variables on one time slice."""

    t: float
    grid: Grid
    n_hat: np.ndarray            # (n1,n2,n3)
    e_hat: np.ndarray            # (3,3,n1,n2,n3), [I, i]
    k_hat: np.ndarray            # (6,n1,n2,n3), SYM_PAIRS order
    gamma_hat: np.ndarray        # (3,3,n1,n2,n3), [I, pair]
    e0psi_hat: np.ndarray        # (n1,n2,n3)
    epsi_hat: np.ndarray         # (3,n1,n2,n3)
    psi_hat: np.ndarray          # (n1,n2,n3)

    def copy(self) -> "State":
        return State(
            t=self.t,
            grid=self.grid,
            n_hat=self.n_hat.copy(),
            e_hat=self.e_hat.copy(),
            k_hat=self.k_hat.copy(),
            gamma_hat=self.gamma_hat.copy(),
            e0psi_hat=self.e0psi_hat.copy(),
            epsi_hat=self.epsi_hat.copy(),
            psi_hat=self.psi_hat.copy(),
        )

    def components(self):
        """Yield (name, array-view) in the documented snapshot order."""
        yield "n_hat", self.n_hat
        for i_frame in range(3):
            for i_coord in range(3):
                yield f"e_hat[{i_frame},{i_coord}]", self.e_hat[i_frame, i_coord]
        for p, (i, j) in enumerate(SYM_PAIRS):
            yield f"k_hat[{i},{j}]", self.k_hat[p]
        for i_frame in range(3):
            for p, (j, b) in enumerate(GAMMA_PAIRS):
                yield f"gamma_hat[{i_frame},{j},{b}]", self.gamma_hat[i_frame, p]
        yield "e0psi_hat", self.e0psi_hat
        for i_frame in range(3):
            yield f"epsi_hat[{i_frame}]", self.epsi_hat[i_frame]
        yield "psi_hat", self.psi_hat


@dataclass
class FullVars:
    """Un-hatted variables on one slice; gamma expanded to full (3,3,3)."""

    t: float
    grid: Grid
    n: np.ndarray                # lapse
    e: np.ndarray                # (3,3,...) frame e_I^i
    k: np.ndarray                # (3,3,...) full symmetric curvature, with trace
    gamma: np.ndarray            # (3,3,3,...) antisymmetric in last two indices
    e0psi: np.ndarray
    epsi: np.ndarray             # (3,...)
    psi: np.ndarray
    trk: np.ndarray              # trace of k: trk_bg - n_hat pointwise


def zero_state(grid: Grid, t: float = 0.0) -> State:
    shp = grid.shape
    return State(
        t=t,
        grid=grid,
        n_hat=np.zeros(shp),
        e_hat=np.zeros((3, 3) + shp),
        k_hat=np.zeros((6,) + shp),
        gamma_hat=np.zeros((3, 3) + shp),
        e0psi_hat=np.zeros(shp),
        epsi_hat=np.zeros((3,) + shp),
        psi_hat=np.zeros(shp),
    )


def sym_get(packed: np.ndarray, i: int, j: int) -> np.ndarray:
    """Component (i,j) of a 6-packed symmetric object (a view)."""
    return packed[SYM_INDEX[(i, j)]]


def sym_full(packed: np.ndarray) -> np.ndarray:
    """Expand 6-packed symmetric storage to a full (3,3,...) array."""
    shp = packed.shape[1:]
    out = np.empty((3, 3) + shp)
    for i in range(3):
        for j in range(3):
            out[i, j] = packed[SYM_INDEX[(i, j)]]
    return out


def sym_pack(full: np.ndarray) -> np.ndarray:
    """Pack a (3,3,...) symmetric array to 6 components (upper triangle)."""
    shp = full.shape[2:]
    out = np.empty((6,) + shp)
    for p, (i, j) in enumerate(SYM_PAIRS):
        out[p] = full[i, j]
    return out


def sym_trace(packed: np.ndarray) -> np.ndarray:
    return packed[0] + packed[3] + packed[5]


def sym_project_tracefree(packed: np.ndarray) -> np.ndarray:
    """Remove the trace part from 6-packed symmetric storage."""
    third = sym_trace(packed) / 3.0
    out = packed.copy()
    for p in (0, 3, 5):  # diagonal slots
        out[p] -= third
    return out


def gamma_get(stored: np.ndarray, i: int, j: int, b: int) -> np.ndarray:
    """gamma_{ijb} from packed storage, honoring antisymmetry in (j,b)."""
    if j == b:
        return np.zeros(stored.shape[2:])
    if j < b:
        return stored[i, GAMMA_PAIR_INDEX[(j, b)]]
    return -stored[i, GAMMA_PAIR_INDEX[(b, j)]]


def gamma_full(stored: np.ndarray) -> np.ndarray:
    """Expand packed gamma to a full (3,3,3,...) antisymmetric array."""
    shp = stored.shape[2:]
    out = np.zeros((3, 3, 3) + shp)
    for i in range(3):
        for p, (j, b) in enumerate(GAMMA_PAIRS):
            out[i, j, b] = stored[i, p]
            out[i, b, j] = -stored[i, p]
    return out


def gamma_pack(full: np.ndarray) -> np.ndarray:
    """Pack a full (3,3,3,...) array antisymmetric in (J,B) to 9 components."""
    shp = full.shape[3:]
    out = np.empty((3, 3) + shp)
    for i in range(3):
        for p, (j, b) in enumerate(GAMMA_PAIRS):
            out[i, p] = full[i, j, b]
    return out


def unhat(s: State, bg: BackgroundState) -> FullVars:
    """Reconstruct full variables from hatted ones and the background.

    The curvature trace comes from the time gauge: trk = trk_bg - n_hat.
    Raises LapseNonPositiveError if 1 + n_hat is not positive everywhere.
    """
    grid = s.grid
    n = 1.0 + s.n_hat
    min_lapse = float(np.min(n))
    if min_lapse <= 0.0:
        raise LapseNonPositiveError(min_lapse, t=s.t)
    trk = bg.trk - s.n_hat
    third = trk / 3.0
    k = sym_full(s.k_hat)
    for i in range(3):
        k[i, i] = k[i, i] + third
    e = s.e_hat.copy()
    for i in range(3):
        e[i, i] = e[i, i] + bg.frame_coef
    return FullVars(
        t=s.t,
        grid=grid,
        n=n,
        e=e,
        k=k,
        gamma=gamma_full(s.gamma_hat),
        e0psi=s.e0psi_hat + bg.phi,
        epsi=s.epsi_hat.copy(),
        psi=s.psi_hat + bg.psi,
        trk=trk,
    )


def hat(full: FullVars, bg: BackgroundState) -> State:
    """Inverse of unhat (uses the gauge relation to remove the k trace)."""
    grid = full.grid
    third = full.trk / 3.0
    k_hat = sym_pack(full.k)
    for p in (0, 3, 5):
        k_hat[p] = k_hat[p] - third
    e_hat = full.e.copy()
    for i in range(3):
        e_hat[i, i] = e_hat[i, i] - bg.frame_coef
    return State(
        t=full.t,
        grid=grid,
        n_hat=full.n - 1.0,
        e_hat=e_hat,
        k_hat=k_hat,
        gamma_hat=gamma_pack(full.gamma),
        e0psi_hat=full.e0psi - bg.phi,
        epsi_hat=full.epsi.copy(),
        psi_hat=full.psi - bg.psi,
    )


# ---------------------------------------------------------------- bulk norms

@dataclass(frozen=True)
class StateNorms:
    """Group norms: Sobolev H^N with full index sums, and C^0 sups."""

    h_khat: float
    h_gammahat: float
    h_ehat: float
    h_nhat: float
    h_epsi: float          # e0psi_hat together with the three epsi_hat
    h_psihat: float
    sup_khat: float
    sup_gammahat: float
    sup_ehat: float
    sup_nhat: float
    sup_epsi: float
    sup_psihat: float


def state_norms(s: State, order: int) -> StateNorms:
    """Group H^order and C^0 norms.

    Sobolev group norms sum squared component norms over the *full* index
    ranges: off-diagonal k_hat components count twice ((I,J) and (J,I)),
    each stored gamma_hat pair counts twice ((J,B) and (B,J)).  Sup norms
    take the max over stored components (multiplicity cannot change a max).
    """
    g = s.grid

    def sob(f: np.ndarray) -> float:
        return g.sobolev_norm(f, order)

    k_sq = 0.0
    for p, (i, j) in enumerate(SYM_PAIRS):
        mult = 1.0 if i == j else 2.0
        k_sq += mult * sob(s.k_hat[p]) ** 2
    gamma_sq = 0.0
    for i in range(3):
        for p in range(3):
            gamma_sq += 2.0 * sob(s.gamma_hat[i, p]) ** 2
    e_sq = 0.0
    for i in range(3):
        for j in range(3):
            e_sq += sob(s.e_hat[i, j]) ** 2
    epsi_sq = sob(s.e0psi_hat) ** 2
    for i in range(3):
        epsi_sq += sob(s.epsi_hat[i]) ** 2

    return StateNorms(
        h_khat=float(np.sqrt(k_sq)),
        h_gammahat=float(np.sqrt(gamma_sq)),
        h_ehat=float(np.sqrt(e_sq)),
        h_nhat=sob(s.n_hat),
        h_epsi=float(np.sqrt(epsi_sq)),
        h_psihat=sob(s.psi_hat),
        sup_khat=float(np.max(np.abs(s.k_hat))),
        sup_gammahat=float(np.max(np.abs(s.gamma_hat))),
        sup_ehat=float(np.max(np.abs(s.e_hat))),
        sup_nhat=float(np.max(np.abs(s.n_hat))),
        sup_epsi=max(float(np.max(np.abs(s.e0psi_hat))), float(np.max(np.abs(s.epsi_hat)))),
        sup_psihat=float(np.max(np.abs(s.psi_hat))),
    )


# ------------------------------------------------------------- snapshot I/O

def write_state(fh: BinaryIO, s: State) -> None:
    """Serialize a State: header line then 30 field blocks in fixed order."""
    fh.write(f"state fields {STATE_FIELD_COUNT} t {s.t!r}\n".encode("ascii"))
    for _name, values in s.components():
        write_field(fh, values)


def read_state(fh: BinaryIO, grid: Grid | None = None) -> State:
    """Read a State written by write_state; builds the Grid if not supplied."""
    header = fh.readline().decode("ascii").split()
    if len(header) != 5 or header[0] != "state" or header[1] != "fields" or header[3] != "t":
        raise ValueError(f"malformed state header: {header!r}")
    count = int(header[2])
    if count != STATE_FIELD_COUNT:
        raise ValueError(f"expected {STATE_FIELD_COUNT} fields, header says {count}")
    t = float(header[4])
    fields = [read_field(fh) for _ in range(count)]
    shp = fields[0].shape
    if grid is None:
        grid = Grid(shp)
    elif grid.shape != shp:
        raise ValueError(f"snapshot dims {shp} do not match grid {grid.shape}")
    for f in fields:
        if f.shape != shp:
            raise ValueError("inconsistent field dims inside state snapshot")
    it = iter(fields)
    n_hat = next(it)
    e_hat = np.stack([next(it) for _ in range(9)]).reshape((3, 3) + shp)
    k_hat = np.stack([next(it) for _ in range(6)])
    gamma_hat = np.stack([next(it) for _ in range(9)]).reshape((3, 3) + shp)
    e0psi_hat = next(it)
    epsi_hat = np.stack([next(it) for _ in range(3)])
    psi_hat = next(it)
    return State(
        t=t,
        grid=grid,
        n_hat=n_hat,
        e_hat=e_hat,
        k_hat=k_hat,
        gamma_hat=gamma_hat,
        e0psi_hat=e0psi_hat,
        epsi_hat=epsi_hat,
        psi_hat=psi_hat,
    )


def check_state_finite(s: State, where: str = "state") -> None:
    for name, values in s.components():
        if not np.all(np.isfinite(values)):
            raise NonFiniteFieldError(f"{where}:{name}", t=s.t)


def state_linear_combination(coeffs_states: list[tuple[float, State]], t: float) -> State:
    """Sum of c_i * state_i over the hatted components (method-of-lines helper)."""
    first = coeffs_states[0][1]
    out = zero_state(first.grid, t)
    for c, st in coeffs_states:
        out.n_hat += c * st.n_hat
        out.e_hat += c * st.e_hat
        out.k_hat += c * st.k_hat
        out.gamma_hat += c * st.gamma_hat
        out.e0psi_hat += c * st.e0psi_hat
        out.epsi_hat += c * st.epsi_hat
        out.psi_hat += c * st.psi_hat
    return out


__all__ = [
    "State",
    "FullVars",
    "StateNorms",
    "SYM_PAIRS",
    "SYM_INDEX",
    "GAMMA_PAIRS",
    "GAMMA_PAIR_INDEX",
    "zero_state",
    "sym_get",
    "sym_full",
    "sym_pack",
    "sym_trace",
    "sym_project_tracefree",
    "gamma_get",
    "gamma_full",
    "gamma_pack",
    "unhat",
    "hat",
    "state_norms",
    "write_state",
    "read_state",
    "check_state_finite",
    "state_linear_combination",
    "replace",
]
