"""Uniform periodic grid on [0, 2pi)^3 with Fourier pseudo-spectral calculus.

A *field* is a plain float64 ndarray of shape ``grid.shape`` (row-major).
Axes are 0-based.  Axes may be collapsed to a single point (n_i = 1) for
cheap 1-D/2-D effective runs; fields are then constant along those axes and
their derivatives vanish identically.  All transforms use numpy's FFT.

Conventions that matter for reproducibility:

* Integer wavenumbers come from ``fftfreq(n, 1/n)``.  The derivative
  multiplier is ``i*m`` with the Nyquist mode (|m| = n/2) zeroed — that is
  exactly what taking the real part after an odd-order derivative of a real
  signal does, so repeated single-axis derivatives and the one-shot
  multi-index multiplier agree to the last bit in exact arithmetic.
* Dealiasing keeps modes with |m_i| <= n_i/3 on every axis (two-thirds rule).
* L^2 is the equal-weight quadrature (2pi)^3 * mean(f^2) — always the full
  three-torus volume, regardless of how many axes are effective.
* The discrete Sobolev norm of order M sums ||d^iota f||_{L^2}^2 over all
  multi-indices |iota| <= M; it is evaluated in spectral space by Parseval,
  which is identical to differentiating and summing on the grid.

Binary snapshot format (shared with the run harness): an ASCII header line
``dims n1 n2 n3\\n`` followed by n1*n2*n3 IEEE-754 binary64 values,
row-major, little-endian.
"""

from __future__ import annotations

import math
from typing import BinaryIO, Sequence

import numpy as np

from .errors import NonFiniteFieldError

TWO_PI = 2.0 * math.pi


def multi_indices(order: int) -> list[tuple[int, int, int]]:
    """All 3-axis derivative multi-indices with total order <= order.

    Ordered by total order, then lexicographically; the fixed ordering is
    part of the norm definitions (the sum is order-independent, but tests
    and documentation enumerate it this way).
    """
    out = []
    for total in range(order + 1):
        for i1 in range(total, -1, -1):
            for i2 in range(total - i1, -1, -1):
                i3 = total - i1 - i2
                out.append((i1, i2, i3))
    return out


class Grid:
    """Periodic uniform grid with cached spectral machinery."""

    def __init__(self, n_points: Sequence[int]):
        n = tuple(int(v) for v in n_points)
        if len(n) != 3:
            raise ValueError(f"n_points must have 3 entries, got {n_points!r}")
        for v in n:
            if v < 1 or (v > 1 and v % 2 != 0):
                raise ValueError(
                    f"each axis needs n=1 (inactive) or an even n>=2, got {n}"
                )
        self.n_points = n
        self.shape = n
        self.effective_axes = tuple(ax for ax in range(3) if n[ax] > 1)
        self.spacing = tuple(TWO_PI / v for v in n)
        self.num_points = n[0] * n[1] * n[2]
        self.volume = TWO_PI ** 3

        shapes = [(n[0], 1, 1), (1, n[1], 1), (1, 1, n[2])]
        self._modes = []
        self._dmult = []
        for ax in range(3):
            m = np.fft.fftfreq(n[ax], 1.0 / n[ax]).reshape(shapes[ax])
            self._modes.append(m)
            dm = 1j * m
            dm[np.abs(m) == n[ax] / 2.0] = 0.0  # Nyquist derivative is zero
            self._dmult.append(dm)
        self._m2 = sum(m * m for m in self._modes)  # |m|^2, full broadcast
        keep = np.ones((1, 1, 1), dtype=bool)
        for ax in range(3):
            keep = keep & (np.abs(self._modes[ax]) <= n[ax] / 3.0)
        self._dealias_keep = keep
        self._sobolev_weights: dict[int, np.ndarray] = {}

    # ---------------------------------------------------------------- basics

    def coords(self, axis: int) -> np.ndarray:
        """Grid coordinates 2pi*j/n along one axis, broadcastable to shape."""
        n = self.n_points[axis]
        shape = [1, 1, 1]
        shape[axis] = n
        return (TWO_PI * np.arange(n) / n).reshape(shape)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def check_field(self, f: np.ndarray, where: str = "field") -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"{where}: shape {f.shape} != grid shape {self.shape}")
        if not np.all(np.isfinite(f)):
            raise NonFiniteFieldError(where)
        return f

    # ------------------------------------------------------------- spectral

    def fft(self, f: np.ndarray) -> np.ndarray:
        return np.fft.fftn(f)

    def ifft(self, F: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(F).real

    def spectral_derivative(self, f: np.ndarray, axis: int) -> np.ndarray:
        """d/dx_axis of the trigonometric interpolant of f, sampled on the grid."""
        if axis not in (0, 1, 2):
            raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
        f = self.check_field(f, "spectral_derivative input")
        if self.n_points[axis] == 1:
            return np.zeros(self.shape)
        return np.fft.ifftn(np.fft.fftn(f) * self._dmult[axis]).real

    def coord_derivs(self, f: np.ndarray) -> list[np.ndarray]:
        """All three coordinate derivatives with one forward transform."""
        f = self.check_field(f, "coord_derivs input")
        F = np.fft.fftn(f)
        out = []
        for ax in range(3):
            if self.n_points[ax] == 1:
                out.append(np.zeros(self.shape))
            else:
                out.append(np.fft.ifftn(F * self._dmult[ax]).real)
        return out

    def derivative_multi(self, f: np.ndarray, iota: tuple[int, int, int]) -> np.ndarray:
        """Mixed derivative d^iota f in one transform round trip."""
        if iota == (0, 0, 0):
            return np.array(f, dtype=float, copy=True)
        f = self.check_field(f, "derivative_multi input")
        mult = np.ones((1, 1, 1), dtype=complex)
        for ax, p in enumerate(iota):
            if p > 0:
                if self.n_points[ax] == 1:
                    return np.zeros(self.shape)
                mult = mult * self._dmult[ax] ** p
        return np.fft.ifftn(np.fft.fftn(f) * mult).real

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        """Flat coordinate Laplacian sum_a d_a d_a f.

        Uses the exact -|m|^2 multiplier, matching helmholtz_solve, rather
        than the square of the first-derivative multiplier: the second
        derivative of a Nyquist-mode cosine is well defined even though its
        first derivative is not, and zeroing it would put that mode in the
        kernel — fatal for elliptic solves whose forcing reaches the
        Nyquist shell (e.g. the squared perturbation on a coarse grid).
        """
        f = self.check_field(f, "laplacian input")
        F = np.fft.fftn(f)
        return np.fft.ifftn(-F * self._m2).real

    def helmholtz_solve(self, f: np.ndarray, sigma: float, mu: float) -> np.ndarray:
        """Solve (sigma - mu * Lap) u = f exactly per Fourier mode."""
        if sigma <= 0.0:
            raise ValueError(f"sigma must be positive (got {sigma}); "
                             "the operator would be singular on constants")
        if mu < 0.0:
            raise ValueError(f"mu must be nonnegative, got {mu}")
        f = self.check_field(f, "helmholtz_solve input")
        F = np.fft.fftn(f)
        return np.fft.ifftn(F / (sigma + mu * self._m2)).real

    def dealias(self, f: np.ndarray) -> np.ndarray:
        """Zero every mode with any |m_i| > n_i/3 (two-thirds rule)."""
        f = self.check_field(f, "dealias input")
        return np.fft.ifftn(np.fft.fftn(f) * self._dealias_keep).real

    # ----------------------------------------------------------------- norms

    def l2_norm(self, f: np.ndarray) -> float:
        """sqrt((2pi)^3 * mean(f^2)) — equal-weight quadrature of the L^2 norm."""
        f = np.asarray(f, dtype=float)
        return math.sqrt(self.volume * float(np.mean(f * f)))

    def sup_norm(self, f: np.ndarray) -> float:
        return float(np.max(np.abs(f)))

    def _sobolev_weight(self, order: int) -> np.ndarray:
        w = self._sobolev_weights.get(order)
        if w is None:
            # per-mode weight sum over |iota|<=M of prod_ax w_ax^(2 iota_ax),
            # where w_ax is the (Nyquist-zeroed) derivative multiplier magnitude
            mags = [np.abs(d) for d in self._dmult]
            w = np.zeros(self.shape)
            for iota in multi_indices(order):
                term = np.ones((1, 1, 1))
                for ax, p in enumerate(iota):
                    if p > 0:
                        term = term * mags[ax] ** (2 * p)
                w = w + term
            self._sobolev_weights[order] = w
        return w

    def sobolev_norm(self, f: np.ndarray, order: int) -> float:
        """Discrete H^M norm: sqrt(sum_{|iota|<=M} ||d^iota f||_{L^2}^2).

        Evaluated in spectral space: Parseval makes the per-mode weighted sum
        identical to applying each derivative and quadrature-summing on the
        grid (the ordinary-frequency bins carry |i m|^(2p); the Nyquist bins
        carry zero for p > 0, matching the real-cast derivative convention).
        """
        if order < 0:
            raise ValueError(f"order must be >= 0, got {order}")
        f = self.check_field(f, "sobolev_norm input")
        F = np.fft.fftn(f)
        power = (F * F.conj()).real
        total = float(np.sum(power * self._sobolev_weight(order)))
        return math.sqrt(self.volume * total / self.num_points ** 2)

    def sup_norm_cm(self, f: np.ndarray, order: int) -> float:
        """Discrete C^M norm: sum over |iota| <= M of max |d^iota f|."""
        if order < 0:
            raise ValueError(f"order must be >= 0, got {order}")
        f = self.check_field(f, "sup_norm_cm input")
        F = np.fft.fftn(f)
        total = 0.0
        for iota in multi_indices(order):
            if iota == (0, 0, 0):
                total += float(np.max(np.abs(f)))
                continue
            mult = np.ones((1, 1, 1), dtype=complex)
            skip = False
            for ax, p in enumerate(iota):
                if p > 0:
                    if self.n_points[ax] == 1:
                        skip = True
                        break
                    mult = mult * self._dmult[ax] ** p
            if skip:
                continue  # derivative along an inactive axis vanishes
            g = np.fft.ifftn(F * mult).real
            total += float(np.max(np.abs(g)))
        return total


# ------------------------------------------------------------- snapshot I/O

def write_field(fh: BinaryIO, f: np.ndarray) -> None:
    """Write one field block: `dims n1 n2 n3` header + little-endian float64."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 3:
        raise ValueError(f"field must be 3-dimensional, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise NonFiniteFieldError("field snapshot write")
    n1, n2, n3 = f.shape
    fh.write(f"dims {n1} {n2} {n3}\n".encode("ascii"))
    fh.write(np.ascontiguousarray(f, dtype="<f8").tobytes())


def read_field(fh: BinaryIO) -> np.ndarray:
    """Read one field block written by write_field."""
    header = fh.readline()
    if not header:
        raise ValueError("unexpected end of file while reading field header")
    parts = header.decode("ascii").split()
    if len(parts) != 4 or parts[0] != "dims":
        raise ValueError(f"malformed field header: {header!r}")
    dims = tuple(int(p) for p in parts[1:])
    count = dims[0] * dims[1] * dims[2]
    raw = fh.read(count * 8)
    if len(raw) != count * 8:
        raise ValueError("truncated field payload")
    values = np.frombuffer(raw, dtype="<f8").astype(float).reshape(dims)
    if not np.all(np.isfinite(values)):
        raise NonFiniteFieldError("field snapshot read")
    return values
