"""Periodic grids and spectral calculus on the flat torus (R / 2 pi Z)^{2n}.

The Kahler form is the standard one, so g = I and covariant derivatives are
plain partials.  Real axes are ordered (x_1, y_1, ..., x_n, y_n) with
z_a = x_a + i y_a; field arrays are indexed in that order, row-major.

Derivatives are Fourier multipliers.  The Nyquist wavenumber is dropped from
odd-order factors (first derivatives, mixed second derivatives) and kept in
pure second derivatives, so every derivative of a real field is real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "TorusGrid",
    "ScalarField",
    "HermitianField",
    "make_grid",
    "trig_field",
    "constant_hermitian",
    "complex_hessian",
    "complex_gradient",
    "real_derivative",
    "pointwise_eigs",
    "integrate",
    "build_chi",
    "DEFAULT_MAX_POINTS",
]

DEFAULT_MAX_POINTS = 2**21


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid with N points on each of the 2n real axes."""

    n: int
    N: int

    @property
    def ndim(self) -> int:
        return 2 * self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.ndim

    @property
    def npts(self) -> int:
        return self.N**self.ndim

    @property
    def spacing(self) -> float:
        return 2 * math.pi / self.N

    @property
    def volume(self) -> float:
        return (2 * math.pi) ** self.ndim

    def coords(self) -> list[np.ndarray]:
        """Broadcastable coordinate arrays, one per real axis."""
        x = np.arange(self.N) * self.spacing
        return [x.reshape(self._axis_shape(a)) for a in range(self.ndim)]

    def _axis_shape(self, a: int) -> tuple[int, ...]:
        s = [1] * self.ndim
        s[a] = self.N
        return tuple(s)

    @cached_property
    def _wavenumbers(self) -> np.ndarray:
        return np.fft.fftfreq(self.N, 1.0 / self.N)

    def wavenumber(self, a: int, odd: bool) -> np.ndarray:
        """Broadcastable integer wavenumbers on axis a.

        ``odd=True`` zeroes the Nyquist entry (used for odd-order factors).
        """
        k = self._wavenumbers.copy()
        if odd:
            k[self.N // 2] = 0.0
        return k.reshape(self._axis_shape(a))

    def second_multiplier(self, a: int, b: int) -> np.ndarray:
        """Symbol of d^2 / dx_a dx_b (broadcastable, real)."""
        if a == b:
            k = self.wavenumber(a, odd=False)
            return -(k * k)
        return -self.wavenumber(a, odd=True) * self.wavenumber(b, odd=True)

    @cached_property
    def hessian_symbols(self) -> dict[tuple[int, int], np.ndarray]:
        """Symbols of u -> u_{a bbar} for a <= b (full-size complex arrays)."""
        out = {}
        for a in range(self.n):
            for b in range(a, self.n):
                xa, ya, xb, yb = 2 * a, 2 * a + 1, 2 * b, 2 * b + 1
                re = 0.25 * (self.second_multiplier(xa, xb) + self.second_multiplier(ya, yb))
                if a == b:
                    sym = np.broadcast_to(re, self.shape).astype(complex)
                else:
                    im = 0.25 * (self.second_multiplier(xa, yb) - self.second_multiplier(ya, xb))
                    sym = np.broadcast_to(re + 1j * im, self.shape).copy()
                sym.flags.writeable = False
                out[(a, b)] = sym
        return out


def make_grid(n: int, N: int, max_points: int = DEFAULT_MAX_POINTS) -> TorusGrid:
    if not 1 <= n <= 4:
        raise ValueError(f"complex dimension n={n} not in 1..4")
    if N % 2 or not 4 <= N <= 64:
        raise ValueError(f"N={N} must be even and in [4, 64]")
    grid = TorusGrid(n, N)
    if grid.npts > max_points:
        raise MemoryError(f"grid with {grid.npts} points exceeds the cap of {max_points}")
    return grid


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    if arr.flags.writeable and arr.base is not None:
        arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ScalarField:
    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            vals = vals.reshape(self.grid.shape)
        if not np.all(np.isfinite(vals)):
            raise ValueError("scalar field has non-finite entries")
        object.__setattr__(self, "values", _readonly(vals.copy()))

    def mean(self) -> float:
        return float(self.values.mean())

    def sup(self) -> float:
        return float(np.abs(self.values).max())


@dataclass(frozen=True)
class HermitianField:
    """A Hermitian n x n matrix at every grid point (values[..., a, b])."""

    grid: TorusGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.grid.n
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape + (n, n):
            vals = vals.reshape(self.grid.shape + (n, n))
        if not np.all(np.isfinite(vals)):
            raise ValueError("Hermitian field has non-finite entries")
        # symmetrise so the storage layout (upper triangle) is exact
        vals = 0.5 * (vals + np.conj(np.swapaxes(vals, -1, -2)))
        object.__setattr__(self, "values", _readonly(vals))

    def entry(self, a: int, b: int) -> np.ndarray:
        return self.values[..., a, b]

    def packed(self) -> np.ndarray:
        """(npts, n^2) real array: n diagonals, then (re, im) of a < b entries."""
        n = self.grid.n
        flat = self.values.reshape(-1, n, n)
        cols = [flat[:, a, a].real for a in range(n)]
        for a in range(n):
            for b in range(a + 1, n):
                cols += [flat[:, a, b].real, flat[:, a, b].imag]
        return np.stack(cols, axis=1)

    @classmethod
    def from_packed(cls, grid: TorusGrid, packed: np.ndarray) -> "HermitianField":
        n = grid.n
        packed = np.asarray(packed, dtype=float).reshape(grid.npts, n * n)
        vals = np.zeros((grid.npts, n, n), dtype=complex)
        for a in range(n):
            vals[:, a, a] = packed[:, a]
        col = n
        for a in range(n):
            for b in range(a + 1, n):
                z = packed[:, col] + 1j * packed[:, col + 1]
                vals[:, a, b] = z
                vals[:, b, a] = np.conj(z)
                col += 2
        return cls(grid, vals.reshape(grid.shape + (n, n)))


def trig_field(grid: TorusGrid, modes) -> ScalarField:
    """Sum of amplitude * cos(<k, x> + phase) over (wavevector, amplitude, phase)."""
    out = np.zeros(grid.shape)
    xs = grid.coords()
    for wavevector, amplitude, phase in modes:
        k = np.asarray(wavevector, dtype=int)
        if k.shape != (grid.ndim,):
            raise ValueError(f"wavevector needs {grid.ndim} components")
        if np.any(np.abs(k) >= grid.N // 2):
            raise ValueError(f"mode {tuple(k)} is not resolved on N={grid.N}")
        arg = sum(int(k[a]) * xs[a] for a in range(grid.ndim)) + phase
        out = out + amplitude * np.cos(arg)
    return ScalarField(grid, out)


def constant_hermitian(grid: TorusGrid, C) -> HermitianField:
    C = np.asarray(C, dtype=complex)
    n = grid.n
    if C.shape != (n, n):
        raise ValueError(f"constant matrix must be {n}x{n}")
    scale = max(1.0, float(np.abs(C).max()))
    if np.abs(C - C.conj().T).max() > 1e-14 * scale:
        raise ValueError("constant matrix is not Hermitian")
    return HermitianField(grid, np.broadcast_to(C, grid.shape + (n, n)))


def _values(f, grid: TorusGrid | None = None) -> np.ndarray:
    return f.values if isinstance(f, ScalarField) else np.asarray(f, dtype=float)


def hessian_values(grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    """Complex Hessian u_{a bbar} of a raw grid array, shape grid.shape + (n, n)."""
    n = grid.n
    uh = sfft.fftn(u)
    out = np.empty(grid.shape + (n, n), dtype=complex)
    for (a, b), sym in grid.hessian_symbols.items():
        h = sfft.ifftn(sym * uh)
        if a == b:
            out[..., a, a] = h.real
        else:
            out[..., a, b] = h
            out[..., b, a] = np.conj(h)
    return out


def complex_hessian(f: ScalarField) -> HermitianField:
    """i d dbar f as a Hermitian field: f_{a bbar} = d^2 f / dz_a dzbar_b."""
    return HermitianField(f.grid, hessian_values(f.grid, f.values))


def real_derivative(grid: TorusGrid, values: np.ndarray, a: int) -> np.ndarray:
    """d/dx_a along real axis a; trailing (matrix) axes are carried along."""
    values = np.asarray(values)
    k = grid.wavenumber(a, odd=True).reshape(grid._axis_shape(a) + (1,) * (values.ndim - grid.ndim))
    axes = tuple(range(grid.ndim))
    return sfft.ifftn(1j * k * sfft.fftn(values, axes=axes), axes=axes)


def gradient_values(grid: TorusGrid, u: np.ndarray) -> np.ndarray:
    n = grid.n
    uh = sfft.fftn(u)
    out = np.empty(grid.shape + (n,), dtype=complex)
    for a in range(n):
        kx = grid.wavenumber(2 * a, odd=True)
        ky = grid.wavenumber(2 * a + 1, odd=True)
        dx = sfft.ifftn(1j * kx * uh).real
        dy = sfft.ifftn(1j * ky * uh).real
        out[..., a] = 0.5 * (dx - 1j * dy)
    return out


def complex_gradient(f: ScalarField) -> np.ndarray:
    """df/dz_a = (f_x - i f_y) / 2, shape grid.shape + (n,)."""
    return gradient_values(f.grid, f.values)


def pointwise_eigs(H) -> np.ndarray:
    """Eigenvalues at every point, sorted descending on the last axis."""
    vals = H.values if isinstance(H, HermitianField) else np.asarray(H)
    if not np.all(np.isfinite(vals)):
        raise ValueError("non-finite matrix entries")
    return np.linalg.eigvalsh(vals)[..., ::-1]


def integrate(f, grid: TorusGrid | None = None):
    """(2 pi)^{2n} * mean over the grid; exact for resolved trig polynomials.

    Uses numpy's pairwise summation on a contiguous copy, which has a fixed
    reduction order, so the result does not depend on threading.
    """
    if isinstance(f, ScalarField):
        grid, vals = f.grid, f.values
    else:
        if grid is None:
            raise ValueError("raw arrays need an explicit grid")
        vals = np.asarray(f)
    flat = np.ascontiguousarray(vals).reshape(grid.npts, -1)
    total = flat.sum(axis=0) / grid.npts * grid.volume
    return total.item() if total.size == 1 else total.reshape(vals.shape[grid.ndim:])


def build_chi(grid: TorusGrid, C, rho: ScalarField | None = None) -> HermitianField:
    """chi = C + i d dbar rho: closed, in the class fixed by the constant C."""
    base = constant_hermitian(grid, C)
    if rho is None:
        return base
    if rho.grid != grid:
        raise ValueError("rho lives on a different grid")
    return HermitianField(grid, base.values + hessian_values(grid, rho.values))
