"""Periodic-box discretization and Fourier multipliers.

Fields live on a uniform grid over ``[-L/2, L/2)^n``. Fourier coefficients
are taken with respect to the orthonormal basis ``exp(i k.x) / L^(n/2)``, so
that the discrete Parseval identity reads

    h^n * sum_x |psi(x)|^2 == sum_k |psi_hat(k)|^2

with ``h = L / N``. Multiplier operators ``ifftn(M * fftn(u))`` are scale free
and need no normalization at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gamma as gamma_fn
from math import pi

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "Multiplier",
    "make_grid",
    "forward",
    "inverse",
    "kinetic_symbol",
    "nonrel_symbol",
    "riesz_constant",
    "riesz_symbol",
    "dealias_mask",
    "apply_multiplier",
    "sobolev_weight",
    "sobolev_norm",
    "l2_inner",
]


class GridMismatchError(ValueError):
    """Raised when two objects defined on different grids are combined."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``points`` samples per axis on a box of side ``box_length``."""

    dim: int
    points: int
    box_length: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        n = self.points
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise ValueError(f"points must be a power of two >= 8, got {n}")
        if not self.box_length > 0 or not np.isfinite(self.box_length):
            raise ValueError(f"box_length must be positive, got {self.box_length}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dim

    @property
    def size(self) -> int:
        return self.points**self.dim

    @property
    def spacing(self) -> float:
        return self.box_length / self.points

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def dk(self) -> float:
        """Wavenumber lattice step ``2 pi / L``."""
        return 2 * pi / self.box_length

    @cached_property
    def axis(self) -> np.ndarray:
        return -0.5 * self.box_length + self.spacing * np.arange(self.points)

    @cached_property
    def mode_indices(self) -> np.ndarray:
        """Integer mode numbers per axis in FFT order: 0..N/2-1, -N/2..-1."""
        return np.fft.fftfreq(self.points, d=1.0 / self.points).astype(int)

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        return self.dk * self.mode_indices

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    @cached_property
    def wavevectors(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis_wavenumbers] * self.dim), indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        """``|k|^2`` on the lattice, FFT ordering."""
        return sum(kj**2 for kj in self.wavevectors)

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @property
    def max_wavenumber(self) -> float:
        """Largest resolved ``|k|`` (corner of the lattice)."""
        return float(self.kabs.max())

    def mode_array(self, m) -> np.ndarray:
        """Plane wave ``exp(i k.x) / L^(n/2)`` for integer mode vector ``m``."""
        m = np.atleast_1d(np.asarray(m, dtype=float))
        if m.shape != (self.dim,):
            raise ValueError(f"mode index needs {self.dim} entries, got {m.tolist()}")
        phase = sum(self.dk * mj * xj for mj, xj in zip(m, self.coords))
        return np.exp(1j * phase) / self.box_length ** (self.dim / 2)

    def check_same(self, other: "Grid"):
        if self != other:
            raise GridMismatchError(f"grid mismatch: {self} vs {other}")


def make_grid(dim: int, points: int, box_length: float) -> Grid:
    return Grid(int(dim), int(points), float(box_length))


@dataclass(frozen=True, eq=False)
class Field:
    """A complex (or real) function sampled on ``grid``; ``values`` has shape ``grid.shape``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.size != self.grid.size:
            raise ValueError(f"field has {values.size} samples, grid has {self.grid.size}")
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", values)

    def __add__(self, other: "Field") -> "Field":
        self.grid.check_same(other.grid)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        self.grid.check_same(other.grid)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c) -> "Field":
        if isinstance(c, Field):
            self.grid.check_same(c.grid)
            return Field(self.grid, self.values * c.values)
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__

    def coefficients(self) -> np.ndarray:
        return forward(self.values, self.grid)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.cell_volume * np.sum(np.abs(self.values) ** 2)))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


@dataclass(frozen=True, eq=False)
class Multiplier:
    """A real Fourier symbol on the lattice of ``grid`` (FFT ordering)."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("multiplier contains non-finite values")
        object.__setattr__(self, "values", values)

    def __mul__(self, other) -> "Multiplier":
        if isinstance(other, Multiplier):
            self.grid.check_same(other.grid)
            return Multiplier(self.grid, self.values * other.values)
        return Multiplier(self.grid, self.values * other)

    __rmul__ = __mul__

    def at(self, m) -> float:
        """Symbol value at integer mode vector ``m``."""
        idx = tuple(int(mj) % self.grid.points for mj in np.atleast_1d(m))
        return float(self.values[idx])


def forward(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Coefficients in the orthonormal plane-wave basis."""
    scale = grid.cell_volume / grid.box_length ** (grid.dim / 2)
    return np.fft.fftn(values, axes=_axes(values, grid)) * scale


def inverse(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    scale = grid.box_length ** (grid.dim / 2) / grid.cell_volume
    return np.fft.ifftn(coeffs, axes=_axes(coeffs, grid)) * scale


def _axes(a: np.ndarray, grid: Grid) -> tuple[int, ...]:
    # trailing grid.dim axes are spatial; any leading axes are batch axes
    return tuple(range(a.ndim - grid.dim, a.ndim))


def kinetic_symbol(grid: Grid, mass: float) -> Multiplier:
    """Symbol ``sqrt(m^2 + |k|^2) - m`` of the semi-relativistic kinetic operator."""
    if mass < 0:
        raise ValueError(f"mass must be non-negative, got {mass}")
    if mass == 0:
        return Multiplier(grid, grid.kabs.copy())
    # rationalized form; no cancellation for large mass
    return Multiplier(grid, grid.k2 / (np.sqrt(mass**2 + grid.k2) + mass))


def nonrel_symbol(grid: Grid, mass: float) -> Multiplier:
    """Symbol ``|k|^2 / (2m)`` of the Schroedinger kinetic operator."""
    if not mass > 0:
        raise ValueError(f"non-relativistic flow needs mass > 0, got {mass}")
    return Multiplier(grid, grid.k2 / (2 * mass))


def check_gamma(dim: int, gamma: float):
    if dim == 1:
        if not 0 < gamma < 1:
            raise ValueError(f"gamma must satisfy 0 < gamma < 1 for n = 1, got {gamma}")
    elif not 0 < gamma <= 1:
        raise ValueError(f"gamma must satisfy 0 < gamma <= 1 for n >= 2, got {gamma}")


def riesz_constant(dim: int, gamma: float) -> float:
    """Fourier transform constant of ``|x|^-gamma`` in ``dim`` dimensions."""
    return 2 ** (dim - gamma) * pi ** (dim / 2) * gamma_fn((dim - gamma) / 2) / gamma_fn(gamma / 2)


def riesz_symbol(grid: Grid, gamma: float, coupling: float, zero_mode: float = 0.0) -> Multiplier:
    """Fourier symbol of ``coupling / |x|^gamma``.

    The k = 0 entry is not defined by the continuum transform; it is set to
    ``zero_mode`` (0 by default, which makes every potential mean free).
    """
    check_gamma(grid.dim, gamma)
    values = np.empty(grid.shape)
    nonzero = grid.kabs > 0
    values[nonzero] = coupling * riesz_constant(grid.dim, gamma) * grid.kabs[nonzero] ** (gamma - grid.dim)
    values[~nonzero] = zero_mode
    return Multiplier(grid, values)


def dealias_mask(grid: Grid) -> Multiplier:
    """2/3-rule mask: keeps modes with every ``|m_j| < N/3``."""
    keep = np.abs(grid.mode_indices) < grid.points / 3
    mask = np.ones(grid.shape, dtype=bool)
    for j in range(grid.dim):
        shape = [1] * grid.dim
        shape[j] = grid.points
        mask &= keep.reshape(shape)
    return Multiplier(grid, mask.astype(float))


def apply_multiplier(field: Field, mult: Multiplier) -> Field:
    field.grid.check_same(mult.grid)
    return Field(field.grid, np.fft.ifftn(mult.values * np.fft.fftn(field.values)))


def sobolev_weight(grid: Grid, s: float, homogeneous: bool = False) -> np.ndarray:
    """``(1+|k|^2)^s`` or ``|k|^(2s)`` (zero mode weight 0 for s != 0)."""
    if not homogeneous:
        return (1.0 + grid.k2) ** s
    if s == 0:
        return np.ones(grid.shape)
    w = np.zeros(grid.shape)
    nz = grid.k2 > 0
    w[nz] = grid.k2[nz] ** s
    return w


def sobolev_norm(field: Field, s: float, homogeneous: bool = False) -> float:
    weight = sobolev_weight(field.grid, s, homogeneous)
    return float(np.sqrt(np.sum(weight * np.abs(field.coefficients()) ** 2)))


def l2_inner(u: Field, v: Field) -> complex:
    """Discrete ``<u, v>`` (antilinear in ``u``)."""
    u.grid.check_same(v.grid)
    return complex(u.grid.cell_volume * np.vdot(u.values, v.values))
