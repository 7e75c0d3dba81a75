"""Initial mixed states built from a RunConfig."""

from __future__ import annotations

import itertools

import numpy as np

from .config import RunConfig
from .spectral import Field, Grid, inverse
from .state import MixedState, StateError, gram_schmidt, mixed_state


def _as_vectors(value, K: int, dim: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if dim == 1 and arr.ndim == 1:
        arr = arr[:, None]
    if arr.shape != (K, dim):
        raise StateError(f"'{name}' needs {K} entries of dimension {dim}, got shape {arr.shape}")
    return arr


def default_modes(K: int, dim: int) -> np.ndarray:
    """First ``K`` integer mode vectors ordered by radius: 0, e1, -e1, e2, ..."""
    rng = range(-K, K + 1)
    cands = sorted(itertools.product(rng, repeat=dim), key=lambda m: (sum(x * x for x in m), tuple(-x for x in m)))
    return np.array(cands[:K], dtype=float)


def plane_waves(grid: Grid, modes: np.ndarray) -> np.ndarray:
    return np.stack([grid.mode_array(m) for m in modes])


def gaussians(grid: Grid, centers: np.ndarray, widths: np.ndarray) -> np.ndarray:
    out = []
    for c, sigma in zip(centers, widths):
        r2 = sum((x - cj) ** 2 for x, cj in zip(grid.coords, c))
        out.append(np.exp(-r2 / (2 * sigma**2)).astype(complex))
    return np.stack(out)


def band_modes(grid: Grid, lo: float, hi: float) -> list[tuple[int, ...]]:
    """Integer mode vectors with ``lo <= |m| <= hi``, excluding the Nyquist index."""
    idx = [int(i) for i in grid.mode_indices if i != -grid.points // 2]
    return [m for m in itertools.product(idx, repeat=grid.dim) if lo <= np.sqrt(sum(x * x for x in m)) <= hi]


def random_band_limited(grid: Grid, K: int, lo: float, hi: float, rng: np.random.Generator) -> np.ndarray:
    """``K`` fields with i.i.d. complex Gaussian coefficients on the band ``lo <= |m| <= hi``."""
    modes = band_modes(grid, lo, hi)
    if not modes:
        raise StateError(f"band [{lo}, {hi}] contains no resolved modes")
    coeffs = np.zeros((K,) + grid.shape, dtype=complex)
    index = tuple(np.array(modes).T % grid.points)
    for k in range(K):
        coeffs[(k,) + index] = rng.standard_normal(len(modes)) + 1j * rng.standard_normal(len(modes))
    return inverse(coeffs, grid)


def init_preset(config: RunConfig, grid: Grid | None = None) -> MixedState:
    """Build the configured orthonormal initial state.

    plane_waves are exactly orthonormal; gaussian and random_orthonormal
    inputs go through Gram-Schmidt. Deterministic for a fixed seed.
    """
    grid = grid or config.grid()
    K, dim = config.components, config.dim
    weights = config.weight_array()
    if config.init_preset == "plane_waves":
        modes = default_modes(K, dim) if config.modes is None else _as_vectors(config.modes, K, dim, "modes")
        if len({tuple(m) for m in modes}) < K:
            raise StateError("plane_waves needs distinct modes")
        psi = plane_waves(grid, modes)
    elif config.init_preset == "gaussian":
        widths = np.broadcast_to(np.asarray(config.widths, dtype=float), (K,))
        if config.centers is None:
            offsets = 3.0 * widths.max() * (np.arange(K) - (K - 1) / 2)
            centers = np.zeros((K, dim))
            centers[:, 0] = offsets
        else:
            centers = _as_vectors(config.centers, K, dim, "centers")
        psi = gram_schmidt(gaussians(grid, centers, widths), grid)
    else:
        rng = np.random.default_rng(config.seed)
        lo, hi = config.band
        psi = gram_schmidt(random_band_limited(grid, K, lo, hi, rng), grid)
    return mixed_state(weights, [Field(grid, p) for p in psi])
