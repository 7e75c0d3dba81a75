"""Shared builders for the test suite."""

import numpy as np

from srsp.config import validate
from srsp.presets import init_preset
from srsp.spectral import Field
from srsp.state import gram_schmidt, mixed_state

# repulsive reference run used by the conservation checks
REFERENCE = dict(
    dim=1, grid_points=128, box_length=20.0, gamma=0.5, coupling=1.0, mass=1.0,
    components=3, weights="geometric:0.5", init_preset="gaussian", widths=1.0,
    dt=1e-3, t_final=1.0,
)


def config(**changes):
    data = dict(REFERENCE)
    data.update(changes)
    return validate(data)


def reference_state(**changes):
    c = config(**changes)
    return c, init_preset(c)


def random_state(grid, K, rng, weights=None):
    raw = rng.standard_normal((K,) + grid.shape) + 1j * rng.standard_normal((K,) + grid.shape)
    # smooth the noise so that H^s norms stay moderate
    raw = np.fft.ifftn(np.fft.fftn(raw, axes=tuple(range(1, grid.dim + 1))) * np.exp(-grid.k2 / 4),
                       axes=tuple(range(1, grid.dim + 1)))
    psi = gram_schmidt(raw, grid)
    if weights is None:
        weights = rng.dirichlet(np.ones(K))
    return mixed_state(weights, [Field(grid, p) for p in psi])
