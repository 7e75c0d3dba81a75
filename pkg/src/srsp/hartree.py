"""Hartree nonlinearity: density, Riesz potential, energy."""

from __future__ import annotations

import numpy as np

from .spectral import Field, Multiplier, kinetic_symbol
from .state import MixedState, weighted_norm

IMAG_TOL = 1e-13


def density(state: MixedState) -> Field:
    """Pointwise ``sum_k lambda_k |psi_k(x)|^2`` as a real field."""
    n = np.tensordot(state.weights, np.abs(state.psi) ** 2, axes=1)
    return Field(state.grid, n)


def potential(dens: Field, w: Multiplier) -> Field:
    """Convolution ``w * n`` as the Fourier multiplier ``w_hat`` applied to ``n``.

    Raises ValueError if the result has an imaginary part above round-off,
    which means ``w`` is not an even symbol.
    """
    dens.grid.check_same(w.grid)
    v = np.fft.ifftn(w.values * np.fft.fftn(dens.values))
    residue = np.max(np.abs(v.imag))
    if residue > IMAG_TOL * max(1.0, np.max(np.abs(v.real))):
        raise ValueError(f"potential has imaginary residue {residue:.2e}; symbol is not even")
    return Field(dens.grid, v.real)


def state_potential(state: MixedState, w: Multiplier) -> np.ndarray:
    return potential(density(state), w).values


def apply_hartree(state: MixedState, w: Multiplier) -> np.ndarray:
    """``V[Psi] psi_k`` for every component, stacked like ``state.psi``."""
    return state_potential(state, w) * state.psi


def interaction_pairing(state: MixedState, w: Multiplier) -> complex:
    """``<Psi, V[Psi] Psi>`` in the weighted L^2 inner product."""
    v = state_potential(state, w)
    dv = state.grid.cell_volume
    per = [np.vdot(p, v * p) for p in state.psi]
    return complex(dv * np.dot(state.weights, per))


def kinetic_energy(state: MixedState, symbol: Multiplier) -> float:
    """``1/2 sum_k lambda_k sum_q a(q) |psi_hat_k(q)|^2``."""
    coeffs = state.coefficients()
    per = np.sum(symbol.values * np.abs(coeffs) ** 2, axis=tuple(range(1, coeffs.ndim)))
    return 0.5 * float(np.dot(state.weights, per))


def interaction_energy(state: MixedState, w: Multiplier) -> float:
    n = density(state)
    v = potential(n, w)
    return 0.25 * state.grid.cell_volume * float(np.sum(n.values * v.values))


def energy(state: MixedState, mass: float, w: Multiplier, symbol: Multiplier | None = None) -> float:
    """Energy ``1/2 <Psi, H_m Psi> + 1/4 <Psi, V[Psi] Psi>``.

    ``symbol`` overrides the kinetic symbol (used for the non-relativistic
    family); by default it is ``sqrt(m^2+|k|^2) - m``.
    """
    if symbol is None:
        symbol = kinetic_symbol(state.grid, mass)
    return kinetic_energy(state, symbol) + interaction_energy(state, w)


def lipschitz_ratio(a: MixedState, b: MixedState, s: float, w: Multiplier) -> float:
    """Empirical constant in the local Lipschitz estimate of ``Psi -> V[Psi] Psi``.

    Returns ``||V[a]a - V[b]b|| / ((||a||^2 + ||b||^2) ||a - b||)`` with all
    norms in the weighted H^s norm.
    """
    diff = weighted_norm(a - b, s)
    if diff == 0:
        raise ValueError("lipschitz_ratio needs distinct states")
    num = weighted_norm(a.replace(apply_hartree(a, w) - apply_hartree(b, w)), s)
    return num / ((weighted_norm(a, s) ** 2 + weighted_norm(b, s) ** 2) * diff)
