"""Time stepping: free propagator, Strang splitting, Duhamel/Picard windows."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .hartree import energy, potential
from .spectral import Field, Grid, Multiplier, kinetic_symbol, nonrel_symbol, sobolev_weight
from .state import MixedState, orthonormality_residual, weighted_norm

SCHEMES = ("strang", "picard")
FAMILIES = ("semirel", "nonrel")


class InstabilityError(RuntimeError):
    """A step produced non-finite values."""


class PicardConvergenceError(RuntimeError):
    def __init__(self, message, distances):
        super().__init__(message)
        self.distances = distances


class ContractionWarning(UserWarning):
    """Window length times squared norm is not below 1/2."""


@dataclass(frozen=True)
class IntegratorParams:
    dt: float
    t_final: float
    scheme: str = "strang"
    picard_tol: float = 1e-12
    picard_max_iter: int = 50
    picard_nodes: int = 8
    blowup_threshold: float = 10.0
    sobolev_s: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")
        if self.dt > self.t_final:
            raise ValueError(f"dt = {self.dt} exceeds t_final = {self.t_final}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not self.picard_tol > 0:
            raise ValueError("picard_tol must be positive")
        if self.picard_max_iter < 1 or self.picard_nodes < 1:
            raise ValueError("picard_max_iter and picard_nodes must be >= 1")
        if not self.blowup_threshold > 1:
            raise ValueError(f"blowup_threshold must exceed 1, got {self.blowup_threshold}")
        if self.sobolev_s < 0:
            raise ValueError("sobolev_s must be non-negative")

    @property
    def steps(self) -> int:
        # guard against t_final/dt landing a hair below an integer
        return int(math.floor(self.t_final / self.dt * (1 + 1e-12)))


def default_sobolev_s(gamma: float) -> float:
    return max(0.5, gamma / 2)


def _axes(grid: Grid, a: np.ndarray) -> tuple[int, ...]:
    return tuple(range(a.ndim - grid.dim, a.ndim))


def _potential(grid: Grid, weights: np.ndarray, psi: np.ndarray, w: Multiplier) -> np.ndarray:
    n = np.tensordot(weights, np.abs(psi) ** 2, axes=1)
    return potential(Field(grid, n), w).values


def _check_finite(psi: np.ndarray):
    if not np.all(np.isfinite(psi)):
        raise InstabilityError("non-finite values in state")


def propagate_symbol(state: MixedState, symbol: Multiplier, t: float) -> MixedState:
    """Apply ``exp(-i t a(k))`` to every component."""
    state.grid.check_same(symbol.grid)
    axes = _axes(state.grid, state.psi)
    c = np.fft.fftn(state.psi, axes=axes) * np.exp(-1j * t * symbol.values)
    return state.replace(np.fft.ifftn(c, axes=axes))


def free_propagate(state: MixedState, mass: float, t: float) -> MixedState:
    """Exact semi-relativistic free flow ``exp(-i t H_m)``."""
    return propagate_symbol(state, kinetic_symbol(state.grid, mass), t)


def split_step(state: MixedState, symbol: Multiplier, dt: float, w: Multiplier) -> MixedState:
    """One Strang step: half potential phase, full kinetic flow, half potential phase.

    The potential substep is exact because a pointwise phase does not change
    the density; the second half step uses the density after the kinetic flow.
    """
    grid = state.grid
    axes = _axes(grid, state.psi)
    v = _potential(grid, state.weights, state.psi, w)
    psi = np.exp(-0.5j * dt * v) * state.psi
    psi = np.fft.ifftn(np.fft.fftn(psi, axes=axes) * np.exp(-1j * dt * symbol.values), axes=axes)
    _check_finite(psi)
    v = _potential(grid, state.weights, psi, w)
    psi = np.exp(-0.5j * dt * v) * psi
    _check_finite(psi)
    return state.replace(psi)


def strang_step(state: MixedState, mass: float, dt: float, w: Multiplier) -> MixedState:
    return split_step(state, kinetic_symbol(state.grid, mass), dt, w)


def nonrel_step(state: MixedState, mass: float, dt: float, w: Multiplier) -> MixedState:
    """Strang step with the Schroedinger symbol ``|k|^2 / (2m)``; needs ``mass > 0``."""
    return split_step(state, nonrel_symbol(state.grid, mass), dt, w)


def potential_only_flow(state: MixedState, t: float, w: Multiplier) -> MixedState:
    """Closed-form solution of ``i d/dt psi_k = V[Psi] psi_k`` (no kinetic term).

    The density is conserved pointwise, so the potential is frozen at its
    initial value and every component just picks up the phase ``exp(-i t V0)``.
    """
    v0 = _potential(state.grid, state.weights, state.psi, w)
    return state.replace(np.exp(-1j * t * v0) * state.psi)


@dataclass
class PicardResult:
    state: MixedState
    iterations: int
    distances: list[float]


def picard_window(
    state: MixedState,
    mass: float,
    dt: float,
    w: Multiplier,
    tol: float = 1e-12,
    max_iter: int = 50,
    *,
    nodes: int = 8,
    s: float = 0.5,
    symbol: Multiplier | None = None,
) -> PicardResult:
    """Fixed-point iteration of the Duhamel map on ``[0, dt]``.

    The iterate is carried on ``nodes + 1`` equispaced times and the Duhamel
    integral is evaluated with the cumulative composite trapezoid rule in the
    interaction picture. Iteration stops when the weighted H^s distance
    between successive iterates, maximized over the nodes, drops below
    ``tol``. ``symbol`` replaces the kinetic symbol, e.g. by zeros for the
    potential-only system.

    Raises PicardConvergenceError after ``max_iter`` iterations.
    """
    grid = state.grid
    if symbol is None:
        symbol = kinetic_symbol(grid, mass)
    rho = weighted_norm(state, s)
    if dt * rho**2 >= 0.5:
        warnings.warn(
            f"window {dt:g} with norm {rho:.3g}: dt*norm^2 = {dt * rho**2:.3g} >= 1/2",
            ContractionWarning,
            stacklevel=2,
        )
    # iterate layout: (node, component, *space); densities drop the component axis
    axes = tuple(range(2, 2 + grid.dim))
    node_axes = tuple(range(1, 1 + grid.dim))
    t = np.linspace(0.0, dt, nodes + 1)
    h = dt / nodes
    phase = np.exp(-1j * t.reshape((nodes + 1, 1) + (1,) * grid.dim) * symbol.values)
    c0 = np.fft.fftn(state.psi, axes=node_axes)
    current = phase * c0
    # raw FFT coefficients -> orthonormal-basis coefficients
    scale2 = (grid.cell_volume / grid.box_length ** (grid.dim / 2)) ** 2
    sw = sobolev_weight(grid, s) * scale2
    distances = []
    for it in range(1, max_iter + 1):
        psi_t = np.fft.ifftn(current, axes=axes)
        n_t = np.tensordot(np.abs(psi_t) ** 2, state.weights, axes=([1], [0]))
        v_t = np.fft.ifftn(w.values * np.fft.fftn(n_t, axes=node_axes), axes=node_axes).real
        f_hat = np.fft.fftn(v_t[:, None] * psi_t, axes=axes)
        g = np.conj(phase) * f_hat
        cum = np.zeros_like(g)
        cum[1:] = np.cumsum(0.5 * h * (g[1:] + g[:-1]), axis=0)
        new = phase * (c0 - 1j * cum)
        if not np.all(np.isfinite(new)):
            raise InstabilityError("non-finite Picard iterate")
        diff2 = np.sum(sw * np.abs(new - current) ** 2, axis=axes)  # (nodes+1, K)
        dist = float(np.sqrt(np.max(diff2 @ state.weights)))
        distances.append(dist)
        current = new
        if dist < tol:
            psi = np.fft.ifftn(current[-1], axes=node_axes)
            return PicardResult(state.replace(psi), it, distances)
    raise PicardConvergenceError(
        f"Picard iteration did not reach {tol:.1e} in {max_iter} iterations "
        f"(last distance {distances[-1]:.3e})",
        distances,
    )


@dataclass
class Trajectory:
    """Per-step diagnostics of one run.

    ``status`` is one of ``completed``, ``blowup``, ``nonfinite`` or
    ``picard_diverged``; on anything but ``completed`` the arrays hold the
    diagnostics up to the last valid step.
    """

    mass: float
    family: str
    params: IntegratorParams
    times: list[float] = field(default_factory=list)
    charges: list[np.ndarray] = field(default_factory=list)
    energies: list[float] = field(default_factory=list)
    hs_norms: list[float] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    picard_iterations: list[int] = field(default_factory=list)
    snapshots: list[tuple[int, float, MixedState]] = field(default_factory=list)
    status: str = "running"
    message: str = ""
    final_state: Optional[MixedState] = None

    @property
    def completed(self) -> bool:
        return self.status == "completed"

    @property
    def last_valid_time(self) -> float:
        return self.times[-1] if self.times else 0.0

    def charge_array(self) -> np.ndarray:
        return np.array(self.charges)

    def record(self, t: float, state: MixedState, w: Multiplier, symbol: Multiplier):
        s = self.params.sobolev_s
        self.times.append(t)
        self.charges.append(state.charges())
        self.energies.append(energy(state, self.mass, w, symbol=symbol))
        self.hs_norms.append(weighted_norm(state, s))
        self.residuals.append(orthonormality_residual(state))

    def rows(self):
        """Diagnostics rows ``(step, time, charge_1..charge_K, energy, hs_norm, residual)``."""
        for i, t in enumerate(self.times):
            yield (i, t, *self.charges[i].tolist(), self.energies[i], self.hs_norms[i], self.residuals[i])


def family_symbol(grid: Grid, mass: float, family: str) -> Multiplier:
    if family == "semirel":
        return kinetic_symbol(grid, mass)
    if family == "nonrel":
        return nonrel_symbol(grid, mass)
    raise ValueError(f"family must be one of {FAMILIES}, got {family!r}")


def evolve(
    state: MixedState,
    mass: float,
    params: IntegratorParams,
    w: Multiplier,
    family: str = "semirel",
    *,
    snapshot_every: int = 0,
    callback: Callable[[int, float, MixedState], None] | None = None,
) -> Trajectory:
    """Step ``state`` to ``params.t_final`` recording diagnostics after every step.

    The run stops early, with ``status`` set accordingly, when the H^s norm
    exceeds ``blowup_threshold`` times its initial value, when a step goes
    non-finite, or when a Picard window fails to converge.
    """
    symbol = family_symbol(state.grid, mass, family)
    traj = Trajectory(mass=mass, family=family, params=params)
    traj.record(0.0, state, w, symbol)
    limit = params.blowup_threshold * traj.hs_norms[0]
    dt = params.dt

    if snapshot_every:
        traj.snapshots.append((0, 0.0, state))
    if callback is not None:
        callback(0, 0.0, state)

    for step in range(1, params.steps + 1):
        try:
            if params.scheme == "strang":
                new = split_step(state, symbol, dt, w)
            else:
                with warnings.catch_warnings():
                    if step > 1:
                        warnings.simplefilter("ignore", ContractionWarning)
                    res = picard_window(
                        state, mass, dt, w, params.picard_tol, params.picard_max_iter,
                        nodes=params.picard_nodes, s=params.sobolev_s, symbol=symbol,
                    )
                new = res.state
                traj.picard_iterations.append(res.iterations)
        except InstabilityError as exc:
            traj.status, traj.message = "nonfinite", f"step {step}: {exc}"
            break
        except PicardConvergenceError as exc:
            traj.status, traj.message = "picard_diverged", f"step {step}: {exc}"
            break
        t = step * dt
        norm = weighted_norm(new, params.sobolev_s)
        if not np.isfinite(norm) or norm > limit:
            traj.status = "blowup"
            traj.message = (
                f"H^s norm {norm:.4g} exceeded {params.blowup_threshold:g} x initial "
                f"at t = {t:.6g}; last valid time {traj.last_valid_time:.6g}"
            )
            break
        state = new
        traj.record(t, state, w, symbol)
        if snapshot_every and step % snapshot_every == 0:
            traj.snapshots.append((step, t, state))
        if callback is not None:
            callback(step, t, state)
    else:
        traj.status = "completed"
    traj.final_state = state
    return traj
