"""Conservation and growth reports, mass-limit ladders, inequality ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import RunConfig
from .dynamics import Trajectory, family_symbol, picard_window, split_step
from .hartree import potential
from .presets import init_preset, random_band_limited
from .spectral import Field, Grid, Multiplier, riesz_symbol, sobolev_norm, sobolev_weight
from .state import MixedState, weighted_norm


class BlowUpError(RuntimeError):
    def __init__(self, mass: float, time: float, norm: float):
        super().__init__(f"blow-up guard fired at mass {mass:g}, t = {time:.6g} (H^s norm {norm:.4g})")
        self.mass = mass
        self.time = time
        self.norm = norm


@dataclass
class ConservationReport:
    charge_drift: np.ndarray  # per component, max relative deviation
    energy_drift: float  # max |E(t) - E(0)| / |E(0)|
    residual_drift: float  # max |R(t) - R(0)|, absolute

    @property
    def max_charge_drift(self) -> float:
        return float(np.max(self.charge_drift))

    def rows(self):
        for k, d in enumerate(self.charge_drift, start=1):
            yield (f"charge_{k}", float(d))
        yield ("energy", self.energy_drift)
        yield ("orthonormality_residual", self.residual_drift)


def conservation_report(traj: Trajectory) -> ConservationReport:
    if not traj.times:
        raise ValueError("empty trajectory")
    charges = traj.charge_array()
    charge_drift = np.max(np.abs(charges / charges[0] - 1), axis=0)
    e = np.asarray(traj.energies)
    scale = abs(e[0]) if e[0] != 0 else 1.0
    r = np.asarray(traj.residuals)
    return ConservationReport(
        charge_drift=charge_drift,
        energy_drift=float(np.max(np.abs(e - e[0])) / scale),
        residual_drift=float(np.max(np.abs(r - r[0]))),
    )


@dataclass
class GronwallReport:
    beta: float
    initial_norm: float
    max_norm: float
    horizon: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.beta)

    def rows(self):
        yield ("beta", self.beta)
        yield ("initial_norm", self.initial_norm)
        yield ("max_norm", self.max_norm)
        yield ("horizon", self.horizon)


def gronwall_envelope(traj: Trajectory) -> GronwallReport:
    """Smallest ``beta >= 0`` with ``||Psi(t)|| <= ||Psi(0)|| exp(beta t)`` on the recorded run."""
    t = np.asarray(traj.times)
    h = np.asarray(traj.hs_norms)
    if len(t) < 2:
        beta = 0.0
    else:
        rates = np.log(h[1:] / h[0]) / t[1:]
        beta = float(max(0.0, np.max(rates)))
    return GronwallReport(beta=beta, initial_norm=float(h[0]), max_norm=float(h.max()), horizon=float(t[-1]))


def default_horizon(state: MixedState, s: float) -> float:
    """Supremum of local windows ``T`` with ``T rho^2 < 1/2`` for ``rho = 2 ||Psi(0)||_{H^s}``."""
    rho = 2 * weighted_norm(state, s)
    return 0.5 / rho**2


def free_limit_error(state: MixedState, symbol_a: Multiplier, symbol_b: Multiplier, times, s: float) -> float:
    """Closed form of ``sup_t ||(exp(-i t a) - exp(-i t b)) Psi(0)||_{H^s}`` over ``times``."""
    coeffs = state.coefficients()
    power = np.tensordot(state.weights, np.abs(coeffs) ** 2, axes=1) * sobolev_weight(state.grid, s)
    best = 0.0
    for t in times:
        gap = np.abs(np.exp(-1j * t * symbol_a.values) - np.exp(-1j * t * symbol_b.values)) ** 2
        best = max(best, float(np.sqrt(np.sum(gap * power))))
    return best


@dataclass
class LimitReport:
    masses: np.ndarray
    errors: np.ndarray
    fitted_order: float
    horizon: float
    free_errors: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        self.errors = np.asarray(self.errors, dtype=float)
        if self.masses.shape != self.errors.shape:
            raise ValueError("masses and errors differ in length")
        if np.any(self.errors < 0):
            raise ValueError("errors must be non-negative")
        d = np.diff(self.masses)
        if not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("masses must be strictly monotone")

    def monotone(self, rel_tol: float = 0.05, allowed: int = 1) -> bool:
        """Errors non-increasing along the ladder, up to ``allowed`` rises of at most ``rel_tol``."""
        e = self.errors
        rises = e[1:] / np.where(e[:-1] > 0, e[:-1], np.inf) - 1
        bad = rises[rises > 0]
        return len(bad) <= allowed and bool(np.all(bad <= rel_tol))

    def rows(self):
        for i, (m, e) in enumerate(zip(self.masses, self.errors)):
            free = self.free_errors[i] if len(self.free_errors) else float("nan")
            yield (float(m), float(e), float(free))


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _stepper(config: RunConfig, symbol: Multiplier, w: Multiplier):
    if config.scheme == "strang":
        return lambda st: split_step(st, symbol, config.dt, w)
    return lambda st: picard_window(
        st, 0.0, config.dt, w, config.picard_tol, config.picard_max_iter,
        nodes=config.picard_nodes, s=config.s, symbol=symbol,
    ).state


def ladder_distance(config: RunConfig, state: MixedState, w: Multiplier, mass: float,
                    symbol_a: Multiplier, symbol_b: Multiplier, horizon: float) -> tuple[float, np.ndarray]:
    """Run two flows in lockstep; return the max H^s distance over steps and the step times."""
    steps = max(1, int(round(horizon / config.dt)))
    step_a, step_b = _stepper(config, symbol_a, w), _stepper(config, symbol_b, w)
    s = config.s
    limit = config.blowup_threshold * weighted_norm(state, s)
    a = b = state
    worst = 0.0
    for i in range(1, steps + 1):
        a, b = step_a(a), step_b(b)
        for st in (a, b):
            norm = weighted_norm(st, s)
            if not norm <= limit:
                raise BlowUpError(mass, i * config.dt, norm)
        worst = max(worst, weighted_norm(a - b, s))
    return worst, config.dt * np.arange(1, steps + 1)


def mass_limit_large(config: RunConfig, masses, horizon: float | None = None) -> LimitReport:
    """Semi-relativistic vs non-relativistic flow at the same mass along an increasing ladder."""
    masses = np.asarray(masses, dtype=float)
    if np.any(masses <= 0) or np.any(np.diff(masses) <= 0):
        raise ValueError("masses must be positive and increasing")
    state = init_preset(config)
    w = config.interaction(state.grid)
    if horizon is None:
        horizon = default_horizon(state, config.s)
    errors, free = [], []
    for m in masses:
        sa = family_symbol(state.grid, m, "semirel")
        sb = family_symbol(state.grid, m, "nonrel")
        err, times = ladder_distance(config, state, w, m, sa, sb, horizon)
        errors.append(err)
        free.append(free_limit_error(state, sa, sb, times, config.s))
    slope = loglog_slope(masses, errors) if len(masses) >= 2 else float("nan")
    return LimitReport(masses, errors, slope, horizon, np.array(free))


def mass_limit_zero(config: RunConfig, masses, horizon: float | None = None) -> LimitReport:
    """Flow at mass ``m`` vs the massless flow along a decreasing ladder."""
    masses = np.asarray(masses, dtype=float)
    if np.any(masses < 0) or np.any(np.diff(masses) >= 0):
        raise ValueError("masses must be non-negative and decreasing")
    state = init_preset(config)
    w = config.interaction(state.grid)
    if horizon is None:
        horizon = config.t_final
    s0 = family_symbol(state.grid, 0.0, "semirel")
    errors, free = [], []
    for m in masses:
        sm = family_symbol(state.grid, m, "semirel")
        err, times = ladder_distance(config, state, w, m, sm, s0, horizon)
        errors.append(err)
        free.append(free_limit_error(state, sm, s0, times, config.s))
    errors = np.array(errors)
    positive = (masses > 0) & (errors > 0)
    slope = loglog_slope(masses[positive], errors[positive]) if positive.sum() >= 2 else float("nan")
    return LimitReport(masses, errors, slope, horizon, np.array(free))


def hardy_ratio(u: Field, gamma: float) -> float:
    """``max_x (|x|^-gamma * |u|^2)(x) / ||u||^2_{dot H^{gamma/2}}`` with the mean-free kernel."""
    denom = sobolev_norm(u, gamma / 2, homogeneous=True) ** 2
    if not denom > 0:
        raise ValueError("hardy_ratio needs a non-constant field")
    dens = np.abs(u.values) ** 2
    if np.ptp(dens) <= 1e-14 * np.max(dens):
        raise ValueError("hardy_ratio is degenerate for constant |u|^2 (potential vanishes)")
    w = riesz_symbol(u.grid, gamma, 1.0)
    v = potential(Field(u.grid, dens), w)
    return float(np.max(v.values)) / denom


def gn_ratio(u: Field, gamma: float) -> float:
    """``||u||_{dot H^{gamma/2}} / (||u||^gamma_{dot H^{1/2}} ||u||^{1-gamma}_{L^2})``."""
    half = sobolev_norm(u, 0.5, homogeneous=True)
    l2 = sobolev_norm(u, 0.0)
    if not (half > 0 and l2 > 0):
        raise ValueError("gn_ratio needs nonzero H^1/2 and L^2 norms")
    return sobolev_norm(u, gamma / 2, homogeneous=True) / (half**gamma * l2 ** (1 - gamma))


def leibniz_ratio(u: Field, v: Field, s: float) -> float:
    """``||D^s(uv)|| / (||D^s u|| ||v||_inf + ||u||_inf ||D^s v||)``, L^2 norms, grid sup."""
    denom = (sobolev_norm(u, s, True) * v.sup_norm() + u.sup_norm() * sobolev_norm(v, s, True))
    if not denom > 0:
        raise ValueError("leibniz_ratio denominator vanishes")
    return sobolev_norm(u * v, s, True) / denom


def random_ensemble_field(grid: Grid, rng: np.random.Generator, band=(1, 8)) -> Field:
    """L^2-normalized random field on the mode band ``lo <= |m| <= hi``."""
    u = Field(grid, random_band_limited(grid, 1, band[0], band[1], rng)[0])
    return u * (1.0 / u.l2_norm())


def inequality_ensemble(grid: Grid, gamma: float, s: float, samples: int, seed: int,
                        band=(1, 8)) -> dict[str, np.ndarray]:
    """Hardy, Gagliardo-Nirenberg and Leibniz ratios over a seeded random ensemble."""
    rng = np.random.default_rng(seed)
    out = {"hardy": [], "gn": [], "leibniz": []}
    for _ in range(samples):
        u = random_ensemble_field(grid, rng, band)
        v = random_ensemble_field(grid, rng, band)
        out["hardy"].append(hardy_ratio(u, gamma))
        out["gn"].append(gn_ratio(u, gamma))
        out["leibniz"].append(leibniz_ratio(u, v, s))
    return {k: np.array(v) for k, v in out.items()}
