"""Flat TOML run configuration."""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from typing import Any

import numpy as np

from .dynamics import FAMILIES, SCHEMES, IntegratorParams, default_sobolev_s
from .spectral import Grid, Multiplier, dealias_mask, riesz_symbol

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PRESETS = ("gaussian", "plane_waves", "random_orthonormal")
REQUIRED = ("dim", "gamma", "coupling", "mass", "components")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists one message per offending key."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class RunConfig:
    dim: int
    gamma: float
    coupling: float
    mass: float
    components: int
    grid_points: int = 128
    box_length: float = 20.0
    weights: Any = "uniform"
    init_preset: str = "gaussian"
    centers: Any = None
    widths: Any = 1.0
    modes: Any = None
    band: Any = (0, 4)
    seed: int = 0
    scheme: str = "strang"
    family: str = "semirel"
    dt: float = 1e-3
    t_final: float = 1.0
    picard_tol: float = 1e-12
    picard_max_iter: int = 50
    picard_nodes: int = 8
    sobolev_s: Any = None
    blowup_threshold: float = 10.0
    dealias: bool = False
    output_dir: str = "run"
    snapshot_every: int = 0

    @property
    def s(self) -> float:
        return default_sobolev_s(self.gamma) if self.sobolev_s is None else float(self.sobolev_s)

    def grid(self) -> Grid:
        return Grid(self.dim, self.grid_points, float(self.box_length))

    def interaction(self, grid: Grid | None = None, zero_mode: float = 0.0) -> Multiplier:
        grid = grid or self.grid()
        w = riesz_symbol(grid, self.gamma, self.coupling, zero_mode=zero_mode)
        return w * dealias_mask(grid) if self.dealias else w

    def params(self, **overrides) -> IntegratorParams:
        kw = dict(
            dt=self.dt,
            t_final=self.t_final,
            scheme=self.scheme,
            picard_tol=self.picard_tol,
            picard_max_iter=self.picard_max_iter,
            picard_nodes=self.picard_nodes,
            blowup_threshold=self.blowup_threshold,
            sobolev_s=self.s,
        )
        kw.update(overrides)
        return IntegratorParams(**kw)

    def weight_array(self) -> np.ndarray:
        return parse_weights(self.weights, self.components)

    def replace(self, **changes) -> "RunConfig":
        data = asdict(self)
        data.update(changes)
        return validate(data)

    def digest(self) -> str:
        text = json.dumps(asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def parse_weights(value, K: int) -> np.ndarray:
    if isinstance(value, str):
        if value == "uniform":
            return np.full(K, 1.0 / K)
        if value.startswith("geometric:"):
            r = float(value.split(":", 1)[1])
            if not r > 0:
                raise ValueError(f"geometric ratio must be positive, got {r}")
            lam = r ** np.arange(1, K + 1)
            return lam / lam.sum()
        raise ValueError(f"unknown weights {value!r}")
    lam = np.asarray(value, dtype=float)
    if lam.shape != (K,):
        raise ValueError(f"expected {K} weights, got {len(lam)}")
    if np.any(lam < 0):
        raise ValueError(f"weights must be >= 0, got {lam.tolist()}")
    if abs(lam.sum() - 1) > 1e-12:
        raise ValueError(f"weights must sum to 1, got sum {lam.sum()!r}")
    return lam


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_real(x) -> bool:
    return (isinstance(x, (int, float)) and not isinstance(x, bool)) and math.isfinite(x)


def validate(data: dict) -> RunConfig:
    """Check every key against its admissible range; raise ConfigError listing all violations."""
    known = {f.name for f in fields(RunConfig)}
    errors = [f"unknown key '{k}'" for k in data if k not in known]
    errors += [f"missing required key '{k}'" for k in REQUIRED if k not in data]
    if errors:
        raise ConfigError(errors)
    d = {f.name: f.default for f in fields(RunConfig) if f.name not in REQUIRED}
    d.update(data)

    def need(cond, key, msg):
        if not cond:
            errors.append(f"'{key}' = {d[key]!r}: {msg}")
        return cond

    if need(_is_int(d["dim"]) and d["dim"] in (1, 2, 3), "dim", "must be 1, 2 or 3"):
        if need(_is_real(d["gamma"]), "gamma", "must be a real number"):
            if d["dim"] == 1:
                need(0 < d["gamma"] < 1, "gamma", "must satisfy 0 < gamma < 1 when dim = 1")
            else:
                need(0 < d["gamma"] <= 1, "gamma", "must satisfy 0 < gamma <= 1 when dim >= 2")
    need(_is_real(d["coupling"]), "coupling", "must be a real number")
    need(_is_real(d["mass"]) and d["mass"] >= 0, "mass", "must be a real number >= 0")
    K_ok = need(_is_int(d["components"]) and d["components"] >= 1, "components", "must be an integer >= 1")
    n = d["grid_points"]
    need(_is_int(n) and n >= 8 and not n & (n - 1), "grid_points", "must be a power of two >= 8")
    need(_is_real(d["box_length"]) and d["box_length"] > 0, "box_length", "must be > 0")
    if K_ok:
        try:
            w = d["weights"]
            parse_weights(list(w) if isinstance(w, (list, tuple)) else w, d["components"])
        except (ValueError, TypeError) as exc:
            errors.append(f"'weights' = {d['weights']!r}: {exc} (need K values >= 0 summing to 1, "
                          f"'uniform', or 'geometric:r' with r > 0)")
    need(d["init_preset"] in PRESETS, "init_preset", f"must be one of {', '.join(PRESETS)}")
    need(d["scheme"] in SCHEMES, "scheme", f"must be one of {', '.join(SCHEMES)}")
    need(d["family"] in FAMILIES, "family", f"must be one of {', '.join(FAMILIES)}")
    if d["family"] == "nonrel" and _is_real(d["mass"]):
        need(d["mass"] > 0, "mass", "must be > 0 for the nonrel family")
    dt_ok = need(_is_real(d["dt"]) and d["dt"] > 0, "dt", "must be > 0")
    tf_ok = need(_is_real(d["t_final"]) and d["t_final"] > 0, "t_final", "must be > 0")
    if dt_ok and tf_ok:
        need(d["dt"] <= d["t_final"], "dt", "must not exceed t_final")
    need(_is_real(d["picard_tol"]) and d["picard_tol"] > 0, "picard_tol", "must be > 0")
    need(_is_int(d["picard_max_iter"]) and d["picard_max_iter"] >= 1, "picard_max_iter", "must be an integer >= 1")
    need(_is_int(d["picard_nodes"]) and d["picard_nodes"] >= 1, "picard_nodes", "must be an integer >= 1")
    need(_is_real(d["blowup_threshold"]) and d["blowup_threshold"] > 1, "blowup_threshold", "must be > 1")
    if d["sobolev_s"] is not None and need(_is_real(d["sobolev_s"]), "sobolev_s", "must be a real number"):
        if _is_real(d["gamma"]):
            need(d["sobolev_s"] >= d["gamma"] / 2, "sobolev_s", "must satisfy sobolev_s >= gamma / 2")
    need(isinstance(d["dealias"], bool), "dealias", "must be true or false")
    need(_is_int(d["seed"]) and d["seed"] >= 0, "seed", "must be an integer >= 0")
    need(_is_int(d["snapshot_every"]) and d["snapshot_every"] >= 0, "snapshot_every", "must be an integer >= 0")
    need(isinstance(d["output_dir"], str) and d["output_dir"], "output_dir", "must be a non-empty string")
    widths = d["widths"]
    need(
        _is_real(widths) and widths > 0
        or isinstance(widths, (list, tuple)) and all(_is_real(x) and x > 0 for x in widths),
        "widths", "must be a positive number or a list of positive numbers",
    )
    band = d["band"]
    need(
        isinstance(band, (list, tuple)) and len(band) == 2 and all(_is_real(b) and b >= 0 for b in band)
        and band[0] <= band[1],
        "band", "must be [lo, hi] with 0 <= lo <= hi (mode-index radii)",
    )
    if errors:
        raise ConfigError(errors)
    for key in ("gamma", "coupling", "mass", "box_length", "dt", "t_final", "picard_tol", "blowup_threshold"):
        d[key] = float(d[key])
    for key in ("weights", "centers", "modes", "band", "widths"):
        if isinstance(d[key], list):
            d[key] = _freeze(d[key])
    return RunConfig(**d)


def _freeze(x):
    return tuple(_freeze(v) for v in x) if isinstance(x, (list, tuple)) else x


def parse_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"syntax error: {exc}"]) from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError([f"'{k}': nested tables are not allowed" for k in nested])
    return validate(data)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
