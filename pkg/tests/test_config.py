from pathlib import Path

import numpy as np
import pytest

from helpers import REFERENCE, config
from srsp.config import ConfigError, load_config, parse_config, parse_weights, validate
from srsp.presets import band_modes, default_modes, init_preset
from srsp.spectral import make_grid
from srsp.state import StateError, orthonormality_residual

MINIMAL = """
dim = 1
gamma = 0.5
coupling = 1.0
mass = 1.0
components = 2
"""


class TestParse:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.grid_points == 128 and cfg.scheme == "strang" and cfg.s == 0.5
        assert np.allclose(cfg.weight_array(), [0.5, 0.5])

    def test_lists_become_tuples(self):
        cfg = parse_config(MINIMAL + "weights = [0.75, 0.25]\nband = [1, 3]\n")
        assert cfg.weights == (0.75, 0.25) and cfg.band == (1, 3)
        hash(cfg)

    def test_syntax_error(self):
        with pytest.raises(ConfigError, match="syntax"):
            parse_config("dim = = 1")

    def test_nested_table(self):
        with pytest.raises(ConfigError, match="nested"):
            parse_config(MINIMAL + "[grid]\npoints = 64\n")

    def test_reports_every_violation(self):
        bad = dict(REFERENCE, grid_points=100, dt=-1.0, scheme="euler", mass=-1.0)
        with pytest.raises(ConfigError) as info:
            validate(bad)
        keys = " ".join(info.value.errors)
        for key in ("grid_points", "dt", "scheme", "mass"):
            assert f"'{key}'" in keys

    def test_gamma_one_in_1d(self):
        with pytest.raises(ConfigError) as info:
            validate(dict(REFERENCE, gamma=1.0))
        assert info.value.errors == ["'gamma' = 1.0: must satisfy 0 < gamma < 1 when dim = 1"]

    def test_gamma_one_in_3d_ok(self):
        assert validate(dict(REFERENCE, dim=3, gamma=1.0)).gamma == 1.0

    @pytest.mark.parametrize(
        "change",
        [dict(sobolev_s=0.1, gamma=0.5), dict(weights=[0.5, 0.6, 0.1]), dict(family="nonrel", mass=0.0),
         dict(dt=2.0), dict(unknown=1), dict(band=[4, 2]), dict(widths=0.0), dict(dealias=1)],
    )
    def test_rejects(self, change):
        with pytest.raises(ConfigError):
            validate(dict(REFERENCE, **change))

    def test_missing_required(self):
        with pytest.raises(ConfigError, match="missing required key 'mass'"):
            validate({k: v for k, v in REFERENCE.items() if k != "mass"})

    def test_digest_stable(self):
        assert config().digest() == config().digest()
        assert config().digest() != config(seed=1).digest()


class TestWeights:
    def test_geometric(self):
        assert np.allclose(parse_weights("geometric:0.5", 3), np.array([4, 2, 1]) / 7)

    def test_explicit(self):
        assert np.allclose(parse_weights([0.2, 0.8], 2), [0.2, 0.8])

    @pytest.mark.parametrize("value", ["geometric:-1", "geometric:x", "flat", [0.5], [1.5, -0.5]])
    def test_rejects(self, value):
        with pytest.raises(ValueError):
            parse_weights(value, 2)


class TestPresets:
    def test_default_modes(self):
        assert default_modes(3, 1).tolist() == [[0], [1], [-1]]
        assert default_modes(1, 3).tolist() == [[0, 0, 0]]

    @pytest.mark.parametrize("preset", ["gaussian", "plane_waves", "random_orthonormal"])
    def test_orthonormal(self, preset):
        state = init_preset(config(init_preset=preset, components=4, weights="uniform", band=[0, 6]))
        assert orthonormality_residual(state) < 1e-12
        assert state.K == 4

    def test_seeded(self):
        cfg = config(init_preset="random_orthonormal", seed=7)
        assert np.array_equal(init_preset(cfg).psi, init_preset(cfg).psi)
        assert not np.array_equal(init_preset(cfg).psi, init_preset(cfg.replace(seed=8)).psi)

    def test_band_excludes_nyquist(self):
        grid = make_grid(1, 16, 1.0)
        assert max(abs(m[0]) for m in band_modes(grid, 0, 100)) == 7

    def test_random_band_is_band_limited(self):
        cfg = config(init_preset="random_orthonormal", band=[3, 5], components=2, weights="uniform")
        state = init_preset(cfg)
        power = np.sum(np.abs(state.coefficients()) ** 2, axis=0)
        m = np.abs(state.grid.mode_indices)
        assert np.all(power[(m < 3) | (m > 5)] < 1e-25)

    def test_duplicate_modes(self):
        with pytest.raises(StateError):
            init_preset(config(init_preset="plane_waves", components=2, weights="uniform", modes=[1, 1]))

    def test_dependent_gaussians(self):
        with pytest.raises(StateError):
            init_preset(config(components=2, weights="uniform", centers=[0.0, 0.0]))


@pytest.mark.parametrize("path", sorted((Path(__file__).parents[1] / "configs").glob("*.toml")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert orthonormality_residual(init_preset(cfg)) < 1e-12
