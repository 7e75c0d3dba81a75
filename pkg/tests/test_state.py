import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_state
from srsp.dynamics import strang_step
from srsp.hartree import state_potential
from srsp.spectral import Field, kinetic_symbol, make_grid, riesz_symbol
from srsp.state import (
    MixedState,
    StateError,
    density_matrix,
    gram_matrix,
    gram_schmidt,
    hamiltonian_matrix,
    mixed_state,
    orthonormality_residual,
    von_neumann_rhs,
    weighted_norm,
)


def plane_wave_state(grid, modes, weights):
    return mixed_state(weights, [Field(grid, grid.mode_array(m)) for m in modes])


class TestConstruction:
    grid = make_grid(1, 32, 2 * np.pi)

    def test_plane_waves_orthonormal(self):
        st_ = plane_wave_state(self.grid, [0, 1, -1, 5], [0.4, 0.3, 0.2, 0.1])
        assert orthonormality_residual(st_) < 1e-14
        assert np.allclose(st_.charges(), 1, atol=1e-14)

    def test_renormalizes_tiny_deviation(self):
        st_ = plane_wave_state(self.grid, [0, 1], [0.5, 0.5 + 5e-13])
        assert st_.weights.sum() == pytest.approx(1.0, abs=1e-15)

    def test_rejects_weight_sum(self):
        with pytest.raises(StateError, match="sum"):
            plane_wave_state(self.grid, [0, 1], [0.5, 0.6])

    def test_rejects_negative_weight(self):
        with pytest.raises(StateError, match="negative"):
            plane_wave_state(self.grid, [0, 1], [1.5, -0.5])

    def test_rejects_non_orthonormal(self):
        u = self.grid.mode_array(1)
        with pytest.raises(StateError, match="orthonormality"):
            mixed_state([0.5, 0.5], [Field(self.grid, u), Field(self.grid, (u + self.grid.mode_array(2)) / 2)])

    def test_rejects_count_mismatch(self):
        with pytest.raises(StateError):
            mixed_state([1.0], [Field(self.grid, self.grid.mode_array(m)) for m in (0, 1)])

    def test_raw_state_shape(self):
        with pytest.raises(StateError, match="shape"):
            MixedState(self.grid, [1.0], np.zeros((2, 32)))

    def test_difference_keeps_weights(self):
        a = plane_wave_state(self.grid, [0, 1], [0.7, 0.3])
        d = a - a
        assert np.array_equal(d.weights, a.weights)
        assert weighted_norm(d) == 0.0


class TestWeightedNorm:
    def test_plane_waves(self):
        grid = make_grid(1, 32, 2 * np.pi)
        st_ = plane_wave_state(grid, [0, 2, -3], [0.5, 0.25, 0.25])
        s = 0.75
        expected = np.sqrt(0.5 + 0.25 * 5**s + 0.25 * 10**s)
        assert weighted_norm(st_, s) == pytest.approx(expected, rel=1e-14)

    def test_explicit_dft_matrix(self):
        # independent of FFT: build the orthonormal-basis coefficients with a dense DFT matrix
        grid = make_grid(1, 16, 3.0)
        st_ = random_state(grid, 3, np.random.default_rng(4))
        x = grid.coords[0]
        k = grid.axis_wavenumbers
        basis = np.exp(1j * np.outer(k, x)) / np.sqrt(grid.box_length)
        coeffs = grid.spacing * st_.psi @ basis.conj().T
        s = 1.3
        per = np.sum((1 + k**2) ** s * np.abs(coeffs) ** 2, axis=1)
        assert weighted_norm(st_, s) == pytest.approx(np.sqrt(st_.weights @ per), rel=1e-13)

    def test_l2_of_orthonormal_state_is_one(self):
        grid = make_grid(2, 16, 5.0)
        assert weighted_norm(random_state(grid, 4, np.random.default_rng(0))) == pytest.approx(1.0, rel=1e-13)


class TestGramSchmidt:
    @given(seed=st.integers(0, 10_000), K=st.integers(1, 8))
    @settings(max_examples=25, deadline=None)
    def test_orthonormal_output(self, seed, K):
        grid = make_grid(1, 32, 7.0)
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal((K, 32)) + 1j * rng.standard_normal((K, 32))
        out = gram_schmidt(raw, grid)
        g = grid.cell_volume * out.conj() @ out.T
        assert np.max(np.abs(g - np.eye(K))) < 1e-12

    def test_dependent_input_names_index(self):
        grid = make_grid(1, 16, 1.0)
        a = grid.mode_array(1)
        with pytest.raises(StateError, match="component 2"):
            gram_schmidt(np.array([a, grid.mode_array(2), 2 * a]), grid)


class TestDensityMatrix:
    def test_trace_spectrum_and_projection(self):
        grid = make_grid(1, 64, 6.0)
        weights = np.array([0.5, 0.3, 0.2])
        st_ = random_state(grid, 3, np.random.default_rng(2), weights)
        rho = density_matrix(st_)
        assert rho.trace() == pytest.approx(1.0, abs=1e-13)
        assert rho.hermiticity_error() < 1e-15
        ev = rho.eigenvalues()
        assert np.allclose(ev[:3], weights, atol=1e-13)
        assert np.max(np.abs(ev[3:])) < 1e-13
        # rho^2 has eigenvalues lambda^2
        assert rho.compose(rho).trace() == pytest.approx(np.sum(weights**2), abs=1e-13)

    def test_diagonal_is_density(self):
        grid = make_grid(2, 16, 4.0)
        st_ = random_state(grid, 2, np.random.default_rng(3))
        dens = np.tensordot(st_.weights, np.abs(st_.psi) ** 2, axes=1)
        assert np.allclose(density_matrix(st_).diagonal(), dens, rtol=0, atol=1e-15)

    def test_size_guard(self):
        grid = make_grid(3, 32, 4.0)
        st_ = MixedState(grid, [1.0], np.zeros((1,) + grid.shape))
        with pytest.raises(StateError, match="limit"):
            density_matrix(st_)

    def test_gram_matches_operator_trace(self):
        grid = make_grid(1, 32, 3.0)
        st_ = random_state(grid, 2, np.random.default_rng(5))
        assert np.allclose(gram_matrix(st_), np.eye(2), atol=1e-13)


class TestHamiltonianMatrix:
    def test_matches_multiplier_action(self):
        grid = make_grid(2, 8, 3.0)
        rng = np.random.default_rng(6)
        sym = kinetic_symbol(grid, 0.8).values
        v = rng.standard_normal(grid.shape)
        u = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        H = hamiltonian_matrix(grid, sym, v)
        direct = np.fft.ifftn(sym * np.fft.fftn(u)) + v * u
        assert np.allclose(H @ u.reshape(-1), direct.reshape(-1), atol=1e-13)
        assert np.max(np.abs(H - H.conj().T)) < 1e-13

    def test_von_neumann_finite_difference(self):
        # the Strang flow of the components is consistent with i d rho/dt = [H, rho]
        grid = make_grid(1, 32, 8.0)
        st_ = random_state(grid, 3, np.random.default_rng(7))
        mass, dt = 1.0, 1e-4
        w = riesz_symbol(grid, 0.5, 1.0)
        fwd = density_matrix(strang_step(st_, mass, dt, w)).values
        bwd = density_matrix(strang_step(st_, mass, -dt, w)).values
        fd = (fwd - bwd) / (2 * dt)
        H = hamiltonian_matrix(grid, kinetic_symbol(grid, mass).values, state_potential(st_, w))
        rhs = von_neumann_rhs(density_matrix(st_), H)
        assert np.max(np.abs(fd - rhs)) < 1e-6 * np.max(np.abs(rhs))
