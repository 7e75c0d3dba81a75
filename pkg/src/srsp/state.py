"""Mixed states: weights plus orthonormal components, and their density matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Field, Grid, forward, sobolev_weight

WEIGHT_TOL = 1e-12
ORTHO_TOL = 1e-10
MAX_KERNEL_ROWS = 4096


class StateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MixedState:
    """Weights ``lambda_k`` and components ``psi_k`` stacked as ``psi[k]``.

    Only the weights are validated here (non-negative, summing to one). The
    components need not be orthonormal, so that differences and perturbations
    of states can be represented; use :func:`mixed_state` for the checked
    constructor.
    """

    grid: Grid
    weights: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        psi = np.asarray(self.psi, dtype=complex)
        if psi.shape != (weights.size,) + self.grid.shape:
            raise StateError(
                f"components have shape {psi.shape}, expected {(weights.size,) + self.grid.shape}"
            )
        if weights.size == 0:
            raise StateError("a state needs at least one component")
        if np.any(weights < 0):
            raise StateError(f"negative weight in {weights.tolist()}")
        if abs(weights.sum() - 1) > WEIGHT_TOL:
            raise StateError(f"weights sum to {weights.sum()!r}, not 1")
        if not np.all(np.isfinite(psi)):
            raise StateError("components contain non-finite values")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "psi", psi)

    @property
    def K(self) -> int:
        return self.weights.size

    @property
    def fields(self) -> list[Field]:
        return [Field(self.grid, p) for p in self.psi]

    def coefficients(self) -> np.ndarray:
        return forward(self.psi, self.grid)

    def replace(self, psi: np.ndarray) -> "MixedState":
        """Same weights and grid, new components."""
        return MixedState(self.grid, self.weights, psi)

    def charges(self) -> np.ndarray:
        """Per-component ``||psi_k||^2_{L^2}``."""
        axes = tuple(range(1, self.psi.ndim))
        return self.grid.cell_volume * np.sum(np.abs(self.psi) ** 2, axis=axes)

    def _check_compatible(self, other: "MixedState"):
        self.grid.check_same(other.grid)
        if not np.array_equal(self.weights, other.weights):
            raise StateError("states have different weights")

    def __add__(self, other: "MixedState") -> "MixedState":
        self._check_compatible(other)
        return self.replace(self.psi + other.psi)

    def __sub__(self, other: "MixedState") -> "MixedState":
        self._check_compatible(other)
        return self.replace(self.psi - other.psi)

    def __mul__(self, c) -> "MixedState":
        return self.replace(self.psi * c)

    __rmul__ = __mul__


def mixed_state(weights, components, tol: float = ORTHO_TOL) -> MixedState:
    """Validated state: weights renormalized if within 1e-12 of summing to one.

    Raises :class:`StateError` on negative weights, a weight sum off by more
    than ``1e-12``, or an orthonormality residual above ``tol``.
    """
    weights = np.asarray(weights, dtype=float).reshape(-1)
    components = list(components)
    if not components:
        raise StateError("no components given")
    grid = components[0].grid
    for f in components[1:]:
        grid.check_same(f.grid)
    psi = np.stack([f.values for f in components])
    if len(weights) != len(psi):
        raise StateError(f"{len(weights)} weights for {len(psi)} components")
    if np.any(weights < 0):
        raise StateError(f"negative weight in {weights.tolist()}")
    total = weights.sum()
    if abs(total - 1) > WEIGHT_TOL:
        raise StateError(f"weights sum to {total!r}; deviation exceeds {WEIGHT_TOL}")
    if total != 1.0:
        weights = weights / total
    state = MixedState(grid, weights, psi)
    residual = orthonormality_residual(state)
    if residual > tol:
        raise StateError(f"orthonormality residual {residual:.3e} exceeds {tol:.1e}")
    return state


def gram_matrix(state: MixedState) -> np.ndarray:
    flat = state.psi.reshape(state.K, -1)
    return state.grid.cell_volume * (flat.conj() @ flat.T)


def orthonormality_residual(state: MixedState) -> float:
    """``max |<psi_j, psi_l> - delta_jl|``."""
    return float(np.max(np.abs(gram_matrix(state) - np.eye(state.K))))


def weighted_norm(state: MixedState, s: float = 0.0, homogeneous: bool = False) -> float:
    """``(sum_k lambda_k ||psi_k||^2_{H^s})^(1/2)``; ``s = 0`` is the weighted L^2 norm."""
    weight = sobolev_weight(state.grid, s, homogeneous)
    coeffs = state.coefficients()
    per_component = np.sum(weight * np.abs(coeffs) ** 2, axis=tuple(range(1, coeffs.ndim)))
    return float(np.sqrt(np.dot(state.weights, per_component)))


def gram_schmidt(vectors: np.ndarray, grid: Grid, min_norm: float = 1e-8) -> np.ndarray:
    """Orthonormalize the rows of ``vectors`` in the discrete L^2 inner product.

    Modified Gram-Schmidt with one re-orthogonalization pass. A vector whose
    norm after projection drops below ``min_norm`` times its original norm
    raises :class:`StateError` naming the offending index.
    """
    dv = grid.cell_volume
    out = np.array(vectors, dtype=complex, copy=True)
    flat = out.reshape(len(out), -1)
    for j in range(len(flat)):
        original = np.sqrt(dv * np.vdot(flat[j], flat[j]).real)
        for _ in range(2):
            for i in range(j):
                flat[j] -= dv * np.vdot(flat[i], flat[j]) * flat[i]
        norm = np.sqrt(dv * np.vdot(flat[j], flat[j]).real)
        if not original > 0 or norm < min_norm * original:
            raise StateError(f"Gram-Schmidt breakdown at component {j}: inputs nearly dependent")
        flat[j] /= norm
    return out


@dataclass(frozen=True, eq=False)
class Kernel:
    """Dense density-matrix kernel ``rho(x, y)`` on the flattened grid."""

    grid: Grid
    values: np.ndarray

    def operator(self) -> np.ndarray:
        """Matrix of the integral operator (kernel times cell volume)."""
        return self.grid.cell_volume * self.values

    def trace(self) -> float:
        return float(self.grid.cell_volume * np.trace(self.values).real)

    def diagonal(self) -> np.ndarray:
        return np.diag(self.values).real.reshape(self.grid.shape)

    def compose(self, other: "Kernel") -> "Kernel":
        """Kernel of the operator product, ``int rho1(x,y) rho2(y,z) dy``."""
        self.grid.check_same(other.grid)
        return Kernel(self.grid, self.grid.cell_volume * self.values @ other.values)

    def eigenvalues(self) -> np.ndarray:
        """Operator eigenvalues in descending order."""
        return np.linalg.eigvalsh(self.operator())[::-1]

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.values - self.values.conj().T)))


def density_matrix(state: MixedState) -> Kernel:
    rows = state.grid.size
    if rows > MAX_KERNEL_ROWS:
        raise StateError(f"kernel would have {rows} rows; limit is {MAX_KERNEL_ROWS}")
    flat = state.psi.reshape(state.K, -1)
    values = (flat.T * state.weights) @ flat.conj()
    return Kernel(state.grid, values)


def hamiltonian_matrix(grid: Grid, symbol: np.ndarray, potential: np.ndarray) -> np.ndarray:
    """Dense matrix of ``a(D) + V(x)`` acting on grid samples."""
    rows = grid.size
    if rows > MAX_KERNEL_ROWS:
        raise StateError(f"matrix would have {rows} rows; limit is {MAX_KERNEL_ROWS}")
    eye = np.eye(rows, dtype=complex).reshape((rows,) + grid.shape)
    axes = tuple(range(1, 1 + grid.dim))
    cols = np.fft.ifftn(np.asarray(symbol) * np.fft.fftn(eye, axes=axes), axes=axes)
    return cols.reshape(rows, rows).T + np.diag(np.asarray(potential).reshape(-1))


def von_neumann_rhs(kernel: Kernel, hamiltonian: np.ndarray) -> np.ndarray:
    """``-i [H, rho]`` as a kernel, i.e. the right-hand side of ``d rho / dt``."""
    return -1j * (hamiltonian @ kernel.values - kernel.values @ hamiltonian)
