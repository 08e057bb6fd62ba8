"""Frenkel exciton Hamiltonian in the single-excitation manifold."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Configuration, CouplingModel, coupling_matrix

DEGENERACY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ExcitonHamiltonian:
    """Real symmetric site-basis Hamiltonian in cm^-1 (basis = configuration site order)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("Hamiltonian must be a square matrix")
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def site_energies(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    def shifted(self, c: float) -> ExcitonHamiltonian:
        return ExcitonHamiltonian(self.matrix + c * np.eye(self.n))


@dataclass(frozen=True)
class SpectralDescriptors:
    eigenvalues: np.ndarray
    ground_trap_overlap: float
    mean_gap: float
    gap_std: float
    degenerate_ground: bool = False


def build_hamiltonian(config: Configuration, model: CouplingModel = CouplingModel()) -> ExcitonHamiltonian:
    h = coupling_matrix(config, model)
    h[np.diag_indices_from(h)] = config.energies
    return ExcitonHamiltonian(h)


def eigensystem(h: ExcitonHamiltonian):
    """Ascending eigenvalues and orthonormal eigenvectors (columns)."""
    return np.linalg.eigh(h.matrix)


def spectral_descriptors(h: ExcitonHamiltonian, trap_index: int) -> SpectralDescriptors:
    """Exciton level statistics and the trap weight of the lowest exciton.

    ``mean_gap`` and ``gap_std`` are the mean and (population) standard
    deviation of adjacent level spacings.  If the lowest level is degenerate
    within 1e-9 cm^-1, the overlap is the largest trap weight attainable in
    the degenerate subspace, i.e. the squared norm of the projection of the
    trap site onto it, and ``degenerate_ground`` is set.
    """
    if not np.array_equal(h.matrix, h.matrix.T):
        raise ValueError("Hamiltonian must be symmetric")
    evals, evecs = eigensystem(h)
    gaps = np.diff(evals)
    ground = np.flatnonzero(evals - evals[0] <= DEGENERACY_TOL)
    weights = np.abs(evecs[trap_index, :]) ** 2
    overlap = float(weights[ground].sum())
    return SpectralDescriptors(
        eigenvalues=evals,
        ground_trap_overlap=min(overlap, 1.0),
        mean_gap=float(gaps.mean()) if gaps.size else 0.0,
        gap_std=float(gaps.std()) if gaps.size else 0.0,
        degenerate_ground=len(ground) > 1,
    )
