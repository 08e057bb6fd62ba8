"""Exciton transport efficiency of random multichromophoric complexes.

Random geometries are sampled in a sphere, turned into Frenkel exciton
Hamiltonians, and propagated with a second-order time-convolution master
equation over a Drude-Lorentz bath.  Ensemble sweeps relate the resulting
transfer efficiencies to spectral and spatial descriptors.
"""

from .bath import BathSpec, mean_phonon_energy
from .exciton import ExcitonHamiltonian, SpectralDescriptors, build_hamiltonian, spectral_descriptors
from .geometry import Chromophore, Configuration, CouplingModel, coupling_matrix, sample_configuration
from .pathways import (
    Path,
    dominant_path_count,
    enumerate_paths,
    max_path_strength,
    path_strength,
    path_summary,
    z_axis_proximity,
)
from .tc2 import SinkSpec, TransportResult, ete_laplace, memory_kernel, propagate_time_domain
from .ensemble import SampleRecord, SweepPlan, correlation_report, run_cell, run_plan, select_extremes

__version__ = "0.1.0"

__all__ = [
    "BathSpec", "mean_phonon_energy",
    "ExcitonHamiltonian", "SpectralDescriptors", "build_hamiltonian", "spectral_descriptors",
    "Chromophore", "Configuration", "CouplingModel", "coupling_matrix", "sample_configuration",
    "Path", "dominant_path_count", "enumerate_paths", "max_path_strength", "path_strength",
    "path_summary", "z_axis_proximity",
    "SinkSpec", "TransportResult", "ete_laplace", "memory_kernel", "propagate_time_domain",
    "SampleRecord", "SweepPlan", "correlation_report", "run_cell", "run_plan", "select_extremes",
]
