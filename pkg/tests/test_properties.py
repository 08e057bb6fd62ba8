"""Randomised invariance checks over generated complexes."""

import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from chromonet.bath import BathSpec
from chromonet.exciton import build_hamiltonian, spectral_descriptors
from chromonet.geometry import Configuration, coupling_matrix, sample_configuration
from chromonet.kernels import numba_backend, numpy_backend
from chromonet.pathways import max_path_strength
from chromonet.tc2 import PositivityWarning, SinkSpec, ete_laplace, memory_kernel
from conftest import random_hermitian, random_rotation

sizes = st.integers(min_value=3, max_value=9)
diameters = st.sampled_from([30.0, 45.0, 60.0, 100.0])
seeds = st.integers(min_value=0, max_value=2**32 - 1)
lambdas = st.sampled_from([0.0, 35.0, 350.0])
common = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def eta(config, lam):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PositivityWarning)
        return ete_laplace(build_hamiltonian(config), BathSpec(lam), SinkSpec(config.trap_index),
                           config.initial_index).eta_raw


@common
@given(n=sizes, d=diameters, seed=seeds)
def test_sampling_is_deterministic_and_valid(n, d, seed):
    a = sample_configuration(n, d, rng_seed=seed)
    assert a.to_json() == sample_configuration(n, d, rng_seed=seed).to_json()
    assert a.min_distance() >= 5.0
    assert np.linalg.norm(a.positions, axis=1).max() <= d / 2 + 1e-12
    assert Configuration.from_json(a.to_json()) == a


@common
@given(n=sizes, d=diameters, seed=seeds, lam=lambdas, rot_seed=seeds)
def test_rigid_rotation_keeps_efficiency(n, d, seed, lam, rot_seed):
    config = sample_configuration(n, d, rng_seed=seed)
    turned = config.rotated(random_rotation(np.random.default_rng(rot_seed)))
    np.testing.assert_allclose(coupling_matrix(turned), coupling_matrix(config), rtol=1e-9, atol=1e-9)
    assert eta(turned, lam) == pytest.approx(eta(config, lam), abs=1e-9)


@common
@given(n=sizes, d=diameters, seed=seeds, lam=lambdas, shift=st.floats(-2000, 2000))
def test_energy_shift_keeps_efficiency(n, d, seed, lam, shift):
    config = sample_configuration(n, d, rng_seed=seed)
    h = build_hamiltonian(config)
    sinks = SinkSpec(config.trap_index)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PositivityWarning)
        base = ete_laplace(h, BathSpec(lam), sinks, 0).eta_raw
        moved = ete_laplace(h.shifted(shift), BathSpec(lam), sinks, 0).eta_raw
    assert moved == pytest.approx(base, abs=1e-9)
    a, b = spectral_descriptors(h, config.trap_index), spectral_descriptors(h.shifted(shift), config.trap_index)
    assert b.mean_gap == pytest.approx(a.mean_gap, abs=1e-9)
    assert b.ground_trap_overlap == pytest.approx(a.ground_trap_overlap, abs=1e-9)


@common
@given(n=sizes, d=diameters, seed=seeds, lam=lambdas, data=st.data())
def test_relabelling_intermediates_keeps_efficiency(n, d, seed, lam, data):
    config = sample_configuration(n, d, rng_seed=seed)
    mids = data.draw(st.permutations(list(range(1, n - 1))))
    moved = config.permuted([0, *mids, n - 1])
    assert eta(moved, lam) == pytest.approx(eta(config, lam), abs=1e-9)
    h, hm = build_hamiltonian(config), build_hamiltonian(moved)
    assert max_path_strength(hm, 0, n - 1) == pytest.approx(max_path_strength(h, 0, n - 1), rel=1e-12)


@common
@given(n=st.integers(2, 6), seed=seeds)
def test_kernel_output_is_traceless(n, seed):
    h = build_hamiltonian(sample_configuration(n, 30.0, rng_seed=seed))
    rho = random_hermitian(np.random.default_rng(seed), n)
    assert abs(np.trace(memory_kernel(h, BathSpec(35.0)).apply(rho))) < 1e-9


@pytest.mark.skipif(numba_backend is None, reason="numba not installed")
@common
@given(n=st.integers(2, 8), seed=seeds, threshold=st.floats(0.0, 800.0))
def test_backends_agree_on_random_couplings(n, seed, threshold):
    rng = np.random.default_rng(seed)
    a = np.abs(rng.uniform(-500, 500, (n, n)))
    a = np.triu(a, 1) + np.triu(a, 1).T
    np.testing.assert_allclose(numba_backend.path_strengths(a, 0, n - 1),
                               numpy_backend.path_strengths(a, 0, n - 1), rtol=1e-13)
    assert numba_backend.count_paths_above(a, 0, n - 1, threshold) == numpy_backend.count_paths_above(
        a, 0, n - 1, threshold)
