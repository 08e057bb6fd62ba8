import warnings

import numpy as np
import pytest
from scipy import integrate, linalg

from chromonet.bath import BathSpec
from chromonet.exciton import ExcitonHamiltonian, build_hamiltonian
from chromonet.geometry import sample_configuration
from chromonet.tc2 import (
    LiouvilleOperator,
    PositivityWarning,
    SinkSpec,
    SolverError,
    _AugmentedSystem,
    build_generator,
    coherent_generator,
    ete_laplace,
    memory_kernel,
    propagate_time_domain,
    sink_generator,
    unvec,
    vec,
)
from chromonet.units import CM_TO_RAD_PS
from conftest import random_hermitian

BATH = BathSpec(35.0, 50.0, 298.0)


def hamiltonian(n, d, seed):
    return build_hamiltonian(sample_configuration(n, d, rng_seed=seed))


def test_vec_is_column_stacking():
    x = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(vec(x), [0, 3, 1, 4, 2, 5])
    np.testing.assert_array_equal(unvec(vec(np.eye(3)), 3), np.eye(3))


def test_coherent_generator_is_commutator(ham7):
    rho = random_hermitian(np.random.default_rng(1), 7)
    hw = ham7.matrix * CM_TO_RAD_PS
    np.testing.assert_allclose(coherent_generator(ham7).apply(rho), -1j * (hw @ rho - rho @ hw), atol=1e-10)


def test_sinks_alone_are_diagonal():
    sinks = SinkSpec(2, r_trap=0.7, r_loss=(0.1, 0.2, 0.3))
    gen = build_generator(ExcitonHamiltonian(np.zeros((3, 3))), sinks).matrix
    assert np.count_nonzero(gen - np.diag(np.diag(gen))) == 0
    r = np.array([0.1, 0.2, 1.0])
    for m in range(3):
        for n in range(3):
            assert gen[m + 3 * n, m + 3 * n] == pytest.approx(-(r[m] + r[n]))


def test_commutator_part_is_traceless(ham7):
    rng = np.random.default_rng(3)
    gen = coherent_generator(ham7)
    for _ in range(100):
        assert abs(np.trace(gen.apply(random_hermitian(rng, 7)))) < 1e-9


def test_liouville_operator_arithmetic(ham7):
    total = coherent_generator(ham7) + sink_generator(7, SinkSpec(6))
    back = total - sink_generator(7, SinkSpec(6))
    assert isinstance(back, LiouvilleOperator)
    np.testing.assert_allclose(back.matrix, coherent_generator(ham7).matrix)


def test_single_site_exponential_decay():
    h = ExcitonHamiltonian(np.zeros((1, 1)))
    traj, _ = propagate_time_domain(h, BathSpec(0.0), SinkSpec(0, 1.0, 1e-3), 0, t_max=3.0)
    np.testing.assert_allclose(traj.populations[:, 0], np.exp(-2 * 1.001 * traj.times), atol=1e-12)


def test_kernel_vanishes_without_bath(ham7):
    assert not np.any(memory_kernel(ham7, BathSpec(0.0)).matrix)


def test_kernel_preserves_hermiticity(ham7):
    rng = np.random.default_rng(5)
    for s in (0.0, 3.0):
        k = memory_kernel(ham7, BATH, s)
        for _ in range(100):
            out = k.apply(random_hermitian(rng, 7))
            assert np.linalg.norm(out - out.conj().T) < 1e-10


def test_kernel_matches_time_quadrature():
    h = hamiltonian(3, 15.0, 8)
    hw = h.matrix * CM_TO_RAD_PS
    evals, vecs = np.linalg.eigh(hw)
    amp = complex(2 * 35 * 0.6950348 * 298, -35 * 50) * CM_TO_RAD_PS**2
    g = 50 * CM_TO_RAD_PS
    rho = random_hermitian(np.random.default_rng(0), 3)
    proj = [np.diag(np.eye(3)[j]) for j in range(3)]

    def integrand(t):
        u = (vecs * np.exp(-1j * evals * t)) @ vecs.conj().T
        c = amp * np.exp(-g * t)
        out = np.zeros((3, 3), complex)
        for s in proj:
            inner = c * (u @ (s @ rho) @ u.conj().T) - np.conj(c) * (u @ (rho @ s) @ u.conj().T)
            out += s @ inner - inner @ s
        return out.ravel()

    ref, _ = integrate.quad_vec(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12)
    got = memory_kernel(h, BATH, 0.0).apply(rho)
    assert np.abs(got - ref.reshape(3, 3)).max() < 1e-6 * max(1.0, np.abs(ref).max())


def test_initial_at_trap_closed_form():
    h = ExcitonHamiltonian(np.zeros((1, 1)))
    res = ete_laplace(h, BathSpec(0.0), SinkSpec(0, 1.0, 1e-3), 0)
    assert res.eta == pytest.approx(1.0 / 1.001, abs=1e-9)
    assert res.eta == pytest.approx(0.999001, abs=1e-6)


def test_no_coupling_no_transfer():
    h = ExcitonHamiltonian(np.diag([0.0, 50.0, -30.0]))
    res = ete_laplace(h, BATH, SinkSpec(2), 0)
    assert res.eta == pytest.approx(0.0, abs=1e-14)
    assert res.eta_loss == pytest.approx(1.0, abs=1e-12)


def test_laplace_agrees_with_time_domain(ham7):
    lap = ete_laplace(ham7, BATH, SinkSpec(6), 0)
    _, tim = propagate_time_domain(ham7, BATH, SinkSpec(6), 0)
    assert abs(lap.eta - tim.eta) <= 1e-3
    assert abs(lap.eta - tim.eta) <= 1e-8  # observed agreement on stable instances


def test_rk_integrator_matches_exact_propagator(ham7):
    a, _ = propagate_time_domain(ham7, BATH, SinkSpec(6), 0, t_max=2.0, n_out=20)
    b, _ = propagate_time_domain(ham7, BATH, SinkSpec(6), 0, t_max=2.0, n_out=20, method="rk", tol=1e-10)
    np.testing.assert_allclose(b.rho, a.rho, atol=1e-7)


def test_zero_bath_matches_wavefunction_propagation(ham7):
    sinks = SinkSpec(6, 1.0, 1e-3)
    traj, _ = propagate_time_domain(ham7, BathSpec(0.0), sinks, 0, t_max=5.0)
    h_eff = ham7.matrix * CM_TO_RAD_PS - 1j * np.diag(sinks.rates(7))
    psi0 = np.eye(7)[0]
    pops = np.array([np.abs(linalg.expm(-1j * h_eff * t) @ psi0) ** 2 for t in traj.times])
    np.testing.assert_allclose(traj.populations, pops, atol=1e-8)


def test_symmetric_dimer_rabi_oscillation():
    j = 100.0
    r = 0.01
    h = ExcitonHamiltonian(np.array([[0.0, j], [j, 0.0]]))
    traj, _ = propagate_time_domain(h, BathSpec(0.0), SinkSpec(1, r, 0.0), 0, t_max=1.0, n_out=400)
    w = j * CM_TO_RAD_PS
    # Population oscillates as sin^2(|J| t) = (1 - cos(2|J| t))/2 under an envelope set by the trap.
    expected = np.exp(-r * traj.times) * np.sin(w * traj.times) ** 2
    np.testing.assert_allclose(traj.populations[:, 1], expected, atol=2e-3)
    spectrum = np.abs(np.fft.rfft(traj.populations[:, 1] - traj.populations[:, 1].mean()))
    freqs = 2 * np.pi * np.fft.rfftfreq(len(traj.times), traj.times[1] - traj.times[0])
    assert freqs[np.argmax(spectrum)] == pytest.approx(2 * w, rel=0.05)


def test_trace_rate_equals_sink_outflow(ham7):
    sysm = _AugmentedSystem(ham7, BATH, SinkSpec(6))
    y = sysm.initial_state(0)
    step = linalg.expm(sysm.matrix() * 0.05)
    rates = SinkSpec(6).rates(7)
    for _ in range(20):
        y = step @ y
        rho, _, _ = sysm.unpack(y)
        drho, _, _ = sysm.unpack(sysm.rhs(0.0, y))
        assert np.trace(drho[0]).real == pytest.approx(-2 * rates @ np.diag(rho[0]).real, abs=1e-12)


@pytest.mark.xfail(strict=True, reason="second-order kernel violates positivity on strongly detuned "
                   "complexes: 23 of these 100 instances have a rising trace")
def test_trace_non_increasing_for_random_complexes():
    rising = 0
    for seed in range(5000, 5100):
        h = hamiltonian(7, 30.0, seed)
        sysm = _AugmentedSystem(h, BATH, SinkSpec(6))
        y = sysm.initial_state(0)
        step = linalg.expm(sysm.matrix() * 0.2)
        trace = []
        for _ in range(50):
            trace.append(np.trace(sysm.unpack(y)[0][0]).real)
            y = step @ y
        rising += bool(np.any(np.diff(trace) > 1e-12))
    assert rising == 0


def test_probability_is_conserved():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PositivityWarning)
        for seed in range(30):
            for lam in (0.0, 35.0, 350.0):
                res = ete_laplace(hamiltonian(7, 50.0, seed), BathSpec(lam), SinkSpec(6), 0)
                assert abs(res.eta_raw + res.eta_loss - 1.0) < 1e-6


def test_shift_and_relabel_invariance(config7, ham7):
    base = ete_laplace(ham7, BATH, SinkSpec(6), 0).eta
    assert ete_laplace(ham7.shifted(-321.0), BATH, SinkSpec(6), 0).eta == pytest.approx(base, abs=1e-9)
    perm = [0, 4, 2, 5, 1, 3, 6]
    moved = build_hamiltonian(config7.permuted(perm))
    assert ete_laplace(moved, BATH, SinkSpec(6), 0).eta == pytest.approx(base, abs=1e-9)


def test_propagated_states_stay_hermitian(ham7):
    traj, _ = propagate_time_domain(ham7, BATH, SinkSpec(6), 0, t_max=5.0)
    assert max(np.abs(r - r.conj().T).max() for r in traj.rho) < 1e-9


def test_negative_efficiency_is_flagged_and_clamped():
    h = hamiltonian(7, 30.0, 1)
    with pytest.warns(PositivityWarning):
        res = ete_laplace(h, BathSpec(350.0), SinkSpec(6), 0)
    assert res.positivity_flag
    assert res.eta_raw > 1.0 + 1e-6
    assert res.eta == 1.0


def test_growing_mode_is_a_solver_error():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(SolverError):
            propagate_time_domain(hamiltonian(7, 30.0, 5015), BATH, SinkSpec(6), 0)


def test_laplace_requires_loss():
    with pytest.raises(ValueError):
        ete_laplace(ExcitonHamiltonian(np.eye(2)), BATH, SinkSpec(1, 1.0, 0.0), 0)


@pytest.mark.parametrize("kwargs", [{"r_trap": 0.0}, {"r_loss": -1.0}])
def test_invalid_sinks(kwargs):
    with pytest.raises(ValueError):
        SinkSpec(0, **kwargs)
