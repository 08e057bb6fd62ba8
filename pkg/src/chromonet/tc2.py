"""TC2 time-nonlocal master equation with trap and loss sinks.

Superoperators act on column-stacked density matrices, ``vec(X) =
X.reshape(-1, order="F")``, so that ``vec(A X B) = kron(B.T, A) vec(X)``.
Everything is in angular-frequency units (rad/ps): Hamiltonian and bath
parameters are converted from cm^-1 on the way in, rates are already ps^-1.

The equation of motion is

    d rho/dt = L_S rho + L_eh rho
               - sum_j [S_j, int_0^t C(t-t') e^{L_S (t-t')} S_j rho(t') dt' - h.c.]

with L_S rho = -i[H, rho], L_eh rho = -sum_j r_j {S_j, rho}, S_j = |j><j| and
C(t) = c exp(-gamma t).  Two routes give the transfer efficiency:

* :func:`ete_laplace` solves for Sigma = int_0^inf rho dt directly from the
  s = 0 Laplace transform, where the kernel becomes c (gamma - L_S)^-1.
* :func:`propagate_time_domain` integrates the equivalent memoryless system
  obtained by carrying sigma_j(t) = int C e^{L_S} S_j rho as auxiliary
  operators, and accumulates the trapped population along the way.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.integrate import solve_ivp

from . import kernels
from .bath import BathSpec, correlation_amplitude
from .exciton import ExcitonHamiltonian
from .units import CM_TO_RAD_PS

#: Default trapping rate (ps^-1).
DEFAULT_R_TRAP = 1.0
#: Default per-site loss rate (ps^-1); population lifetime 1/(2 r_loss) = 0.5 ns.
DEFAULT_R_LOSS = 1e-3
POSITIVITY_TOL = 1e-6
MAX_RESOLVENT_COND = 1e12
#: Trace above which a propagated state is treated as a divergent solution.
DIVERGENCE_TRACE = 1e3


class SolverError(RuntimeError):
    pass


class PositivityWarning(RuntimeWarning):
    """The TC2 efficiency left [0, 1]: the truncated kernel broke positivity."""


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, n: int) -> np.ndarray:
    return np.asarray(v).reshape(n, n, order="F")


@dataclass(frozen=True)
class SinkSpec:
    """Loss on every site and trapping on ``trap_index``; rates in ps^-1.

    Each sink enters as -r {P, rho}, so populations decay at 2 r.
    ``r_loss`` may be a scalar (uniform) or a per-site sequence.
    """

    trap_index: int
    r_trap: float = DEFAULT_R_TRAP
    r_loss: float | tuple = DEFAULT_R_LOSS

    def __post_init__(self):
        if not self.r_trap > 0:
            raise ValueError("r_trap must be > 0")
        if np.any(np.asarray(self.r_loss) < 0):
            raise ValueError("r_loss must be >= 0")
        if not np.isscalar(self.r_loss):
            object.__setattr__(self, "r_loss", tuple(float(x) for x in self.r_loss))

    def loss_rates(self, n: int) -> np.ndarray:
        r = np.broadcast_to(np.asarray(self.r_loss, dtype=float), (n,)).copy()
        return r

    def rates(self, n: int) -> np.ndarray:
        """Total sink rate on every site."""
        if not 0 <= self.trap_index < n:
            raise ValueError(f"trap index {self.trap_index} out of range for {n} sites")
        r = self.loss_rates(n)
        r[self.trap_index] += self.r_trap
        return r


@dataclass(frozen=True, eq=False)
class LiouvilleOperator:
    """N^2 x N^2 complex matrix (ps^-1) acting on column-stacked density matrices."""

    matrix: np.ndarray

    @property
    def n(self) -> int:
        return int(round(np.sqrt(self.matrix.shape[0])))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return unvec(self.matrix @ vec(rho), self.n)

    def __add__(self, other):
        return LiouvilleOperator(self.matrix + other.matrix)

    def __sub__(self, other):
        return LiouvilleOperator(self.matrix - other.matrix)


@dataclass
class TransportResult:
    eta: float
    eta_loss: float
    residual: float
    method: str
    wall_time: float
    eta_raw: float = float("nan")
    positivity_flag: bool = False
    converged: bool = True
    integrated_rho: np.ndarray | None = field(default=None, repr=False)


@dataclass
class Trajectory:
    times: np.ndarray
    rho: np.ndarray  # (len(times), N, N)

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.einsum("tii->ti", self.rho))

    @property
    def trace(self) -> np.ndarray:
        return self.populations.sum(axis=1)


def _h_rad(h: ExcitonHamiltonian) -> np.ndarray:
    return h.matrix * CM_TO_RAD_PS


def _amp_rad(bath: BathSpec) -> complex:
    return correlation_amplitude(bath) * CM_TO_RAD_PS**2


def coherent_generator(h: ExcitonHamiltonian) -> LiouvilleOperator:
    """L_S = -i (I (x) H - H^T (x) I) in column-stacked form."""
    hw = _h_rad(h)
    eye = np.eye(h.n)
    return LiouvilleOperator(-1j * (np.kron(eye, hw) - np.kron(hw.T, eye)))


def sink_generator(n: int, sinks: SinkSpec) -> LiouvilleOperator:
    """L_eh rho = -(R rho + rho R) with R = diag(loss + trap rates)."""
    r = sinks.rates(n)
    # vec(R X + X R) is diagonal with entries r_m + r_n at index m + n N
    return LiouvilleOperator(np.diag(-(r[:, None] + r[None, :]).reshape(-1, order="F")).astype(complex))


def build_generator(h: ExcitonHamiltonian, sinks: SinkSpec) -> LiouvilleOperator:
    """Memoryless part L_S + L_eh of the generator."""
    return coherent_generator(h) + sink_generator(h.n, sinks)


def memory_kernel(h: ExcitonHamiltonian, bath: BathSpec, s: float = 0.0) -> LiouvilleOperator:
    """Laplace-transformed memory term K(s).

    K(s) X = sum_j [S_j, c R(S_j X) - c* R(X S_j)] with R = ((s + gamma) - L_S)^-1.
    For Hermitian X the second term is the conjugate transpose of the first,
    because L_S commutes with taking adjoints and s + gamma is real.  The
    resolvent is diagonal in the exciton basis, R_ab = 1/(s + gamma + i(E_a - E_b)).
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    n = h.n
    if bath.lam == 0:
        return LiouvilleOperator(np.zeros((n * n, n * n), dtype=complex))
    rate = (s + bath.gamma) * CM_TO_RAD_PS
    evals, evecs = np.linalg.eigh(_h_rad(h))
    spread = evals[-1] - evals[0]
    cond = np.hypot(rate, spread) / rate
    if not cond < MAX_RESOLVENT_COND:
        raise SolverError(f"resolvent condition number {cond:.3g} exceeds {MAX_RESOLVENT_COND:g}")
    mat = kernels.memory_kernel_matrix(np.ascontiguousarray(evecs, dtype=complex),
                                       np.ascontiguousarray(evals), float(rate), complex(_amp_rad(bath)))
    return LiouvilleOperator(mat)


def _finish(eta_raw, eta_loss, residual, method, t0, integrated=None, converged=True):
    flag = not (-POSITIVITY_TOL <= eta_raw <= 1.0 + POSITIVITY_TOL)
    if flag:
        warnings.warn(f"TC2 efficiency {eta_raw:.6g} outside [0, 1]; clamped", PositivityWarning, stacklevel=3)
    return TransportResult(
        eta=float(min(max(eta_raw, 0.0), 1.0)),
        eta_loss=float(eta_loss),
        residual=float(residual),
        method=method,
        wall_time=time.perf_counter() - t0,
        eta_raw=float(eta_raw),
        positivity_flag=flag,
        converged=converged,
        integrated_rho=integrated,
    )


def ete_laplace(h: ExcitonHamiltonian, bath: BathSpec, sinks: SinkSpec, initial_index: int) -> TransportResult:
    """Transfer efficiency from (L_S + L_eh - K(0)) vec(Sigma) = -vec(rho0), Sigma = int rho dt."""
    t0 = time.perf_counter()
    n = h.n
    loss = sinks.loss_rates(n)
    if not np.all(loss > 0):
        raise ValueError("ete_laplace needs r_loss > 0 on every site for int rho dt to converge")
    a = (build_generator(h, sinks) - memory_kernel(h, bath, 0.0)).matrix
    rho0 = np.zeros((n, n), dtype=complex)
    rho0[initial_index, initial_index] = 1.0
    b = -vec(rho0)
    try:
        lu = linalg.lu_factor(a, check_finite=True)
        x = linalg.lu_solve(lu, b)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"singular TC2 system (cond ~ {np.linalg.cond(a):.3g}): {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError(f"singular TC2 system (cond ~ {np.linalg.cond(a):.3g})")
    residual = float(np.linalg.norm(a @ x - b))
    sigma = unvec(x, n)
    pops = np.real(np.diag(sigma))
    eta = 2.0 * sinks.r_trap * pops[sinks.trap_index]
    eta_loss = float(2.0 * (loss * pops).sum())
    return _finish(eta, eta_loss, residual, "laplace", t0, integrated=sigma)


class _AugmentedSystem:
    """Real-linear memoryless system for (rho, sigma_1..sigma_N, trapped yield).

    d rho/dt     = L_S rho + L_eh rho - sum_j [S_j, sigma_j - sigma_j^dag]
    d sigma_j/dt = c S_j rho + (L_S - gamma) sigma_j
    d eta/dt     = 2 r_trap <trap|rho|trap>
    d loss/dt    = 2 sum_j r_loss_j <j|rho|j>

    The adjoint makes the map only real-linear, so the state is stored as
    real and imaginary parts: y = [Re rho, Im rho, Re sigma, Im sigma, eta, loss].
    """

    def __init__(self, h, bath, sinks):
        self.n = n = h.n
        self.h = _h_rad(h)
        self.r = sinks.rates(n)
        self.r_loss = sinks.loss_rates(n)
        self.r_trap = sinks.r_trap
        self.trap = sinks.trap_index
        self.c = _amp_rad(bath)
        self.gamma = bath.gamma * CM_TO_RAD_PS
        self.with_memory = bath.lam > 0
        self.n_rho = n * n
        self.n_sig = n * n * n if self.with_memory else 0
        self.dim = 2 * self.n_rho + 2 * self.n_sig + 2

    def unpack(self, y):
        y = np.atleast_2d(y)
        b = y.shape[0]
        n, nr, ns = self.n, self.n_rho, self.n_sig
        rho = (y[:, :nr] + 1j * y[:, nr:2 * nr]).reshape(b, n, n)
        if ns:
            off = 2 * nr
            sig = (y[:, off:off + ns] + 1j * y[:, off + ns:off + 2 * ns]).reshape(b, n, n, n)
        else:
            sig = None
        return rho, sig, y[:, -2:]

    def pack(self, rho, sig, yields):
        b = rho.shape[0]
        parts = [rho.real.reshape(b, -1), rho.imag.reshape(b, -1)]
        if sig is not None:
            parts += [sig.real.reshape(b, -1), sig.imag.reshape(b, -1)]
        parts.append(np.reshape(yields, (b, 2)))
        return np.concatenate(parts, axis=1)

    def rhs_batch(self, y):
        rho, sig, _ = self.unpack(y)
        h, r = self.h, self.r
        drho = -1j * (h @ rho - rho @ h) - (r[:, None] * rho + rho * r[None, :])
        dsig = None
        if sig is not None:
            d = sig - np.conj(np.swapaxes(sig, -1, -2))
            # sum_j [S_j, D_j]_mn = D_m[m, n] - D_n[m, n]
            drho -= np.einsum("bmmn->bmn", d) - np.einsum("bnmn->bmn", d)
            srho = np.zeros_like(sig)
            idx = np.arange(self.n)
            srho[:, idx, idx, :] = rho
            dsig = self.c * srho - 1j * (h @ sig - sig @ h) - self.gamma * sig
        pops = np.einsum("bii->bi", rho).real
        dyield = np.stack([2.0 * self.r_trap * pops[:, self.trap], 2.0 * pops @ self.r_loss], axis=1)
        return self.pack(drho, dsig, dyield)

    def rhs(self, t, y):
        return self.rhs_batch(y[None, :])[0]

    def matrix(self):
        return self.rhs_batch(np.eye(self.dim)).T

    def initial_state(self, initial_index):
        rho = np.zeros((1, self.n, self.n), dtype=complex)
        rho[0, initial_index, initial_index] = 1.0
        sig = np.zeros((1, self.n, self.n, self.n), dtype=complex) if self.n_sig else None
        return self.pack(rho, sig, np.zeros((1, 2)))[0]


def propagate_time_domain(h: ExcitonHamiltonian, bath: BathSpec, sinks: SinkSpec, initial_index: int,
                          t_max: float = 10.0, tol: float = 1e-10, n_out: int = 50,
                          method: str = "expm", stop_trace: float = 1e-8, t_cap: float = 1e7):
    """Propagate the TC2 dynamics in time; returns ``(Trajectory, TransportResult)``.

    The trajectory is sampled at ``n_out + 1`` uniform times on [0, t_max].

    ``method="expm"`` (default) steps the augmented linear system with its
    exact propagator exp(M dt).  After ``t_max`` the step keeps doubling
    (by squaring the propagator) until tr rho < ``stop_trace`` or ``t_cap``,
    so the efficiency covers the full decay.  Suited to N up to ~10.

    ``method="rk"`` integrates the same system with adaptive Dormand-Prince
    (DOP853) at rtol ``tol`` and stops at ``t_max`` or when tr rho <
    ``stop_trace``; its efficiency is truncated at ``t_max``.
    """
    if not t_max > 0:
        raise ValueError("t_max must be > 0")
    t0 = time.perf_counter()
    sysm = _AugmentedSystem(h, bath, sinks)
    y0 = sysm.initial_state(initial_index)
    times = np.linspace(0.0, t_max, n_out + 1)
    converged = True

    if method == "rk":
        def drained(t, y):
            rho, _, _ = sysm.unpack(y)
            return abs(np.trace(rho[0]).real) - stop_trace
        drained.terminal = True
        sol = solve_ivp(sysm.rhs, (0.0, t_max), y0, method="DOP853", t_eval=times,
                        rtol=tol, atol=tol * 1e-3, events=drained)
        if sol.status < 0:
            raise SolverError(f"time integration failed: {sol.message}")
        ys = sol.y.T
        times = sol.t
        final = sol.y_events[0][0] if sol.status == 1 else ys[-1]
        converged = sol.status == 1
    elif method == "expm":
        dt = times[1] - times[0]
        step = linalg.expm(sysm.matrix() * dt)
        ys = np.empty((len(times), sysm.dim))
        ys[0] = y0
        for k in range(1, len(times)):
            ys[k] = step @ ys[k - 1]
        y, t = ys[-1], t_max
        while True:
            # A growing mode can drive the trace negative, so test its magnitude.
            tr = abs(np.trace(sysm.unpack(y)[0][0]).real)
            if not tr < DIVERGENCE_TRACE:
                raise SolverError(f"TC2 dynamics diverge (tr rho = {tr:.3g} at t = {t:.3g} ps); "
                                  "the generator has a growing mode")
            if tr < stop_trace:
                break
            if t >= t_cap:
                converged = False
                warnings.warn(f"tr rho still {tr:.3g} at t = {t:.3g} ps", RuntimeWarning, stacklevel=2)
                break
            y = step @ y
            t += dt
            step = step @ step
            dt *= 2.0
        final = y
    else:
        raise ValueError(f"unknown method {method!r}")
    if not (np.all(np.isfinite(ys)) and np.all(np.isfinite(final))):
        raise SolverError("non-finite state during time propagation")

    rho_t, _, _ = sysm.unpack(ys)
    if np.abs(np.einsum("tii->t", rho_t).real).max() >= DIVERGENCE_TRACE:
        raise SolverError("TC2 dynamics diverge within the output window; the generator has a growing mode")
    _, _, yields = sysm.unpack(final)
    eta, eta_loss = float(yields[0, 0]), float(yields[0, 1])
    result = _finish(eta, eta_loss, 0.0, "time-domain", t0, converged=converged)
    return Trajectory(times, rho_t), result
