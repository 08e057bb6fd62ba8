"""Random chromophore configurations in a sphere and point-dipole couplings."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .units import MIN_DISTANCE

#: Default point-dipole prefactor C in J = C * kappa / r^3 (cm^-1 A^3).
DEFAULT_COUPLING_CONST = 134000.0
#: Default width of the uniform site-energy window (cm^-1).
DEFAULT_ENERGY_WINDOW = 500.0
MAX_CONSECUTIVE_REJECTIONS = 10**6


class GeometryError(ValueError):
    """Invalid geometric input, e.g. two dipoles closer than the minimum distance."""


class PackingError(RuntimeError):
    """Raised when the minimum-distance constraint cannot be met by resampling."""


@dataclass(frozen=True)
class Chromophore:
    position: np.ndarray
    dipole_dir: np.ndarray
    site_energy: float


@dataclass(frozen=True)
class CouplingModel:
    dipole_strength_constant: float = DEFAULT_COUPLING_CONST

    def __post_init__(self):
        if not self.dipole_strength_constant > 0:
            raise ValueError("dipole_strength_constant must be positive")


@dataclass(frozen=True, eq=False)
class Configuration:
    """Sites of one random complex.

    Arrays are stored column-wise (``positions`` is (n, 3), ``dipoles`` is
    (n, 3) of unit vectors, ``energies`` is (n,)); :attr:`chromophores`
    gives the per-site view.
    """

    positions: np.ndarray
    dipoles: np.ndarray
    energies: np.ndarray
    diameter: float
    initial_index: int = 0
    trap_index: int = -1
    seed: int = 0

    def __post_init__(self):
        n = len(self.energies)
        if n < 2:
            raise GeometryError("a configuration needs at least two sites")
        if self.trap_index < 0:
            object.__setattr__(self, "trap_index", n + self.trap_index)
        if self.initial_index == self.trap_index:
            raise GeometryError("initial and trap sites must differ")

    @property
    def n(self) -> int:
        return len(self.energies)

    @property
    def chromophores(self) -> list[Chromophore]:
        return [Chromophore(p, d, float(e)) for p, d, e in zip(self.positions, self.dipoles, self.energies)]

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.to_json() == other.to_json()

    def pairwise_distances(self) -> np.ndarray:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))

    def min_distance(self) -> float:
        d = self.pairwise_distances()
        return float(d[np.triu_indices(self.n, 1)].min())

    def to_dict(self) -> dict:
        return {
            "seed": int(self.seed),
            "diameter": float(self.diameter),
            "sites": [
                {"pos": [float(x) for x in p], "dipole": [float(x) for x in d], "energy": float(e)}
                for p, d, e in zip(self.positions, self.dipoles, self.energies)
            ],
            "initial": int(self.initial_index),
            "trap": int(self.trap_index),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> Configuration:
        sites = data["sites"]
        return cls(
            positions=np.array([s["pos"] for s in sites], dtype=float),
            dipoles=np.array([s["dipole"] for s in sites], dtype=float),
            energies=np.array([s["energy"] for s in sites], dtype=float),
            diameter=float(data["diameter"]),
            initial_index=int(data["initial"]),
            trap_index=int(data["trap"]),
            seed=int(data["seed"]),
        )

    @classmethod
    def from_json(cls, text: str) -> Configuration:
        return cls.from_dict(json.loads(text))

    def rotated(self, rotation: np.ndarray) -> Configuration:
        """Rigidly rotate positions and dipoles about the origin."""
        return Configuration(
            positions=self.positions @ rotation.T,
            dipoles=self.dipoles @ rotation.T,
            energies=self.energies.copy(),
            diameter=self.diameter,
            initial_index=self.initial_index,
            trap_index=self.trap_index,
            seed=self.seed,
        )

    def permuted(self, order) -> Configuration:
        """Relabel sites so that new site i is old site ``order[i]``."""
        order = np.asarray(order)
        inverse = np.argsort(order)
        return Configuration(
            positions=self.positions[order],
            dipoles=self.dipoles[order],
            energies=self.energies[order],
            diameter=self.diameter,
            initial_index=int(inverse[self.initial_index]),
            trap_index=int(inverse[self.trap_index]),
            seed=self.seed,
        )


def _uniform_in_ball(rng, radius):
    while True:
        p = rng.uniform(-radius, radius, size=3)
        if p @ p <= radius * radius:
            return p


def sample_configuration(n, diameter, energy_window=DEFAULT_ENERGY_WINDOW, rng_seed=0,
                         max_rejections=MAX_CONSECUTIVE_REJECTIONS):
    """Draw a random complex of ``n`` sites inside a sphere of ``diameter``.

    Site 0 is the initial site at the north pole and site n-1 the trap at the
    south pole.  Interior sites are uniform in the ball; a candidate closer
    than 5 A to any placed site is redrawn.  Raises :class:`PackingError`
    after ``max_rejections`` consecutive failures.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if diameter < 2 * MIN_DISTANCE:
        raise ValueError(f"diameter must be >= {2 * MIN_DISTANCE} A")
    if energy_window < 0:
        raise ValueError("energy_window must be non-negative")

    rng = np.random.default_rng(rng_seed)
    radius = diameter / 2.0
    positions = np.zeros((n, 3))
    positions[0] = (0.0, 0.0, radius)
    positions[n - 1] = (0.0, 0.0, -radius)
    placed = [positions[0], positions[n - 1]]
    min_d2 = MIN_DISTANCE * MIN_DISTANCE
    for i in range(1, n - 1):
        rejections = 0
        while True:
            p = _uniform_in_ball(rng, radius)
            diff = np.asarray(placed) - p
            if np.einsum("ij,ij->i", diff, diff).min() >= min_d2:
                break
            rejections += 1
            if rejections >= max_rejections:
                raise PackingError(
                    f"packing infeasible: {rejections} consecutive rejections placing site {i} "
                    f"of {n} in d={diameter} A")
        positions[i] = p
        placed.append(p)

    dipoles = rng.standard_normal((n, 3))
    dipoles /= np.linalg.norm(dipoles, axis=1, keepdims=True)
    energies = rng.uniform(-energy_window / 2.0, energy_window / 2.0, size=n)
    return Configuration(positions, dipoles, energies, float(diameter), 0, n - 1, int(rng_seed))


def dipole_coupling(a: Chromophore, b: Chromophore, model: CouplingModel = CouplingModel()) -> float:
    """Point-dipole coupling C * [mu_a.mu_b - 3 (mu_a.r)(mu_b.r)] / r^3 in cm^-1."""
    sep = np.asarray(a.position, dtype=float) - np.asarray(b.position, dtype=float)
    r = float(np.linalg.norm(sep))
    if r < MIN_DISTANCE * (1.0 - 1e-12):
        raise GeometryError(f"separation {r:.4g} A is below the {MIN_DISTANCE} A dipole limit")
    u = sep / r
    kappa = float(a.dipole_dir @ b.dipole_dir - 3.0 * (a.dipole_dir @ u) * (b.dipole_dir @ u))
    return model.dipole_strength_constant * kappa / r**3


def coupling_matrix(config: Configuration, model: CouplingModel = CouplingModel()) -> np.ndarray:
    """Symmetric matrix of pairwise couplings with zero diagonal."""
    if config.min_distance() < MIN_DISTANCE * (1.0 - 1e-12):
        raise GeometryError("configuration violates the minimum-distance constraint")
    return kernels.coupling_matrix(np.ascontiguousarray(config.positions, dtype=float),
                                   np.ascontiguousarray(config.dipoles, dtype=float),
                                   float(model.dipole_strength_constant))
