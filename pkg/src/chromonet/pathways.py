"""Spatial paths between the initial and trap sites and their strengths.

A path is an ordered selection of distinct intermediate sites.  Its strength
is the inverse of the summed inverse coupling magnitudes along
initial -> c_1 -> ... -> c_k -> trap; the direct path scores |H[initial, trap]|.
Paths are enumerated in lexicographic order of their intermediate sequence
(so a path precedes all its extensions), which is also the order the kernels
emit strengths in.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations
from math import perm

import numpy as np
from scipy.sparse.csgraph import shortest_path

from . import kernels
from .exciton import ExcitonHamiltonian

DEFAULT_THRESHOLD = 1000.0
#: Refuse to materialise more paths than this (n = 11 already gives 986 410).
DEFAULT_MAX_PATHS = 2_000_000


class PathLimitError(ValueError):
    pass


@dataclass(frozen=True)
class Path:
    intermediates: tuple[int, ...]
    strength: float | None = None


def path_count(n: int) -> int:
    """Number of ordered intermediate selections: sum_k (n-2)!/(n-2-k)!."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return sum(perm(n - 2, k) for k in range(n - 1))


def _check_limit(n, max_paths):
    count = path_count(n)
    if count > max_paths:
        raise PathLimitError(f"{count} paths for n={n} exceeds the limit of {max_paths}")
    return count


@lru_cache(maxsize=16)
def _enumerate(n, initial, trap):
    mids = [i for i in range(n) if i not in (initial, trap)]
    seqs = [seq for k in range(len(mids) + 1) for seq in permutations(mids, k)]
    seqs.sort()
    return tuple(seqs)


def enumerate_paths(n: int, initial: int = 0, trap: int | None = None,
                    max_paths: int = DEFAULT_MAX_PATHS) -> list[Path]:
    trap = n - 1 if trap is None else trap
    _check_limit(n, max_paths)
    return [Path(seq) for seq in _enumerate(n, initial, trap)]


def path_strength(path: Path, h: ExcitonHamiltonian, initial: int, trap: int) -> float:
    nodes = (initial, *path.intermediates, trap)
    total = 0.0
    for a, b in zip(nodes[:-1], nodes[1:]):
        coupling = abs(h.matrix[a, b])
        if coupling == 0.0:
            return 0.0
        total += 1.0 / coupling
    return 1.0 / total


def all_path_strengths(h: ExcitonHamiltonian, initial: int, trap: int,
                       max_paths: int = DEFAULT_MAX_PATHS) -> np.ndarray:
    """Strengths of every path, in :func:`enumerate_paths` order."""
    _check_limit(h.n, max_paths)
    return kernels.path_strengths(np.abs(h.matrix), initial, trap)


def scored_paths(h: ExcitonHamiltonian, initial: int, trap: int,
                 max_paths: int = DEFAULT_MAX_PATHS) -> list[Path]:
    strengths = all_path_strengths(h, initial, trap, max_paths)
    return [Path(p.intermediates, float(s))
            for p, s in zip(enumerate_paths(h.n, initial, trap, max_paths), strengths)]


def dominant_path_count(h: ExcitonHamiltonian, initial: int, trap: int,
                        threshold: float = DEFAULT_THRESHOLD) -> int:
    """Number of paths with strength strictly above ``threshold`` (cm^-1).

    Uses a pruned depth-first search, so it stays cheap for large n as long
    as the threshold is high relative to typical couplings.
    """
    return kernels.count_paths_above(np.abs(h.matrix), initial, trap, float(threshold))


def max_path_strength(h: ExcitonHamiltonian, initial: int, trap: int) -> float:
    """Strongest path strength, found as a shortest path under edge weights 1/|J|."""
    absj = np.abs(h.matrix)
    np.fill_diagonal(absj, 0.0)
    weights = np.zeros_like(absj)
    np.divide(1.0, absj, out=weights, where=absj > 0)
    dist = shortest_path(weights, method="D", directed=False, indices=initial)[trap]
    return 0.0 if not np.isfinite(dist) else float(1.0 / dist)


def z_axis_proximity(config) -> float:
    """Mean distance of the intermediate sites from the initial-trap axis (A)."""
    if config.n < 3:
        raise ValueError("z-axis proximity needs at least one intermediate site")
    p0 = config.positions[config.initial_index]
    axis = config.positions[config.trap_index] - p0
    axis = axis / np.linalg.norm(axis)
    mids = [i for i in range(config.n) if i not in (config.initial_index, config.trap_index)]
    rel = config.positions[mids] - p0
    perp = rel - np.outer(rel @ axis, axis)
    return float(np.linalg.norm(perp, axis=1).mean())


def path_summary(h: ExcitonHamiltonian, initial: int, trap: int, threshold: float = DEFAULT_THRESHOLD,
                 bins: int = 10, max_paths: int = DEFAULT_MAX_PATHS) -> dict:
    """Per-sample summary {max_strength, count_over_threshold, histogram_bins}."""
    strengths = all_path_strengths(h, initial, trap, max_paths)
    top = float(strengths.max())
    counts, edges = np.histogram(strengths, bins=bins, range=(0.0, top if top > 0 else 1.0))
    return {
        "max_strength": top,
        f"count_over_{threshold:g}": int(np.count_nonzero(strengths > threshold)),
        "histogram_bins": {"edges": [float(e) for e in edges], "counts": [int(c) for c in counts]},
    }
