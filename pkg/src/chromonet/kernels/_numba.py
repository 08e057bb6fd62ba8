"""numba-compiled kernels.

Same signatures and results as :mod:`chromonet.kernels._numpy`.  The path
kernels walk the path tree depth-first instead of materialising it, so the
pruned counter touches only the branches that can still clear the threshold.
"""

from math import perm

import numpy as np
from numba import njit


@njit(cache=True)
def coupling_matrix(positions, dipoles, const):
    n = positions.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            dx = positions[i, 0] - positions[j, 0]
            dy = positions[i, 1] - positions[j, 1]
            dz = positions[i, 2] - positions[j, 2]
            r2 = dx * dx + dy * dy + dz * dz
            r = np.sqrt(r2)
            mumu = (dipoles[i, 0] * dipoles[j, 0] + dipoles[i, 1] * dipoles[j, 1]
                    + dipoles[i, 2] * dipoles[j, 2])
            pa = (dipoles[i, 0] * dx + dipoles[i, 1] * dy + dipoles[i, 2] * dz) / r
            pb = (dipoles[j, 0] * dx + dipoles[j, 1] * dy + dipoles[j, 2] * dz) / r
            val = const * (mumu - 3.0 * pa * pb) / (r2 * r)
            out[i, j] = val
            out[j, i] = val
    return out


@njit(cache=True)
def _inv(x):
    if x == 0.0:
        return np.inf
    return 1.0 / x


@njit(cache=True)
def _walk(absj, initial, trap, limit, out):
    # Lexicographic preorder over ordered intermediate sequences.  Writes every
    # strength into ``out`` when limit is inf; otherwise only counts paths whose
    # inverse-coupling sum stays below ``limit`` and prunes the rest.
    n = absj.shape[0]
    m = n - 2
    mids = np.empty(m, np.int64)
    k = 0
    for i in range(n):
        if i != initial and i != trap:
            mids[k] = i
            k += 1
    store = out.shape[0] > 0
    used = np.zeros(m, np.bool_)
    seq = np.zeros(m + 1, np.int64)
    cand = np.zeros(m + 1, np.int64)
    partial = np.zeros(m + 1)

    count = 0
    total = _inv(absj[initial, trap])
    if store:
        out[count] = 1.0 / total
        count += 1
    elif total < limit:
        count += 1

    depth = 0
    while True:
        c = cand[depth]
        while c < m and used[c]:
            c += 1
        if c >= m:
            if depth == 0:
                break
            depth -= 1
            used[seq[depth]] = False
            cand[depth] = seq[depth] + 1
            continue
        prev = initial if depth == 0 else mids[seq[depth - 1]]
        acc = partial[depth] + _inv(absj[prev, mids[c]])
        if not store and acc >= limit:
            cand[depth] = c + 1
            continue
        total = acc + _inv(absj[mids[c], trap])
        if store:
            out[count] = 1.0 / total
            count += 1
        elif total < limit:
            count += 1
        seq[depth] = c
        used[c] = True
        partial[depth + 1] = acc
        depth += 1
        cand[depth] = 0
    return count


def path_strengths(absj, initial, trap):
    m = absj.shape[0] - 2
    total = sum(perm(m, k) for k in range(m + 1))
    out = np.empty(total)
    _walk(np.ascontiguousarray(absj, dtype=np.float64), int(initial), int(trap), np.inf, out)
    return out


def count_paths_above(absj, initial, trap, threshold):
    if threshold <= 0.0:
        return int(np.count_nonzero(path_strengths(absj, initial, trap) > threshold))
    return int(_walk(np.ascontiguousarray(absj, dtype=np.float64), int(initial), int(trap),
                     1.0 / threshold, np.empty(0)))


@njit(cache=True)
def memory_kernel_matrix(vecs, energies, rate, amp):
    n = energies.shape[0]
    g = np.empty((n, n), np.complex128)
    for a in range(n):
        for b in range(n):
            g[a, b] = 1.0 / (rate + 1j * (energies[a] - energies[b]))
    vc = np.conj(vecs)
    out = np.zeros((n * n, n * n), np.complex128)
    amp_c = np.conj(amp)
    # t[m, k, b] = sum_a U_ma conj(U_ka) G_ab
    t = np.zeros((n, n, n), np.complex128)
    for m in range(n):
        for k in range(n):
            for a in range(n):
                w = vecs[m, a] * vc[k, a]
                for b in range(n):
                    t[m, k, b] += w * g[a, b]
    res = np.empty((n, n), np.complex128)
    for k in range(n):
        for l in range(n):
            for m in range(n):
                for q in range(n):
                    s = 0j
                    for b in range(n):
                        s += t[m, k, b] * vecs[l, b] * vc[q, b]
                    res[m, q] = s
            col = k + l * n
            # a [S_k, R] - a* [S_l, R]; only rows/columns k and l are touched
            for q in range(n):
                out[k + q * n, col] += amp * res[k, q]
                out[l + q * n, col] -= amp_c * res[l, q]
            for m in range(n):
                out[m + k * n, col] -= amp * res[m, k]
                out[m + l * n, col] += amp_c * res[m, l]
    return out
