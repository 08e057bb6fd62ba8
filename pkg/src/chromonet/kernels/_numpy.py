"""Pure-numpy implementations of the hot kernels.

These are the reference/fallback versions.  They trade memory for
vectorisation (the path kernels materialise the full path table) and are
selected when numba is unavailable or disabled.
"""

from functools import lru_cache
from itertools import permutations

import numpy as np


def coupling_matrix(positions, dipoles, const):
    diff = positions[:, None, :] - positions[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(r2, 1.0)
    r = np.sqrt(r2)
    mumu = dipoles @ dipoles.T
    proj = np.einsum("ik,ijk->ij", dipoles, diff) / r
    proj_b = np.einsum("jk,ijk->ij", dipoles, diff) / r
    kappa = mumu - 3.0 * proj * proj_b
    out = np.triu(const * kappa / (r2 * r), 1)
    return out + out.T


@lru_cache(maxsize=32)
def _path_table(n, initial, trap):
    mids = [i for i in range(n) if i not in (initial, trap)]
    seqs = []
    for k in range(len(mids) + 1):
        seqs.extend(permutations(mids, k))
    seqs.sort()
    width = n - 1
    src = np.full((len(seqs), width), initial, dtype=np.int64)
    dst = np.full((len(seqs), width), initial, dtype=np.int64)
    mask = np.zeros((len(seqs), width), dtype=bool)
    for p, seq in enumerate(seqs):
        nodes = (initial, *seq, trap)
        for e in range(len(nodes) - 1):
            src[p, e] = nodes[e]
            dst[p, e] = nodes[e + 1]
            mask[p, e] = True
    return src, dst, mask


def _inverse_couplings(absj):
    inv = np.full(absj.shape, np.inf)
    np.divide(1.0, absj, out=inv, where=absj != 0.0)
    return inv


def path_strengths(absj, initial, trap):
    n = absj.shape[0]
    src, dst, mask = _path_table(n, int(initial), int(trap))
    inv = _inverse_couplings(absj)
    total = np.where(mask, inv[src, dst], 0.0).sum(axis=1)
    return 1.0 / total


def count_paths_above(absj, initial, trap, threshold):
    if threshold <= 0.0:
        return int(np.count_nonzero(path_strengths(absj, initial, trap) > threshold))
    # strength > t  <=>  sum of inverse couplings < 1/t; partial sums only grow, so prune
    limit = 1.0 / threshold
    inv = _inverse_couplings(absj)
    mids = [i for i in range(absj.shape[0]) if i not in (initial, trap)]
    count = 0
    stack = [(initial, 0.0, frozenset())]
    while stack:
        node, acc, used = stack.pop()
        if acc + inv[node, trap] < limit:
            count += 1
        for c in mids:
            if c not in used:
                nxt = acc + inv[node, c]
                if nxt < limit:
                    stack.append((c, nxt, used | {c}))
    return count


def resolvent_tensor(vecs, energies, rate):
    """R[k, l] = U ((U^dag E_kl U) * G) U^dag, G_ab = 1/(rate + i(E_a - E_b))."""
    g = 1.0 / (rate + 1j * (energies[:, None] - energies[None, :]))
    # t[m, k, b] = sum_a U_ma conj(U_ka) G_ab
    t = np.einsum("ma,ka,ab->mkb", vecs, vecs.conj(), g)
    return np.einsum("mkb,lb,nb->klmn", t, vecs, vecs.conj())


def memory_kernel_matrix(vecs, energies, rate, amp):
    """Column-stacked Liouville matrix of X -> sum_j [S_j, a R(S_j X) - a* R(X S_j)]."""
    n = energies.shape[0]
    res = resolvent_tensor(vecs, energies, rate)
    eye = np.eye(n)
    # out[k, l, m, n] = a (d_mk R - R d_nk) - a* (d_ml R - R d_nl)
    dk_m = eye[:, None, :, None]
    dk_n = eye[:, None, None, :]
    dl_m = eye[None, :, :, None]
    dl_n = eye[None, :, None, :]
    out = amp * (dk_m - dk_n) * res - np.conj(amp) * (dl_m - dl_n) * res
    return out.transpose(3, 2, 1, 0).reshape(n * n, n * n)
