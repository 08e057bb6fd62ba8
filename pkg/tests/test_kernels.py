import os
import subprocess
import sys

import numpy as np
import pytest

from chromonet import kernels
from chromonet.kernels import numba_backend, numpy_backend

pytestmark = pytest.mark.skipif(numba_backend is None, reason="numba not installed")


@pytest.fixture
def sites():
    rng = np.random.default_rng(0)
    pos = rng.uniform(-40, 40, (30, 3))
    dip = rng.standard_normal((30, 3))
    return pos, dip / np.linalg.norm(dip, axis=1, keepdims=True)


def test_coupling_matrix_backends_agree(sites):
    a = numpy_backend.coupling_matrix(*sites, 134000.0)
    b = numba_backend.coupling_matrix(*sites, 134000.0)
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-12)
    assert np.array_equal(a, a.T) and np.array_equal(b, b.T)


@pytest.mark.parametrize("n, initial, trap", [(2, 0, 1), (5, 0, 4), (8, 0, 7), (7, 3, 1)])
def test_path_backends_agree(n, initial, trap):
    rng = np.random.default_rng(n)
    a = np.abs(rng.uniform(-500, 500, (n, n)))
    a = np.triu(a, 1) + np.triu(a, 1).T
    a[0, 1 % n] = a[1 % n, 0] = 0.0
    np.testing.assert_allclose(numba_backend.path_strengths(a, initial, trap),
                               numpy_backend.path_strengths(a, initial, trap), rtol=1e-13)
    for threshold in (0.0, 50.0, 150.0, 400.0):
        assert (numba_backend.count_paths_above(a, initial, trap, threshold)
                == numpy_backend.count_paths_above(a, initial, trap, threshold))


@pytest.mark.parametrize("n", [1, 2, 5])
def test_memory_kernel_backends_agree(n):
    rng = np.random.default_rng(n)
    h = rng.standard_normal((n, n))
    evals, vecs = np.linalg.eigh(h + h.T)
    vecs = vecs.astype(complex)
    a = numpy_backend.memory_kernel_matrix(vecs, evals, 9.4, 2730.0 - 330.0j)
    b = numba_backend.memory_kernel_matrix(vecs, evals, 9.4, 2730.0 - 330.0j)
    np.testing.assert_allclose(a, b, atol=1e-12 * np.abs(a).max())


def test_default_backend_is_numba():
    assert kernels.BACKEND_NAME == "numba"


def test_environment_flag_selects_numpy():
    env = dict(os.environ, CHROMONET_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import chromonet.kernels as k; print(k.BACKEND_NAME)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
