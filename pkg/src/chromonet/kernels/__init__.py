"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba implementations are used when numba imports cleanly and the
environment variable ``CHROMONET_DISABLE_NUMBA`` is unset or ``0``.  Both
backends stay importable as :data:`numpy_backend` and :data:`numba_backend`
(the latter is ``None`` without numba) so they can be compared directly.
"""

import os

from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None

_disabled = os.environ.get("CHROMONET_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

backend = numpy_backend if (_disabled or numba_backend is None) else numba_backend
BACKEND_NAME = "numpy" if backend is numpy_backend else "numba"

coupling_matrix = backend.coupling_matrix
path_strengths = backend.path_strengths
count_paths_above = backend.count_paths_above
memory_kernel_matrix = backend.memory_kernel_matrix

__all__ = [
    "BACKEND_NAME",
    "coupling_matrix",
    "count_paths_above",
    "memory_kernel_matrix",
    "numba_backend",
    "numpy_backend",
    "path_strengths",
]
