"""Hot-loop kernels with two interchangeable backends.

``knumba`` carries @njit loop kernels, ``knumpy`` the vectorized pure-numpy
fallback.  The active backend is chosen once at import time from the
``SUBFLUX_BACKEND`` environment variable: ``numba`` (default when numba is
importable), ``numpy``, or ``auto``.  Both backends expose the same function
set and are cross-checked in the test suite; ``benchmarks/bench_backends.py``
compares their speed.
"""

import os
import warnings

from . import knumpy

_requested = os.environ.get("SUBFLUX_BACKEND", "auto").strip().lower()

if _requested in ("auto", "", "numba"):
    try:
        from . import knumba
        _active = knumba
    except ImportError as exc:
        if _requested == "numba":
            raise ImportError(f"SUBFLUX_BACKEND=numba but numba is unavailable: {exc}")
        warnings.warn(f"numba unavailable ({exc}); falling back to numpy kernels")
        knumba = None
        _active = knumpy
elif _requested == "numpy":
    knumba = None
    _active = knumpy
else:
    raise ValueError(f"SUBFLUX_BACKEND must be 'numba', 'numpy' or 'auto', got {_requested!r}")


def active():
    """The kernel module selected for this process."""
    return _active


def backend_name():
    return _active.NAME
