"""Kernel backend selection.

``HITSTAT_BACKEND`` picks the implementation of the hot loops:

* ``numba`` (default) -- ``@njit`` compiled kernels.
* ``numpy`` -- vectorized numpy / scipy.sparse fallback.

If numba cannot be imported the numpy path is used regardless of the flag.
``HITSTAT_THREADS`` caps the numba worker count.
"""

import os
import warnings

_requested = os.environ.get("HITSTAT_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    warnings.warn(f"unknown HITSTAT_BACKEND={_requested!r}, using numba")
    _requested = "numba"

# numba falls back to omp/workqueue on its own; the probe warning is noise
warnings.filterwarnings("ignore", message="The TBB threading layer requires")

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

BACKEND = "numba" if (_requested == "numba" and NUMBA_AVAILABLE) else "numpy"


def thread_cap():
    raw = os.environ.get("HITSTAT_THREADS")
    if not raw:
        return os.cpu_count() or 1
    try:
        return max(1, int(raw))
    except ValueError:
        return os.cpu_count() or 1


if NUMBA_AVAILABLE:
    numba.set_num_threads(min(thread_cap(), numba.config.NUMBA_NUM_THREADS))
