"""Hot loops behind a backend switch (see ``hitstat._backend``).

``get(name)`` returns the kernel namespace for an explicit backend, which is
what the benchmark and the backend-agreement tests use; the module-level
names are bound to the active backend.
"""

from importlib import import_module

from .._backend import BACKEND, NUMBA_AVAILABLE

KERNELS = (
    "evolve",
    "tv_trace",
    "hitting_many",
    "killed_trace",
    "running_max",
    "column_even_sup",
    "walk",
    "walk_path",
)


def get(name):
    if name == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not importable")
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    return import_module(f"{__name__}._{name}")


_active = get(BACKEND)

evolve = _active.evolve
tv_trace = _active.tv_trace
hitting_many = _active.hitting_many
killed_trace = _active.killed_trace
running_max = _active.running_max
column_even_sup = _active.column_even_sup
walk = _active.walk
walk_path = _active.walk_path

__all__ = ["BACKEND", "get", *KERNELS]
