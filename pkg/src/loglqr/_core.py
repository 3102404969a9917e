"""Backend selection for the hot rollout kernel.

The compiled Cython module is preferred; set ``LOGLQR_PURE_PYTHON=1`` to force the
numpy fallback (handy for debugging and for the backend benchmark).
"""

import os

from . import _kernels_py

BACKEND = "python"
run_segment = _kernels_py.run_segment

if os.environ.get("LOGLQR_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        run_segment = _kernels.run_segment
        BACKEND = "cython"


def get_backend(name=None):
    """Return ``(name, run_segment)`` for ``name`` in {None, 'python', 'cython'}."""
    if name is None:
        return BACKEND, run_segment
    if name == "python":
        return "python", _kernels_py.run_segment
    if name == "cython":
        from . import _kernels

        return "cython", _kernels.run_segment
    raise ValueError(f"unknown backend {name!r}")
