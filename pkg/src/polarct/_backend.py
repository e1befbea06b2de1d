"""Kernel backend chosen at import: compiled Cython core, else pure Python.

Set ``POLARCT_PURE=1`` to force the pure-Python kernels.
"""

import os

from . import _kernels_py

if os.environ.get("POLARCT_PURE", "") not in ("", "0"):
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        kernels = _kernels_py

BACKEND = kernels.NAME


def available() -> dict:
    """All importable backends by name."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out
