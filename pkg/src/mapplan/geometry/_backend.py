"""Kernel backend selection.

The compiled extension is used when it imports; setting
``MAPPLAN_PURE_PYTHON=1`` forces the pure-Python kernels.
"""

import os

from . import _geom_py as python_kernels

try:
    from . import _geom as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("MAPPLAN_PURE_PYTHON", "") in ("", "0"):
    kernels = compiled_kernels
    BACKEND = "cython"
else:
    kernels = python_kernels
    BACKEND = "python"
