"""Select the compiled kernels when available, the pure-Python ones otherwise.

Set ``BUBBLETOWER_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _core_py

BACKEND = "python"
if os.environ.get("BUBBLETOWER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _core_py
else:
    _impl = _core_py

block_tridiag_solve = _impl.block_tridiag_solve
projection_sum = _impl.projection_sum
