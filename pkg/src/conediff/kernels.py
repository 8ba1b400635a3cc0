"""Kernel backend selection.

The compiled extension ``conediff._ckernels`` is used when it imports; set
``CONEDIFF_PURE=1`` to force the NumPy/SciPy fallback.
"""

import os

from . import _pykernels

if os.environ.get("CONEDIFF_PURE", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = _impl.BACKEND
curve_tables = _impl.curve_tables
implicit_solve = _impl.implicit_solve


def available_backends():
    out = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        out["cython"] = _ckernels
    return out
