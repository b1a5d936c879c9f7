"""Solver kernel backend selection.

The compiled Cython kernels are preferred when the extension built;
otherwise the numpy fallback is used.  Set WINDNAV_FORCE_NUMPY=1 to
force the fallback (used by the backend-equivalence tests and the
benchmark).
"""

import os

from . import _kernels_py

if os.environ.get("WINDNAV_FORCE_NUMPY"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels_cy as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
sor_sweeps = _impl.sor_sweeps


def available_backends():
    """Names of importable kernel backends."""
    names = ["numpy"]
    try:
        from . import _kernels_cy  # noqa: F401

        names.append("cython")
    except ImportError:
        pass
    return names
