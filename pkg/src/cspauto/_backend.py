"""Select the graph-kernel implementation at import time.

The compiled ``_ckernels`` extension is used when it was built; setting
``CSPAUTO_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

import os

from cspauto import _pykernels


def load(name: str | None = None):
    """Return the kernel module called ``name`` ("cython" or "python")."""
    if name == "python":
        return _pykernels
    try:
        from cspauto import _ckernels
    except ImportError:
        if name == "cython":
            raise
        return _pykernels
    return _ckernels


def available() -> list:
    names = ["python"]
    try:
        load("cython")
    except ImportError:
        pass
    else:
        names.insert(0, "cython")
    return names


kernels = load("python" if os.environ.get("CSPAUTO_PURE_PYTHON") else None)
BACKEND = "cython" if kernels is not _pykernels else "python"
