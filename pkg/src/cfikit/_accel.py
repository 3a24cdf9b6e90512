"""Kernel backend selection.

The compiled extension is used when it imports cleanly; setting
CFIKIT_PURE_PYTHON=1 forces the numpy fallback.
"""

import os

from . import _pykernels

kernels = _pykernels
BACKEND = "python"

if not os.environ.get("CFIKIT_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        kernels = _ckernels
        BACKEND = "compiled"


def get_kernels(name=None):
    """Return a kernel module by name ('compiled' or 'python'), or the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
