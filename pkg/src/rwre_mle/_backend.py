"""Kernel selection: compiled extension when importable, else pure Python.

Set ``RWRE_MLE_PUREPY=1`` to force the fallback.
"""

import os

if os.environ.get("RWRE_MLE_PUREPY", "") not in ("", "0"):
    from . import _pykernels as kernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as kernels
        BACKEND = "python"

walk_chunk = kernels.walk_chunk
bpre_chunk = kernels.bpre_chunk

__all__ = ["BACKEND", "walk_chunk", "bpre_chunk", "kernels"]
