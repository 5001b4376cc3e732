"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module. Setting FORCELAB_PURE=1 forces the fallback.
"""

from __future__ import annotations

import os

from forcelab import _pykernels

if os.environ.get("FORCELAB_PURE") == "1":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from forcelab import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

rank_rows = _impl.rank_rows
translate_scan = _impl.translate_scan
pair_options = _impl.pair_options

__all__ = ["BACKEND", "rank_rows", "translate_scan", "pair_options"]
