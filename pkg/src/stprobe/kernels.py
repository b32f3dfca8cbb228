"""Select the labeling kernel at import time.

The compiled Cython kernel is preferred when present; the pure-Python
twin is the fallback and the reference.  Set ``STPROBE_PURE=1`` to force
the fallback (used by the equivalence tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _labeling as pure_kernel

LabelingInfeasible = pure_kernel.LabelingInfeasible

if os.environ.get("STPROBE_PURE"):
    active_kernel = pure_kernel
else:
    try:
        from . import _labeling_cy as _compiled

        active_kernel = _compiled
    except ImportError:
        active_kernel = pure_kernel

KERNEL_NAME: str = active_kernel.KERNEL_NAME
solve_labeling = active_kernel.solve_labeling
make_searcher = active_kernel.make_searcher
