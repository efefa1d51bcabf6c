"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy reference in ``_purepy`` is used. Setting ``SHADOWQPT_PURE_PYTHON=1``
forces the fallback.
"""

import os

from . import _purepy

BACKEND = "python"
kernels = _purepy

if not os.environ.get("SHADOWQPT_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"
