"""Backend selection for the series kernels.

The compiled extension ``qstefan._kernels`` is used when it was built;
otherwise the pure-Python twin is imported. Setting ``QSTEFAN_PURE_PYTHON=1``
forces the fallback, which is how the test suite checks both paths agree.
"""

import os

_FORCE_PURE = os.environ.get("QSTEFAN_PURE_PYTHON", "").strip() not in ("", "0")

if _FORCE_PURE:
    from . import _kernels_py as impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _kernels_py as impl
        BACKEND = "python"

pochhammer = impl.pochhammer
hyp1f1_series = impl.hyp1f1_series
hyp1f1_terminating = impl.hyp1f1_terminating
laguerre = impl.laguerre
hyp1f1_array = impl.hyp1f1_array
laguerre_array = impl.laguerre_array
MAX_TERMS = impl.MAX_TERMS

__all__ = [
    "BACKEND",
    "MAX_TERMS",
    "hyp1f1_array",
    "hyp1f1_series",
    "hyp1f1_terminating",
    "laguerre",
    "laguerre_array",
    "pochhammer",
]
