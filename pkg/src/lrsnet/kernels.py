"""Backend selection for the hot inner-GD kernel.

The compiled Cython kernel is used when importable; set LRSNET_PURE_PYTHON=1
to force the numpy fallback. Both backends implement the identical update
rule, so fits agree to floating-point rounding.
"""

import os

from . import _gd_fallback

try:
    from . import _gd_kernel
except ImportError:  # extension not built
    _gd_kernel = None

if _gd_kernel is not None and os.environ.get("LRSNET_PURE_PYTHON") != "1":
    inner_gd = _gd_kernel.inner_gd
    BACKEND = "compiled"
else:
    inner_gd = _gd_fallback.inner_gd
    BACKEND = "python"
