"""Kernel selection.

The compiled extension is preferred; the numpy fallback is used when it is
absent or when ``HYPSLICE_PURE_PYTHON`` is set to a truthy value.
"""
import os

from . import _kernels_py as python_kernels

_FORCE_PURE = os.environ.get("HYPSLICE_PURE_PYTHON", "").lower() in ("1", "true", "yes")

compiled_kernels = None
if not _FORCE_PURE:
    try:
        from . import _kernels as compiled_kernels
    except ImportError:
        compiled_kernels = None

kernels = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "compiled" if compiled_kernels is not None else "python"

lp_gauge = kernels.lp_gauge
radial_moments = kernels.radial_moments
