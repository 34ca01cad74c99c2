"""Pick the compiled kernels when available, else the pure-Python ones."""
import os

from . import _pykernels

try:
    if os.environ.get("MA_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernels forced by MA_PURE_PYTHON")
    from . import _ckernels as kernels
    BACKEND = "cython"
except ImportError:
    kernels = _pykernels
    BACKEND = "python"

hessian_stencils = kernels.hessian_stencils
ilu0_factor = kernels.ilu0_factor
ilu0_solve = kernels.ilu0_solve

__all__ = ["BACKEND", "kernels", "hessian_stencils", "ilu0_factor", "ilu0_solve"]
