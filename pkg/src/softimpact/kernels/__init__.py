"""Kernel lane selection: compiled extension if available, numpy otherwise.

Set SOFTIMPACT_PURE_PYTHON=1 to force the numpy lane (used by the parity
tests and the benchmark).  Both lanes expose the same functions with the
same semantics; floating-point results may differ in summation order.
"""

import os

if os.environ.get("SOFTIMPACT_PURE_PYTHON", "") not in ("", "0"):
    from . import pykernels as _impl

    LANE = "python"
else:
    try:
        from . import _ckernels as _impl

        LANE = "cython"
    except ImportError:
        from . import pykernels as _impl

        LANE = "python"

reconstruct = _impl.reconstruct
density = _impl.density
project_real = _impl.project_real
run_wall_loop = _impl.run_wall_loop


def get_lane(name=None):
    """Return (lane_name, module) for `name` in {None, "cython", "python"}."""
    if name in (None, LANE):
        return LANE, _impl
    if name == "python":
        from . import pykernels

        return "python", pykernels
    if name == "cython":
        from . import _ckernels

        return "cython", _ckernels
    raise ValueError(f"unknown kernel lane {name!r}")
