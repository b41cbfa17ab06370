"""Backend selection for the hot curve kernels.

The kernels exist twice with identical signatures: a numba-jitted
implementation and a pure-numpy fallback.  The environment variable
SOLITONFLOW_BACKEND picks one ("numba" or "numpy"); the default "auto"
takes numba when it imports, numpy otherwise.
"""

import os

_choice = os.environ.get("SOLITONFLOW_BACKEND", "auto").strip().lower()

if _choice not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"SOLITONFLOW_BACKEND must be auto, numba or numpy; got {_choice!r}")

if _choice == "numpy":
    from . import numpy_impl as _impl
    BACKEND = "numpy"
else:
    try:
        from . import numba_impl as _impl
        BACKEND = "numba"
    except ImportError:
        if _choice == "numba":
            raise
        from . import numpy_impl as _impl
        BACKEND = "numpy"

GAUSSIAN = _impl.GAUSSIAN
SPHERE = _impl.SPHERE
CYLINDER = _impl.CYLINDER
UNNORMALIZED = _impl.UNNORMALIZED
NORMALIZED = _impl.NORMALIZED
STATIC_MCF = _impl.STATIC_MCF
OK = _impl.OK
CFL_STOP = _impl.CFL_STOP
DOMAIN_STOP = _impl.DOMAIN_STOP
EXTINCT_STOP = _impl.EXTINCT_STOP
DEGENERATE_STOP = _impl.DEGENERATE_STOP

metric_scales = _impl.metric_scales
curve_arrays = _impl.curve_arrays
flow_velocity = _impl.flow_velocity
advance = _impl.advance


def get_impl(name):
    """Load one backend module by name (for benchmarks and equivalence
    tests); raises ImportError if unavailable."""
    if name == "numpy":
        from . import numpy_impl
        return numpy_impl
    if name == "numba":
        from . import numba_impl
        return numba_impl
    raise ValueError(f"unknown backend {name!r}")
