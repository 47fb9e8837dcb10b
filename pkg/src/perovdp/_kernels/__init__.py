"""Hot-loop kernels with a compiled core and a pure NumPy fallback.

The Cython extension ``_core`` is used when it built successfully; set
``PEROV_BACKEND=pure`` to force the fallback or ``PEROV_BACKEND=compiled``
to make a missing extension an import error.  Both backends implement the
same algorithms step for step, so results agree to floating-point
reordering (see tests/test_kernels.py).
"""

import os

from . import _pure

try:
    from . import _core
except ImportError:
    _core = None

_requested = os.environ.get("PEROV_BACKEND", "auto").strip().lower() or "auto"
if _requested not in ("auto", "pure", "compiled"):
    raise ImportError(f"PEROV_BACKEND must be auto, pure or compiled, got {_requested!r}")
if _requested == "compiled" and _core is None:
    raise ImportError("PEROV_BACKEND=compiled but the compiled kernels did not build")

if _requested == "pure" or _core is None:
    _backend = _pure
    BACKEND = "pure"
else:
    _backend = _core
    BACKEND = "compiled"

bellman_sweep = _backend.bellman_sweep
euler_sweep_crra = _backend.euler_sweep_crra

# point evaluation of candidates is not a hot loop; the pure version serves both
interp_marginal_crra = _pure._interp_marginal_crra
