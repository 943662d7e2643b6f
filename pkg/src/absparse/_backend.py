"""Selects the compiled kernel when available, the numpy fallback otherwise.

Set ABSPARSE_PURE=1 to force the fallback (used by the benchmark to compare
the two paths on identical inputs).
"""

import os

if os.environ.get("ABSPARSE_PURE") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

butterfly_stage = _impl.butterfly_stage
BACKEND = _impl.BACKEND


def backends():
    """Return (active, available) backend names."""
    try:
        from . import _kernels  # noqa: F401

        avail = ["compiled", "python"]
    except ImportError:
        avail = ["python"]
    return BACKEND, avail
