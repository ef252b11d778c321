"""Kernel dispatch.

The compiled extension ``magwkb._core`` is used when it imports; otherwise
the numpy versions in ``magwkb._pure`` take over.  Setting the environment
variable ``MAGWKB_PURE=1`` forces the fallback (used by the benchmark and
by the backend-equivalence tests).
"""

import os

from . import _pure

BACKEND = "python"
_impl = _pure

if os.environ.get("MAGWKB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pure

trunc_mul1 = _impl.trunc_mul1
trunc_mul2 = _impl.trunc_mul2
peierls_apply = _impl.peierls_apply


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _pure}
    try:
        from . import _core
        found["cython"] = _core
    except ImportError:
        pass
    return found
