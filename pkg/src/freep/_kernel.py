"""Backend selection for the tree-scan kernel.

The compiled extension is preferred when it imported cleanly; setting the
environment variable FREEP_PURE=1 forces the pure-Python kernel. Both
backends implement the same `scan_range` contract with bit-identical
results, so the choice only affects speed.
"""

import os

from . import _pykernel

_FORCE_PURE = os.environ.get("FREEP_PURE", "").strip().lower() in {"1", "true", "yes"}

try:
    from . import _ckernel
except ImportError:
    _ckernel = None

_BACKENDS = {"pure": _pykernel}
if _ckernel is not None:
    _BACKENDS["compiled"] = _ckernel

DEFAULT_BACKEND = "compiled" if (_ckernel is not None and not _FORCE_PURE) else "pure"


def available_backends():
    return tuple(sorted(_BACKENDS))


def get_backend(name=None):
    """Module implementing `scan_range`; `name` in {None, 'compiled', 'pure'}."""
    if name is None:
        name = DEFAULT_BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        ) from None


def backend_name() -> str:
    return DEFAULT_BACKEND
