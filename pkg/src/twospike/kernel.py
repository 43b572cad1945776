"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the pure-Python
transliteration takes over. Set ``TWOSPIKE_PURE_PYTHON=1`` to force the
fallback (the benchmark and the equivalence tests do this per call instead,
through :func:`get_backend`).
"""

import os

from . import _pykernel

try:
    from . import _ckernel
except ImportError:  # no compiled build available
    _ckernel = None

_BACKENDS = {"python": _pykernel}
if _ckernel is not None:
    _BACKENDS["cython"] = _ckernel

if os.environ.get("TWOSPIKE_PURE_PYTHON", "") not in ("", "0") or _ckernel is None:
    BACKEND = "python"
else:
    BACKEND = "cython"


def available_backends():
    return sorted(_BACKENDS)


def get_backend(name=None):
    """Return the kernel module for ``name`` (default: the import-time choice)."""
    name = BACKEND if name is None else name
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available; have {available_backends()}") from None
