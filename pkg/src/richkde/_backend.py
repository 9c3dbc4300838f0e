"""Select the kernel-sum backend at import time.

``RICHKDE_BACKEND`` may be ``auto`` (default), ``cython`` or ``python``.
"""

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _fallback.gaussian_sums}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled.gaussian_sums


def available_backends():
    return sorted(_BACKENDS)


def _choose(name):
    if name == "auto":
        return "cython" if "cython" in _BACKENDS else "python"
    if name not in _BACKENDS:
        raise ImportError(
            f"richkde backend {name!r} unavailable; have {available_backends()}")
    return name


BACKEND = _choose(os.environ.get("RICHKDE_BACKEND", "auto").strip().lower() or "auto")


def get_gaussian_sums(name=None):
    """Return the kernel-sum function for ``name`` (default: the active backend)."""
    return _BACKENDS[_choose(name) if name else BACKEND]
