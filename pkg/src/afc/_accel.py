"""JIT switch for the numeric kernels.

Kernels are compiled with numba when it is importable and the environment
variable ``AFC_DISABLE_NUMBA`` is unset (or set to ``0``).  Otherwise the
pure-numpy implementations in :mod:`afc.kernels` are used.
"""

from __future__ import annotations

import os

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    _HAVE_NUMBA = False


def _flag_disabled() -> bool:
    return os.environ.get("AFC_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


USE_NUMBA = _HAVE_NUMBA and not _flag_disabled()


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise an identity decorator.

    The decorated function is always compiled lazily, so importing a module
    full of kernels costs nothing until one is called.
    """
    if _HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap
