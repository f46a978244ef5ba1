"""Backend dispatch for the compiled kernels.

The environment variable ``HEAVYTAIL_BACKEND`` selects the
implementation at first import:

* ``numba``: require the compiled backend, raise if numba is missing;
* ``numpy``: force the pure NumPy lane-vectorized backend;
* ``auto`` (default, also used for unset): compiled backend when numba
  imports cleanly, NumPy otherwise.

Both backends implement the same per-replica streams; see the module
docstrings of ``numba_impl`` and ``numpy_impl`` for the equivalence
contract.  ``get_impl()`` returns the active module and ``backend_name()``
names it; benchmarks that want to compare the two can import both
implementation modules directly.
"""

from __future__ import annotations

import os

from ..errors import ConfigError

_IMPL = None
_NAME = None


def _load():
    global _IMPL, _NAME
    if _IMPL is not None:
        return _IMPL
    choice = os.environ.get("HEAVYTAIL_BACKEND", "auto").strip().lower()
    if choice not in ("auto", "numba", "numpy"):
        raise ConfigError(
            f"HEAVYTAIL_BACKEND must be 'numba', 'numpy' or 'auto', got {choice!r}")
    if choice in ("auto", "numba"):
        try:
            from . import numba_impl as impl
            _IMPL, _NAME = impl, "numba"
            return _IMPL
        except ImportError:
            if choice == "numba":
                raise ConfigError(
                    "HEAVYTAIL_BACKEND=numba but the numba package is not importable")
    from . import numpy_impl as impl
    _IMPL, _NAME = impl, "numpy"
    return _IMPL


def get_impl():
    """The active kernel implementation module."""
    return _load()


def backend_name() -> str:
    """Name of the active backend, ``"numba"`` or ``"numpy"``."""
    _load()
    return _NAME
