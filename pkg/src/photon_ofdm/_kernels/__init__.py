"""Hot-kernel backend selection.

The simulator's inner loops (clip, rate computation, Poisson sampling) exist
twice: a compiled Cython extension (``_core``) and a pure-numpy fallback
(``_numpy_backend``).  Both consume the random bit stream identically, so a
given seed produces bit-identical photon counts either way; which one runs is
a pure speed decision made once at import.

Set ``PHOTON_OFDM_BACKEND=numpy`` (or ``cython``) to force a choice, e.g. for
the benchmark in ``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import os

from . import _numpy_backend

try:
    from . import _core
except ImportError:
    _core = None

_BACKENDS = {"numpy": _numpy_backend}
if _core is not None:
    _BACKENDS["cython"] = _core


def available_backends() -> dict:
    """Name-to-module map of the usable kernel backends."""
    return dict(_BACKENDS)


def _select():
    forced = os.environ.get("PHOTON_OFDM_BACKEND", "").strip().lower()
    if forced:
        try:
            return _BACKENDS[forced]
        except KeyError:
            raise ImportError(
                f"PHOTON_OFDM_BACKEND={forced!r} unavailable; "
                f"choices: {sorted(_BACKENDS)}"
            ) from None
    return _BACKENDS.get("cython", _numpy_backend)


_active = _select()


def backend():
    """The kernel module selected for this process."""
    return _active
