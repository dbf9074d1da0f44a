# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo hot kernels.

Single-pass fused versions of the numpy backend, drawing Poisson counts
through numpy's own C distribution functions so the bit stream (and therefore
every simulated photon count) is identical to the fallback's.  Built with
``-ffp-contract=off``; see ``_numpy_backend`` for the operation contracts.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport fmax, fmin
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_poisson

name = "cython"


cdef bitgen_t *_bitgen(object rng):
    capsule = rng.bit_generator.capsule
    return <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")


def biased_clip(object y, double b_dc, double y_max):
    """Clamp ``y + b_dc`` to ``[0, y_max]`` in one pass."""
    arr = np.ascontiguousarray(y, dtype=np.float64)
    out = np.empty_like(arr)
    cdef const double[::1] src = arr.reshape(-1)
    cdef double[::1] dst = out.reshape(-1)
    cdef Py_ssize_t i, n = src.shape[0]
    for i in range(n):
        dst[i] = fmin(fmax(src[i] + b_dc, 0.0), y_max)
    return out


def poisson_rates(object y_r, double alpha, double lambda_b):
    """Photon rates ``alpha * y_r + lambda_b``, clamped at zero."""
    arr = np.ascontiguousarray(y_r, dtype=np.float64)
    out = np.empty_like(arr)
    cdef const double[::1] src = arr.reshape(-1)
    cdef double[::1] dst = out.reshape(-1)
    cdef Py_ssize_t i, n = src.shape[0]
    cdef Py_ssize_t clamped = 0
    cdef double v
    for i in range(n):
        v = alpha * src[i] + lambda_b
        if v < 0.0:
            v = 0.0
            clamped += 1
        dst[i] = v
    return out, int(clamped)


def poisson_counts(object rng, object lam):
    """Element-wise Poisson draws from the generator's bit stream."""
    arr = np.ascontiguousarray(lam, dtype=np.float64)
    out = np.empty(arr.shape, dtype=np.int64)
    cdef const double[::1] rates = arr.reshape(-1)
    cdef cnp.int64_t[::1] counts = out.reshape(-1)
    cdef bitgen_t *state = _bitgen(rng)
    cdef Py_ssize_t i, n = rates.shape[0]
    for i in range(n):
        counts[i] = random_poisson(state, rates[i])
    return out
