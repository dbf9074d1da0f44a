"""Pure-numpy implementations of the Monte Carlo hot kernels.

The compiled backend in ``_core.pyx`` must produce bit-identical results, so
every function here fixes an exact operation order: the clip is
``min(max(y + b, 0), y_max)``, the Poisson rate is ``alpha * y + lambda_b``
(no fused multiply-add) and counts are drawn element by element in C order
from the generator's bit stream.
"""

from __future__ import annotations

import numpy as np

name = "numpy"


def biased_clip(y: np.ndarray, b_dc: float, y_max: float) -> np.ndarray:
    """Clamp ``y + b_dc`` to ``[0, y_max]``."""
    return np.clip(y + b_dc, 0.0, y_max)


def poisson_rates(y_r: np.ndarray, alpha: float, lambda_b: float):
    """Photon rates ``alpha * y_r + lambda_b`` with a nonnegativity guard.

    Returns the clamped rates and the number of samples that had to be
    clamped (filtered clipping noise can push the rate slightly negative).
    """
    raw = alpha * y_r + lambda_b
    clamped = int(np.count_nonzero(raw < 0.0))
    return np.maximum(raw, 0.0), clamped


def poisson_counts(rng: np.random.Generator, lam: np.ndarray) -> np.ndarray:
    """Element-wise Poisson draws (inversion below mean 10, PTRS above)."""
    return rng.poisson(lam)
