"""Gaussianity diagnostics for demodulated residuals.

The rate objective treats the per-subcarrier residual as circularly
symmetric complex Gaussian noise.  This module provides the checks used to
back that up empirically: kernel density estimates against moment-fitted
normals, and the correlation between real and imaginary residual parts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .qfunc import gauss_phi

_KDE_CHUNK = 8192


@dataclass
class DensityEstimate:
    """Gaussian-kernel density estimate with its moment-fitted comparison."""

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    moment_fit: Tuple[float, float]  # (mean, variance)

    def gaussian_overlay(self) -> np.ndarray:
        """Moment-fitted normal density evaluated on the grid."""
        mean, var = self.moment_fit
        sd = math.sqrt(var)
        return gauss_phi((self.grid - mean) / sd) / sd

    def sup_distance(self) -> float:
        """Sup-norm distance to the moment fit, relative to its peak."""
        overlay = self.gaussian_overlay()
        return float(np.max(np.abs(self.density - overlay)) / np.max(overlay))


def gaussian_moment_fit(samples) -> Tuple[float, float]:
    """Sample mean and unbiased sample variance."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError(f"need at least 2 samples, got {x.size}")
    return float(np.mean(x)), float(np.var(x, ddof=1))


def silverman_bandwidth(samples) -> float:
    """Rule-of-thumb bandwidth ``0.9 min(sd, iqr/1.34) n^(-1/5)``."""
    x = np.asarray(samples, dtype=float)
    sd = float(np.std(x))
    q75, q25 = np.percentile(x, [75.0, 25.0])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0.0:
        raise ValueError("samples have no spread")
    return 0.9 * spread * x.size ** (-0.2)


def kde(samples, bandwidth: Optional[float] = None,
        grid_points: int = 512) -> DensityEstimate:
    """Gaussian-kernel density estimate on a ``mean +- 5 sd`` grid.

    Bandwidth defaults to Silverman's rule; pass ``bandwidth`` to override.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 100:
        raise ValueError(f"need at least 100 samples, got {x.size}")
    mean, var = gaussian_moment_fit(x)
    if var == 0.0:
        raise ValueError("degenerate constant samples")
    h = float(bandwidth) if bandwidth is not None else silverman_bandwidth(x)
    if h <= 0.0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    sd = math.sqrt(var)
    grid = np.linspace(mean - 5.0 * sd, mean + 5.0 * sd, grid_points)
    density = np.zeros(grid_points)
    for start in range(0, x.size, _KDE_CHUNK):
        chunk = x[start:start + _KDE_CHUNK]
        density += gauss_phi((grid[:, None] - chunk) / h).sum(axis=1)
    density /= x.size * h
    return DensityEstimate(grid=grid, density=density, bandwidth=h,
                           moment_fit=(mean, var))


def reim_covariance(residuals, normalized: bool = True) -> float:
    """Covariance between real and imaginary parts of complex residuals.

    Returns the correlation coefficient by default (the raw covariance
    depends on the arbitrary residual scale); pass ``normalized=False`` for
    the raw sample covariance.
    """
    e = np.asarray(residuals)
    if e.size < 1000:
        raise ValueError(f"need at least 1000 samples, got {e.size}")
    re, im = e.real, e.imag
    cov = float(np.cov(re, im, ddof=1)[0, 1])
    if not normalized:
        return cov
    sd_re, sd_im = float(np.std(re, ddof=1)), float(np.std(im, ddof=1))
    if sd_re == 0.0 or sd_im == 0.0:
        raise ValueError("zero-variance residual component")
    return cov / (sd_re * sd_im)
