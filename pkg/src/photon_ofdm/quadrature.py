"""Reference clipping statistics via direct numerical integration.

Everything in :mod:`photon_ofdm.analytic` has a closed form; this module
recomputes the same quantities straight from their defining expectations
with adaptive quadrature over the clipped-Gaussian density.  It shares no
algebra with the closed forms, so agreement between the two routes is a
meaningful check (exercised by ``photon-ofdm oracle-check`` and the test
suite).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad
from scipy.stats import norm

from .analytic import ClipStats, Scheme

_QUAD_OPTS = {"epsabs": 1e-13, "epsrel": 1e-12, "limit": 200}


def _gauss_pdf(x: float, sigma: float) -> float:
    return math.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))


def _piecewise_moment(weight, sigma: float, lo: float, hi: float, y_max: float) -> float:
    """integral of weight(x, clip(x, 0, y_max)) * N(0, sigma^2) over the line.

    ``lo``/``hi`` are the clip kinks in x so each smooth piece is integrated
    separately; the clipped value is 0 below ``lo`` and ``y_max`` above ``hi``.
    """
    total = quad(lambda x: weight(x, 0.0) * _gauss_pdf(x, sigma), -np.inf, lo, **_QUAD_OPTS)[0]
    total += quad(lambda x: weight(x, x - lo) * _gauss_pdf(x, sigma), lo, hi, **_QUAD_OPTS)[0]
    total += quad(lambda x: weight(x, y_max) * _gauss_pdf(x, sigma), hi, np.inf, **_QUAD_OPTS)[0]
    return total


def clip_stats_dco_quadrature(epsilon_bias: float, epsilon_top: float,
                              sigma_y: float = 1.0) -> ClipStats:
    """DCO Bussgang statistics from the defining integrals.

    The biased signal ``x + B`` (x Gaussian) is pushed through
    ``clip(., 0, y_max)`` and the moments are integrated numerically.
    """
    b_dc = epsilon_bias * sigma_y
    y_max = epsilon_top * sigma_y
    lo, hi = -b_dc, y_max - b_dc  # clip kinks in x

    def biased(x):
        return x + b_dc

    e_bias2 = quad(lambda x: biased(x) ** 2 * _gauss_pdf(x, sigma_y),
                   -np.inf, np.inf, **_QUAD_OPTS)[0]
    e_cross = _piecewise_moment(lambda x, c: biased(x) * c, sigma_y, lo, hi, y_max)
    e_clip = _piecewise_moment(lambda x, c: c, sigma_y, lo, hi, y_max)
    e_clip2 = _piecewise_moment(lambda x, c: c * c, sigma_y, lo, hi, y_max)

    k = e_cross / e_bias2
    mu = e_clip - k * b_dc
    sigma2 = e_clip2 - k * k * e_bias2 - mu * mu
    beta = e_clip - b_dc
    return ClipStats(Scheme.DCO, k, mu, sigma2, beta)


def clip_stats_aco_quadrature(epsilon_top: float, sigma_y: float = 1.0) -> ClipStats:
    """ACO Bussgang statistics from the defining integrals.

    The rectified signal has density ``N(0, sigma_y^2)`` on the positive axis
    plus a point mass 1/2 at zero; the atom contributes nothing here because
    every integrand vanishes at the origin.
    """
    y_max = epsilon_top * sigma_y

    def upper(f):
        inner = quad(lambda x: f(x, x) * _gauss_pdf(x, sigma_y), 0.0, y_max, **_QUAD_OPTS)[0]
        tail = quad(lambda x: f(x, y_max) * _gauss_pdf(x, sigma_y), y_max, np.inf, **_QUAD_OPTS)[0]
        return inner + tail

    e_rect = quad(lambda x: x * _gauss_pdf(x, sigma_y), 0.0, np.inf, **_QUAD_OPTS)[0]
    e_rect2 = quad(lambda x: x * x * _gauss_pdf(x, sigma_y), 0.0, np.inf, **_QUAD_OPTS)[0]
    e_cross = upper(lambda x, c: x * c)
    e_clip = upper(lambda x, c: c)
    e_clip2 = upper(lambda x, c: c * c)

    k = e_cross / e_rect2
    mu = e_clip - k * e_rect
    sigma2 = e_clip2 - k * k * e_rect2 - mu * mu
    beta = e_clip - e_rect
    return ClipStats(Scheme.ACO, k, mu, sigma2, beta)


def mean_clipped_power_dco_quadrature(sigma_y: float, b_dc: float, y_max: float) -> float:
    """Mean of ``clip(x + b_dc, 0, y_max)``, x ~ N(0, sigma_y^2), by quadrature."""
    lo, hi = -b_dc, y_max - b_dc
    return _piecewise_moment(lambda x, c: c, sigma_y, lo, hi, y_max)


def tail_probability(u: float) -> float:
    """Independent Q(u) reference (scipy's normal survival function)."""
    return float(norm.sf(u))
