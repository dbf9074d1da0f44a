"""Closed-form clipping statistics and per-subcarrier SNR for optical OFDM.

Both waveform flavours clip a (approximately) Gaussian time-domain signal:

* DCO: a DC bias ``B_DC = eps_bias * sigma_y`` is added, then the signal is
  clamped to ``[0, y_max]`` with ``y_max = eps_top * sigma_y``.
* ACO: only odd subcarriers carry data, the antisymmetric waveform is
  half-wave rectified at zero and clamped at ``y_max``.

The clipped signal is decomposed into a scaled replica plus uncorrelated
distortion (``y_hat = K * y + n_c``), and everything downstream -- receiver
variance, SNR, rate objective, optical-power accounting -- is expressed
through the distortion moments computed here.  All moment helpers broadcast
over numpy arrays so the optimizer can evaluate whole populations at once.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .qfunc import gauss_phi, gauss_q

SQRT_2PI = math.sqrt(2.0 * math.pi)

#: Logarithm base of the rate objective log(1 + SNR).  The natural log is
#: the base under which the uniform-allocation optimum reproduces the
#: reference total-rate table (base 2 misses it for every photon-rate
#: scale); see tests/test_acceptance.py for the calibration check.
DEFAULT_RATE_LOG_BASE = math.e


class Scheme(str, enum.Enum):
    """Optical OFDM flavour."""

    DCO = "dco"
    ACO = "aco"


def data_subcarriers(scheme: Scheme, n: int) -> np.ndarray:
    """Indices of the information-carrying subcarriers for one scheme.

    DCO loads k = 1 .. N/2-1; ACO loads only the odd k in that range.  The
    DC bin (k=0) and the Nyquist bin (k=N/2) never carry data, and the upper
    half mirrors the lower half by Hermitian symmetry.
    """
    if n < 4 or n & (n - 1):
        raise ValueError(f"subcarrier count must be a power of two >= 4, got {n}")
    if scheme == Scheme.DCO:
        return np.arange(1, n // 2)
    return np.arange(1, n // 2, 2)


def sigma_y_from_weights(weights) -> float:
    """Waveform standard deviation ``sqrt(sum_k w_k^2)`` over all N bins.

    ``weights`` holds the data-subcarrier values only; each one is counted
    twice because the Hermitian mirror bin carries the same weight.
    """
    w = np.asarray(weights, dtype=float)
    return float(np.sqrt(2.0 * np.sum(w * w)))


# ---------------------------------------------------------------------------
# configuration records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WaveformConfig:
    """Transmit-side description of one OFDM configuration.

    Parameters
    ----------
    scheme : Scheme
        DCO or ACO.
    n : int
        Subcarrier count (power of two).
    weights : sequence of float
        Nonnegative linear scale per data subcarrier, ordered like
        :func:`data_subcarriers`.
    epsilon_top : float
        Top (peak) level normalized by the waveform standard deviation.
    epsilon_bias : float, optional
        Bias level, DCO only (``0 < epsilon_bias < epsilon_top``).
    """

    scheme: Scheme
    n: int
    weights: tuple
    epsilon_top: float = 0.0
    epsilon_bias: Optional[float] = None

    def __post_init__(self):
        data_k = data_subcarriers(self.scheme, self.n)
        w = np.asarray(self.weights, dtype=float)
        if w.shape != data_k.shape:
            raise ValueError(
                f"{self.scheme.value} with n={self.n} needs {data_k.size} weights, "
                f"got {w.size}"
            )
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        object.__setattr__(self, "weights", tuple(float(v) for v in w))
        if not np.isfinite(self.epsilon_top) or self.epsilon_top <= 0.0:
            raise ValueError(f"epsilon_top must be positive, got {self.epsilon_top}")
        if self.scheme == Scheme.DCO:
            if self.epsilon_bias is None:
                raise ValueError("DCO requires an epsilon_bias")
            if not 0.0 < self.epsilon_bias < self.epsilon_top:
                raise ValueError(
                    f"need 0 < epsilon_bias < epsilon_top, got "
                    f"({self.epsilon_bias}, {self.epsilon_top})"
                )
        elif self.epsilon_bias is not None:
            raise ValueError("epsilon_bias is meaningful for DCO only")

    @classmethod
    def uniform(cls, scheme: Scheme, n: int, weight: float, epsilon_top: float,
                epsilon_bias: Optional[float] = None) -> "WaveformConfig":
        """Equal weight on every data subcarrier."""
        count = data_subcarriers(scheme, n).size
        return cls(scheme, n, (float(weight),) * count, epsilon_top, epsilon_bias)

    @property
    def data_k(self) -> np.ndarray:
        return data_subcarriers(self.scheme, self.n)

    @property
    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    @property
    def sigma_y(self) -> float:
        return sigma_y_from_weights(self.weights)

    @property
    def b_dc(self) -> float:
        """DC bias in optical-power units (0 for ACO)."""
        if self.scheme == Scheme.ACO:
            return 0.0
        return self.epsilon_bias * self.sigma_y

    @property
    def y_max(self) -> float:
        """Peak optical power in the same units as the weights."""
        return self.epsilon_top * self.sigma_y


@dataclass(frozen=True)
class ClipStats:
    """Bussgang decomposition of one clipping configuration.

    ``k`` is the replica scaling factor, ``mu``/``sigma2`` the mean and
    variance of the distortion term, and ``beta`` the shift of the mean
    optical power caused by clipping.  ``mu`` and ``beta`` scale with
    sigma_y, ``sigma2`` with sigma_y**2.
    """

    scheme: Scheme
    k: float
    mu: float
    sigma2: float
    beta: float


@dataclass(frozen=True)
class ChannelConfig:
    """Photon-counting receiver model plus per-subcarrier link gains.

    ``alpha`` converts received optical power into a mean photon count per
    sample; ``lambda_b`` adds background/dark counts; ``gains`` holds the N
    complex subcarrier gains (Hermitian symmetric so that filtering keeps the
    waveform real).
    """

    alpha: float
    lambda_b: float
    gains: tuple

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=complex)
        if g.ndim != 1 or g.size < 4 or g.size & (g.size - 1):
            raise ValueError("gains must be a 1-D array with power-of-two length")
        if not (np.isfinite(self.alpha) and self.alpha >= 0.0):
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        if not (np.isfinite(self.lambda_b) and self.lambda_b >= 0.0):
            raise ValueError(f"lambda_b must be nonnegative, got {self.lambda_b}")
        scale = float(np.max(np.abs(g)))
        mirror = np.conj(np.roll(g[::-1], 1))  # g[(N-k) % N] conjugated
        if not np.allclose(g, mirror, atol=1e-9 * scale, rtol=0.0):
            raise ValueError("gains must satisfy Hermitian symmetry g[N-k] == conj(g[k])")
        if abs(g[0].imag) > 1e-12 * scale or g[0].real <= 0.0:
            raise ValueError("DC gain g[0] must be real and positive")
        object.__setattr__(self, "gains", tuple(complex(v) for v in g))

    @property
    def n(self) -> int:
        return len(self.gains)

    @property
    def g0(self) -> float:
        return self.gains[0].real

    @property
    def gain_array(self) -> np.ndarray:
        return np.asarray(self.gains, dtype=complex)


@dataclass
class SubcarrierReport:
    """Per-subcarrier SNR summary (empirical slot filled by the simulator)."""

    k: int
    snr_analytic: float
    rate: float
    snr_empirical: Optional[float] = None


# ---------------------------------------------------------------------------
# clipping moments (broadcasting helpers)
# ---------------------------------------------------------------------------


def dco_clip_moments(eps_bias, eps_top):
    """Normalized Bussgang moments of the biased double-sided clipper.

    Returns ``(K, mu/sigma_y, sigma2/sigma_y^2, beta/sigma_y)`` for a unit
    variance Gaussian input biased by ``eps_bias`` and clamped to
    ``[0, eps_top]``.  Broadcasts over array inputs.
    """
    eb = np.asarray(eps_bias, dtype=float)
    et = np.asarray(eps_top, dtype=float)
    b = et - eb
    phi_eb, phi_b = gauss_phi(eb), gauss_phi(b)
    q_eb, q_b, q_neb = gauss_q(eb), gauss_q(b), gauss_q(-eb)

    second = 1.0 + eb * eb
    k = (eb * (phi_eb - phi_b) + second * q_neb
         - (second - et * eb) * q_b) / second
    beta = phi_eb - phi_b + b * q_b - eb * q_eb
    mu = (1.0 - k) * eb + beta
    # E[y_hat^2] of the clipped waveform, normalized by sigma_y^2
    ey2 = (eb * phi_eb - (eb + et) * phi_b + second * q_neb
           + (et * et - eb * eb - 1.0) * q_b)
    sigma2 = np.maximum(ey2 - k * k * second - mu * mu, 0.0)
    return k, mu, sigma2, beta


def aco_clip_moments(eps_top):
    """Normalized Bussgang moments of the half-wave + top clipper.

    The rectified signal keeps a probability atom of mass 1/2 at zero, which
    is what makes ``K = 1 - 2 Q(eps_top)`` exact.  Returns the same tuple
    layout as :func:`dco_clip_moments`.
    """
    et = np.asarray(eps_top, dtype=float)
    phi_t, q_t = gauss_phi(et), gauss_q(et)
    k = 1.0 - 2.0 * q_t
    beta = et * q_t - phi_t
    mu = beta + (1.0 - k) / SQRT_2PI
    enc2 = 0.5 * (1.0 - k * k) + (et * et - 1.0) * q_t - et * phi_t
    sigma2 = np.maximum(enc2 - mu * mu, 0.0)
    return k, mu, sigma2, beta


def clipped_mean_dco(eps_bias, eps_top):
    """Mean of ``clip(x + eps_bias, 0, eps_top)`` for x ~ N(0, 1).

    Unlike :func:`clip_stats_dco` this stays valid for any bias (including
    eps_bias = 0 or eps_bias >= eps_top), which the allocation search needs
    when probing infeasible corners.  Multiply by sigma_y for physical units.
    """
    eb = np.asarray(eps_bias, dtype=float)
    et = np.asarray(eps_top, dtype=float)
    b = et - eb
    return (gauss_phi(eb) - gauss_phi(b)
            + eb * (1.0 - gauss_q(eb) - gauss_q(b))
            + et * gauss_q(b))


def clip_stats_dco(epsilon_bias: float, epsilon_top: float, sigma_y: float,
                   b_dc: Optional[float] = None) -> ClipStats:
    """Bussgang statistics of the DCO clipper in physical units.

    ``b_dc`` may be supplied for cross-checking; it must equal
    ``epsilon_bias * sigma_y``.
    """
    if not 0.0 < epsilon_bias < epsilon_top:
        raise ValueError(
            f"need 0 < epsilon_bias < epsilon_top, got ({epsilon_bias}, {epsilon_top})"
        )
    if sigma_y <= 0.0:
        raise ValueError(f"sigma_y must be positive, got {sigma_y}")
    expected_b = epsilon_bias * sigma_y
    if b_dc is not None and not math.isclose(b_dc, expected_b, rel_tol=1e-9, abs_tol=0.0):
        raise ValueError(f"b_dc={b_dc} inconsistent with epsilon_bias*sigma_y={expected_b}")
    k, mu_n, sig2_n, beta_n = dco_clip_moments(epsilon_bias, epsilon_top)
    return ClipStats(Scheme.DCO, float(k), float(mu_n) * sigma_y,
                     float(sig2_n) * sigma_y * sigma_y, float(beta_n) * sigma_y)


def clip_stats_aco(epsilon_top: float, sigma_y: float) -> ClipStats:
    """Bussgang statistics of the ACO clipper in physical units."""
    if epsilon_top <= 0.0:
        raise ValueError(f"epsilon_top must be positive, got {epsilon_top}")
    if sigma_y <= 0.0:
        raise ValueError(f"sigma_y must be positive, got {sigma_y}")
    k, mu_n, sig2_n, beta_n = aco_clip_moments(epsilon_top)
    return ClipStats(Scheme.ACO, float(k), float(mu_n) * sigma_y,
                     float(sig2_n) * sigma_y * sigma_y, float(beta_n) * sigma_y)


def clip_stats(config: WaveformConfig) -> ClipStats:
    """Clipping statistics for a waveform configuration."""
    if config.scheme == Scheme.DCO:
        return clip_stats_dco(config.epsilon_bias, config.epsilon_top, config.sigma_y)
    return clip_stats_aco(config.epsilon_top, config.sigma_y)


# ---------------------------------------------------------------------------
# receiver-side variance, SNR, rate
# ---------------------------------------------------------------------------


def _dc_noise_power(scheme: Scheme, stats: ClipStats, sigma_y: float, b_dc: float) -> float:
    """Mean received optical power seen by the shot-noise term."""
    if scheme == Scheme.DCO:
        return stats.k * b_dc + stats.mu
    return stats.k * sigma_y / SQRT_2PI + stats.mu


def variance_xhat(scheme: Scheme, stats: ClipStats, channel: ChannelConfig,
                  k: int, n: int, sigma_y: float, b_dc: float = 0.0) -> float:
    """Receiver-side variance of the demodulated symbol on subcarrier ``k``.

    Combines filtered clipping noise, shot noise of the mean optical power
    and background counts; strictly positive whenever ``lambda_b > 0``.
    """
    if stats.scheme != scheme:
        raise ValueError(f"stats computed for {stats.scheme.value}, requested {scheme.value}")
    gk2 = abs(channel.gains[k % channel.n]) ** 2
    alpha = channel.alpha
    shot = alpha * channel.g0 * _dc_noise_power(scheme, stats, sigma_y, b_dc)
    return (shot + channel.lambda_b + alpha * alpha * stats.sigma2 * gk2) / n


def subcarrier_snrs(config: WaveformConfig, channel: ChannelConfig) -> np.ndarray:
    """Linear SNR on every data subcarrier.

    SNR_k = N alpha^2 K^2 w_k^2 |g_k|^2 / D_k with D_k the per-subcarrier
    noise power (filtered clipping noise + shot noise + background); ACO
    carries an extra factor 4 in the denominator because the rectifier
    keeps half of each symbol's amplitude.

    Raising one ``w_k`` raises SNR_k through the numerator, but it also
    raises ``sigma_y`` and therefore the clipping-noise floor shared by all
    subcarriers, so SNR is *not* globally monotone in a single weight unless
    ``sigma_y`` is held fixed by rebalancing the other weights.
    """
    if channel.n != config.n:
        raise ValueError(f"channel has {channel.n} gains, waveform expects {config.n}")
    w = config.weight_array
    sigma_y = config.sigma_y
    if sigma_y == 0.0:
        return np.zeros_like(w)
    stats = clip_stats(config)
    gk2 = np.abs(channel.gain_array[config.data_k]) ** 2
    alpha = channel.alpha
    noise = (alpha * alpha * stats.sigma2 * gk2
             + alpha * channel.g0 * _dc_noise_power(config.scheme, stats, sigma_y, config.b_dc)
             + channel.lambda_b)
    if config.scheme == Scheme.ACO:
        noise = 4.0 * noise
    return config.n * alpha * alpha * stats.k ** 2 * w * w * gk2 / noise


def snr_subcarrier(scheme: Scheme, k: int, config: WaveformConfig,
                   channel: ChannelConfig) -> float:
    """Linear SNR of one data subcarrier."""
    if scheme != config.scheme:
        raise ValueError(f"config is {config.scheme.value}, requested {scheme.value}")
    data_k = config.data_k
    pos = np.flatnonzero(data_k == k)
    if pos.size == 0:
        raise ValueError(f"k={k} is not a data subcarrier for {scheme.value} with n={config.n}")
    return float(subcarrier_snrs(config, channel)[pos[0]])


def mean_transmit_power(scheme: Scheme, config: WaveformConfig) -> float:
    """Mean optical power of the clipped waveform.

    DCO: ``B_DC + beta``; ACO: ``sigma_y / sqrt(2 pi) + beta``.
    """
    if scheme != config.scheme:
        raise ValueError(f"config is {config.scheme.value}, requested {scheme.value}")
    sigma_y = config.sigma_y
    if sigma_y == 0.0:
        return 0.0
    stats = clip_stats(config)
    if scheme == Scheme.DCO:
        return config.b_dc + stats.beta
    return sigma_y / SQRT_2PI + stats.beta


def total_rate(scheme: Scheme, config: WaveformConfig, channel: ChannelConfig,
               base: float = DEFAULT_RATE_LOG_BASE) -> float:
    """Sum of ``log(1 + SNR_k)`` over the data subcarriers.

    ``base`` selects the logarithm base of the objective (2 by default, see
    :data:`DEFAULT_RATE_LOG_BASE`).
    """
    if scheme != config.scheme:
        raise ValueError(f"config is {config.scheme.value}, requested {scheme.value}")
    if base <= 1.0:
        raise ValueError(f"log base must exceed 1, got {base}")
    snr = subcarrier_snrs(config, channel)
    return float(np.sum(np.log1p(snr)) / math.log(base))


def subcarrier_report(config: WaveformConfig, channel: ChannelConfig, k: int,
                      snr_empirical: Optional[float] = None,
                      base: float = DEFAULT_RATE_LOG_BASE) -> SubcarrierReport:
    """Analytic SNR and rate contribution of one subcarrier."""
    snr = snr_subcarrier(config.scheme, k, config, channel)
    return SubcarrierReport(k=k, snr_analytic=snr,
                            rate=math.log1p(snr) / math.log(base),
                            snr_empirical=snr_empirical)
