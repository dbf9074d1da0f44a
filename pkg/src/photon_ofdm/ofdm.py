"""Time-domain waveform construction for DCO and ACO optical OFDM.

Transform conventions: the transmitter synthesizes
``y_n = sum_k x_k exp(+j 2 pi k n / N)`` (no ``1/N``), the receiver applies
the matching analysis transform with the ``1/N``.  This keeps the clipping
constants from :mod:`photon_ofdm.analytic` valid verbatim.

Frame arrays may carry any number of leading batch dimensions; the subcarrier
axis is always the last one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from ._kernels import backend
from .analytic import Scheme, WaveformConfig

_QAM_SCALE = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class FrequencyFrame:
    """Subcarrier loading ``x_k = s_k w_k`` of one or more OFDM frames."""

    scheme: Scheme
    x: np.ndarray

    def __post_init__(self):
        check_hermitian(self.x)
        if self.scheme == Scheme.ACO:
            n = self.x.shape[-1]
            if np.any(np.abs(self.x[..., 0::2]) > 0.0):
                raise ValueError("ACO frames must leave every even subcarrier empty")


@dataclass(frozen=True)
class TimeFrame:
    """Clipped waveform together with its clipping levels.

    ``y`` is the raw synthesis output (before bias and clipping), ``y_hat``
    the nonnegative transmitted signal, bounded by ``y_max`` exactly.
    """

    y: np.ndarray
    y_hat: np.ndarray
    b_dc: float
    y_max: float


def check_hermitian(x, tol: float = 1e-9) -> None:
    """Validate Hermitian symmetry with empty DC and Nyquist bins."""
    x = np.asarray(x)
    n = x.shape[-1]
    if n < 4 or n & (n - 1):
        raise ValueError(f"frame length must be a power of two >= 4, got {n}")
    scale = float(np.max(np.abs(x))) or 1.0
    if np.any(np.abs(x[..., 0]) > tol * scale) or np.any(np.abs(x[..., n // 2]) > tol * scale):
        raise ValueError("DC and Nyquist subcarriers must be zero")
    mirror = np.conj(x[..., ::-1])
    if not np.allclose(x[..., 1:], mirror[..., :-1], atol=tol * scale, rtol=0.0):
        raise ValueError("frame is not Hermitian symmetric (x[N-k] != conj(x[k]))")


def random_qam_symbols(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-energy 4-QAM symbols ``(+-1 +- 1j)/sqrt(2)``.

    Consumes exactly two uniform doubles per symbol (real sign then imaginary
    sign), which is the layout the Monte Carlo kernels rely on for
    reproducibility.
    """
    u = rng.random(tuple(shape) + (2,))
    signs = np.where(u < 0.5, -_QAM_SCALE, _QAM_SCALE)
    return signs[..., 0] + 1j * signs[..., 1]


def build_frame(config: WaveformConfig, symbols: np.ndarray) -> np.ndarray:
    """Map data symbols onto the Hermitian subcarrier grid.

    ``symbols`` has the data subcarriers on its last axis (in the order of
    :func:`photon_ofdm.analytic.data_subcarriers`); the mirrored half and the
    empty DC/Nyquist bins are filled in here.
    """
    data_k = config.data_k
    symbols = np.asarray(symbols)
    if symbols.shape[-1] != data_k.size:
        raise ValueError(f"expected {data_k.size} symbols per frame, got {symbols.shape[-1]}")
    n = config.n
    x = np.zeros(symbols.shape[:-1] + (n,), dtype=complex)
    loaded = symbols * config.weight_array
    x[..., data_k] = loaded
    x[..., n - data_k] = np.conj(loaded)
    return x


def modulate(x) -> np.ndarray:
    """Synthesize the real time-domain waveform of a Hermitian frame."""
    x = np.asarray(x, dtype=complex)
    check_hermitian(x)
    n = x.shape[-1]
    y = np.fft.ifft(x, axis=-1) * n
    scale = float(np.sqrt(np.mean(np.abs(x) ** 2) * n)) or 1.0
    resid = float(np.max(np.abs(y.imag)))
    if resid > 1e-10 * scale:
        raise ValueError(f"imaginary residue {resid:.3e} after synthesis")
    return y.real


def clip_dco(y, epsilon_bias: float, epsilon_top: float, sigma_y: float) -> TimeFrame:
    """Add the DC bias and clamp to ``[0, y_max]``."""
    if not 0.0 < epsilon_bias < epsilon_top:
        raise ValueError(
            f"need 0 < epsilon_bias < epsilon_top, got ({epsilon_bias}, {epsilon_top})"
        )
    if sigma_y <= 0.0:
        raise ValueError(f"sigma_y must be positive, got {sigma_y}")
    y = np.asarray(y, dtype=float)
    b_dc = epsilon_bias * sigma_y
    y_max = epsilon_top * sigma_y
    return TimeFrame(y=y, y_hat=backend().biased_clip(y, b_dc, y_max), b_dc=b_dc, y_max=y_max)


def clip_aco(y, epsilon_top: float, sigma_y: float) -> TimeFrame:
    """Half-wave rectify and clamp at ``y_max`` (no bias)."""
    if epsilon_top <= 0.0 or sigma_y <= 0.0:
        raise ValueError(f"epsilon_top and sigma_y must be positive, got "
                         f"({epsilon_top}, {sigma_y})")
    y = np.asarray(y, dtype=float)
    y_max = epsilon_top * sigma_y
    return TimeFrame(y=y, y_hat=backend().biased_clip(y, 0.0, y_max), b_dc=0.0, y_max=y_max)


def check_antisymmetric(y, tol: float = 1e-10) -> None:
    """Validate the ACO half-period antisymmetry ``y[n] == -y[n + N/2]``."""
    y = np.asarray(y, dtype=float)
    n = y.shape[-1]
    half = n // 2
    scale = float(np.sqrt(np.mean(y * y))) or 1.0
    if np.max(np.abs(y[..., :half] + y[..., half:])) > tol * scale:
        raise ValueError("waveform is not antisymmetric over half a frame")


def dk_spectrum(y) -> np.ndarray:
    """Synthesis-basis coefficients of the half-wave distortion ``|y|/2``.

    For an antisymmetric input the rectifier distortion ``d_n = |y_n|/2`` has
    period ``N/2``, so every odd coefficient vanishes; that is what keeps the
    ACO data subcarriers distortion-free.
    """
    y = np.asarray(y, dtype=float)
    check_antisymmetric(y)
    return np.fft.ifft(np.abs(y) * 0.5, axis=-1)


def frame_waveform(config: WaveformConfig, symbols: np.ndarray) -> TimeFrame:
    """Full transmit chain: map, synthesize, bias (DCO) and clip."""
    y = modulate(build_frame(config, symbols))
    if config.scheme == Scheme.DCO:
        return clip_dco(y, config.epsilon_bias, config.epsilon_top, config.sigma_y)
    return clip_aco(y, config.epsilon_top, config.sigma_y)
