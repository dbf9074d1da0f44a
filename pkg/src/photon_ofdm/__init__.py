"""Photon-level DCO/ACO optical OFDM: clipping analysis, link simulation,
and subcarrier power allocation."""

from .analytic import (
    ChannelConfig,
    ClipStats,
    Scheme,
    SubcarrierReport,
    WaveformConfig,
    clip_stats,
    clip_stats_aco,
    clip_stats_dco,
    data_subcarriers,
    mean_transmit_power,
    snr_subcarrier,
    subcarrier_snrs,
    total_rate,
    variance_xhat,
)
from .channel import (
    ALPHA_TABLE_CALIBRATED,
    LinkStats,
    alpha_from_wavelength,
    apply_gains,
    default_channel,
    demodulate,
    empirical_snr,
    load_gain_table,
    photon_sample,
    simulate_link,
    unbiased_estimate,
)
from .ofdm import (
    FrequencyFrame,
    TimeFrame,
    build_frame,
    clip_aco,
    clip_dco,
    dk_spectrum,
    frame_waveform,
    modulate,
    random_qam_symbols,
)
from .qfunc import gauss_phi, gauss_q

__version__ = "0.1.0"
