"""Closed-form clipping statistics against their defining integrals and
Monte Carlo estimates."""

import math

import numpy as np
import pytest

from photon_ofdm.analytic import (
    ChannelConfig,
    Scheme,
    SubcarrierReport,
    WaveformConfig,
    clip_stats_aco,
    clip_stats_dco,
    clipped_mean_dco,
    data_subcarriers,
    mean_transmit_power,
    sigma_y_from_weights,
    snr_subcarrier,
    subcarrier_report,
    subcarrier_snrs,
    total_rate,
    variance_xhat,
)
from photon_ofdm.channel import default_channel
from photon_ofdm.quadrature import (
    clip_stats_aco_quadrature,
    clip_stats_dco_quadrature,
    mean_clipped_power_dco_quadrature,
)

FIELDS = ("k", "mu", "sigma2", "beta")


def _rel(value, reference, floor):
    return abs(value - reference) / max(abs(reference), floor)


class TestClipStatsAgainstQuadrature:
    def test_dco_grid(self):
        for eb in np.linspace(0.3, 3.5, 5):
            for off in np.linspace(0.3, 3.0, 4):
                closed = clip_stats_dco(eb, eb + off, 1.0)
                oracle = clip_stats_dco_quadrature(eb, eb + off, 1.0)
                for f in FIELDS:
                    assert _rel(getattr(closed, f), getattr(oracle, f), 1e-6) < 1e-6, \
                        f"{f} at ({eb}, {eb + off})"

    def test_dco_scales_with_sigma_y(self):
        a = clip_stats_dco(1.2, 2.7, 1.0)
        b = clip_stats_dco(1.2, 2.7, 0.31)
        assert b.k == pytest.approx(a.k, rel=1e-14)
        assert b.mu == pytest.approx(0.31 * a.mu, rel=1e-12)
        assert b.beta == pytest.approx(0.31 * a.beta, rel=1e-12)
        assert b.sigma2 == pytest.approx(0.31 ** 2 * a.sigma2, rel=1e-12)

    def test_aco_grid(self):
        for et in np.linspace(0.3, 5.0, 9):
            closed = clip_stats_aco(et, 1.0)
            oracle = clip_stats_aco_quadrature(et, 1.0)
            for f in FIELDS:
                assert _rel(getattr(closed, f), getattr(oracle, f), 1e-6) < 1e-6

    def test_symmetric_clip_window_has_zero_power_shift(self):
        # bias one sigma, top two sigma: the clip interval is symmetric
        # about the mean, so clipping cannot move the mean power
        assert clip_stats_dco(1.0, 2.0, 1.0).beta == pytest.approx(0.0, abs=1e-15)

    def test_aco_k_value(self):
        from photon_ofdm.qfunc import gauss_q
        assert clip_stats_aco(2.0, 1.0).k == pytest.approx(1.0 - 2.0 * gauss_q(2.0), rel=1e-15)
        assert clip_stats_aco(2.0, 1.0).k == pytest.approx(0.9544997, rel=1e-6)


class TestNoClippingLimits:
    def test_dco(self):
        stats = clip_stats_dco(20.0, 45.0, 2.0)
        assert stats.k == pytest.approx(1.0, abs=1e-13)
        assert abs(stats.mu) < 1e-12
        assert abs(stats.sigma2) < 1e-12
        assert abs(stats.beta) < 1e-12

    def test_aco(self):
        stats = clip_stats_aco(40.0, 2.0)
        assert stats.k == 1.0
        assert stats.mu == 0.0
        assert stats.sigma2 == 0.0
        assert stats.beta == 0.0

    def test_k_bounded(self):
        for eb in np.linspace(0.25, 6.0, 8):
            for off in np.linspace(0.25, 6.0, 8):
                k = clip_stats_dco(eb, eb + off, 1.0).k
                assert 0.0 < k <= 1.0
        for et in np.linspace(0.05, 10.0, 12):
            assert 0.0 < clip_stats_aco(et, 1.0).k <= 1.0


class TestSecondMomentIdentity:
    def test_dco_noise_power_reconstruction(self):
        # E[n_c^2] recovered as E[y_hat^2] - K^2 E[(y+B)^2] must equal
        # sigma2 + mu^2
        for eb, et in ((0.7, 1.9), (1.0, 2.0), (2.2, 4.9)):
            stats = clip_stats_dco(eb, et, 1.3)
            oracle = clip_stats_dco_quadrature(eb, et, 1.3)
            lhs = oracle.sigma2 + oracle.mu ** 2
            rhs = stats.sigma2 + stats.mu ** 2
            assert lhs == pytest.approx(rhs, abs=1e-8)


class TestBussgangMonteCarlo:
    def test_dco_scaling_factor_from_draws(self):
        rng = np.random.default_rng(7)
        sigma_y, eb, et = 1.0, 1.0, 2.0
        n = 10_000_000
        y = rng.normal(0.0, sigma_y, n)
        biased = y + eb * sigma_y
        clipped = np.clip(biased, 0.0, et * sigma_y)
        est = np.mean(clipped * biased) / np.mean(biased * biased)
        # 3 standard errors of the ratio estimator (delta method upper bound)
        se = 3.0 * np.std(clipped * biased) / (np.mean(biased ** 2) * math.sqrt(n))
        assert abs(est - clip_stats_dco(eb, et, sigma_y).k) < se


class TestValidation:
    def test_dco_rejects_bias_at_or_above_top(self):
        with pytest.raises(ValueError):
            clip_stats_dco(2.0, 2.0, 1.0)
        with pytest.raises(ValueError):
            clip_stats_dco(3.0, 2.0, 1.0)

    def test_dco_rejects_nonpositive_sigma(self):
        with pytest.raises(ValueError):
            clip_stats_dco(1.0, 2.0, 0.0)

    def test_aco_rejects_nonpositive_inputs(self):
        with pytest.raises(ValueError):
            clip_stats_aco(0.0, 1.0)
        with pytest.raises(ValueError):
            clip_stats_aco(2.0, -1.0)

    def test_dco_b_dc_consistency_check(self):
        clip_stats_dco(1.0, 2.0, 2.0, b_dc=2.0)
        with pytest.raises(ValueError):
            clip_stats_dco(1.0, 2.0, 2.0, b_dc=1.0)

    def test_waveform_config_validation(self):
        with pytest.raises(ValueError):
            WaveformConfig.uniform(Scheme.DCO, 64, 0.5, epsilon_top=2.0)  # no bias
        with pytest.raises(ValueError):
            WaveformConfig.uniform(Scheme.ACO, 64, 0.5, epsilon_top=2.0, epsilon_bias=1.0)
        with pytest.raises(ValueError):
            WaveformConfig.uniform(Scheme.DCO, 63, 0.5, epsilon_top=2.0, epsilon_bias=1.0)
        with pytest.raises(ValueError):
            WaveformConfig(Scheme.DCO, 64, (0.5,) * 30, 2.0, 1.0)  # wrong count

    def test_channel_config_validation(self):
        with pytest.raises(ValueError):
            ChannelConfig(alpha=1.0, lambda_b=-0.1, gains=(1.0,) * 64)
        gains = np.ones(64, dtype=complex)
        gains[3] = 1.0 + 0.5j  # breaks Hermitian symmetry
        with pytest.raises(ValueError):
            ChannelConfig(alpha=1.0, lambda_b=0.0, gains=tuple(gains))

    def test_data_subcarriers(self):
        assert data_subcarriers(Scheme.DCO, 64).tolist() == list(range(1, 32))
        assert data_subcarriers(Scheme.ACO, 64).tolist() == list(range(1, 32, 2))
        with pytest.raises(ValueError):
            data_subcarriers(Scheme.DCO, 48)

    def test_sigma_y_counts_hermitian_mirrors(self):
        assert sigma_y_from_weights([0.5] * 31) == pytest.approx(math.sqrt(62 * 0.25))
        assert sigma_y_from_weights([0.5] * 16) == pytest.approx(math.sqrt(32 * 0.25))


class TestVarianceXhat:
    def test_background_only_reduces_to_lambda_over_n(self):
        channel = ChannelConfig(alpha=0.0, lambda_b=0.7,
                                gains=tuple(np.ones(64, dtype=complex)))
        stats = clip_stats_dco(1.0, 2.0, 1.0)
        v = variance_xhat(Scheme.DCO, stats, channel, 5, 64, 1.0, 1.0)
        assert v == pytest.approx(0.7 / 64, rel=1e-15)
        stats = clip_stats_aco(2.0, 1.0)
        v = variance_xhat(Scheme.ACO, stats, channel, 5, 64, 1.0, 0.0)
        assert v == pytest.approx(0.7 / 64, rel=1e-15)

    def test_scheme_mismatch_rejected(self):
        channel = default_channel()
        stats = clip_stats_dco(1.0, 2.0, 1.0)
        with pytest.raises(ValueError):
            variance_xhat(Scheme.ACO, stats, channel, 1, 64, 1.0, 0.0)


class TestSnrAndRate:
    def setup_method(self):
        self.channel = default_channel()

    def test_zero_weight_zero_snr(self):
        w = [0.5] * 31
        w[4] = 0.0
        wf = WaveformConfig(Scheme.DCO, 64, tuple(w), 4.0, 2.0)
        assert snr_subcarrier(Scheme.DCO, 5, wf, self.channel) == 0.0

    def test_non_data_subcarrier_rejected(self):
        wf = WaveformConfig.uniform(Scheme.DCO, 64, 0.5, epsilon_top=4.0, epsilon_bias=2.0)
        for k in (0, 32, 40):
            with pytest.raises(ValueError):
                snr_subcarrier(Scheme.DCO, k, wf, self.channel)
        aco = WaveformConfig.uniform(Scheme.ACO, 64, 0.5, epsilon_top=2.0)
        with pytest.raises(ValueError):
            snr_subcarrier(Scheme.ACO, 2, aco, self.channel)

    def test_numerator_linear_in_weight_squared_at_fixed_sigma(self):
        # trade weight between two subcarriers with equal gain magnitude to
        # keep sigma_y fixed; SNR_k then scales exactly with w_k^2
        gains = np.ones(64, dtype=complex)
        channel = ChannelConfig(alpha=1e3, lambda_b=0.001, gains=tuple(gains))
        base = np.full(31, 0.5)
        snr0 = subcarrier_snrs(WaveformConfig(Scheme.DCO, 64, tuple(base), 4.0, 2.0),
                               channel)
        w = base.copy()
        w[2] = math.sqrt(0.5 ** 2 + 0.3 ** 2)
        w[7] = math.sqrt(0.5 ** 2 - 0.3 ** 2)
        snr1 = subcarrier_snrs(WaveformConfig(Scheme.DCO, 64, tuple(w), 4.0, 2.0),
                               channel)
        assert snr1[2] / snr0[2] == pytest.approx((w[2] / 0.5) ** 2, rel=1e-12)
        assert snr1[7] / snr0[7] == pytest.approx((w[7] / 0.5) ** 2, rel=1e-12)

    def test_total_rate_zero_for_zero_weights(self):
        wf = WaveformConfig(Scheme.DCO, 64, (0.0,) * 31, 4.0, 2.0)
        assert total_rate(Scheme.DCO, wf, self.channel) == 0.0

    def test_total_rate_base_conversion(self):
        wf = WaveformConfig.uniform(Scheme.DCO, 64, 0.5, epsilon_top=4.0, epsilon_bias=2.0)
        nat = total_rate(Scheme.DCO, wf, self.channel, base=math.e)
        two = total_rate(Scheme.DCO, wf, self.channel, base=2.0)
        assert two == pytest.approx(nat / math.log(2.0), rel=1e-12)

    def test_subcarrier_report_fields(self):
        wf = WaveformConfig.uniform(Scheme.DCO, 64, 0.5, epsilon_top=4.0, epsilon_bias=2.0)
        report = subcarrier_report(wf, self.channel, 3, snr_empirical=12.5)
        assert isinstance(report, SubcarrierReport)
        assert report.k == 3
        assert report.snr_analytic >= 0.0
        assert report.rate == pytest.approx(math.log1p(report.snr_analytic))
        assert report.snr_empirical == 12.5
        assert subcarrier_report(wf, self.channel, 3).snr_empirical is None

    def test_aco_snr_saturates_in_top_level(self):
        snr_at = []
        for et in (1.0, 2.0, 4.0, 6.0, 8.0):
            wf = WaveformConfig.uniform(Scheme.ACO, 64, 0.5, epsilon_top=et)
            snr_at.append(snr_subcarrier(Scheme.ACO, 1, wf, self.channel))
        assert all(b > a for a, b in zip(snr_at, snr_at[1:]))
        assert snr_at[-1] / snr_at[-2] < 1.01  # saturated


class TestMeanTransmitPower:
    def test_dco_limit_is_pure_bias(self):
        wf = WaveformConfig.uniform(Scheme.DCO, 64, 0.1, epsilon_top=40.0, epsilon_bias=20.0)
        assert mean_transmit_power(Scheme.DCO, wf) == pytest.approx(wf.b_dc, rel=1e-12)

    def test_aco_limit_is_half_gaussian_mean(self):
        wf = WaveformConfig.uniform(Scheme.ACO, 64, 0.1, epsilon_top=40.0)
        expected = wf.sigma_y / math.sqrt(2.0 * math.pi)
        assert mean_transmit_power(Scheme.ACO, wf) == pytest.approx(expected, rel=1e-12)

    def test_monotone_in_bias_at_fixed_weights(self):
        powers = []
        for eb in np.linspace(0.2, 3.4, 9):
            wf = WaveformConfig.uniform(Scheme.DCO, 64, 0.5, epsilon_top=3.5, epsilon_bias=eb)
            powers.append(mean_transmit_power(Scheme.DCO, wf))
        assert all(b >= a for a, b in zip(powers, powers[1:]))

    def test_general_clipped_mean_matches_quadrature_outside_strict_window(self):
        for eb, et in ((0.0, 2.0), (2.5, 2.0), (1.0, 0.5)):
            got = float(clipped_mean_dco(eb, et))
            ref = mean_clipped_power_dco_quadrature(1.0, eb, et)
            assert got == pytest.approx(ref, abs=1e-10)
