from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from angular_processing import (
    AngularScan,
    ComplexPattern,
    DegradationCdf,
    ScanMetadata,
    azimuth_gain,
    degradation_from_nominal,
    dkw_epsilon,
    effective_pattern,
    empirical_cdf,
    fraction_within,
    gaussian_beam_pattern,
    impulse_pattern,
    isotropic_pattern,
    omni_path_gain,
    simulate_full_scattering,
    synthetic_scan,
    uniform_grid,
    wrap_angle_deg,
)
from common_runtime import DomainError, InputDataError


class TestScan:
    def test_needs_thirty_six_samples(self):
        angles = uniform_grid(36)[:35]
        with pytest.raises(DomainError):
            AngularScan(angles, np.ones(35))

    def test_angles_strictly_increasing(self):
        angles = uniform_grid(72)
        angles[5] = angles[4]
        with pytest.raises(DomainError):
            AngularScan(angles, np.ones(72))

    def test_power_positive(self):
        power = np.ones(72)
        power[3] = 0.0
        with pytest.raises(DomainError):
            AngularScan(uniform_grid(72), power)

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            AngularScan(uniform_grid(72), np.ones(71))


class TestOmniPathGain:
    def test_uniform_scan(self):
        meta = ScanMetadata(tx_power_dbm=22.0, tx_gain_dbi=2.0, rx_elev_gain_dbi=9.5)
        scan = AngularScan(uniform_grid(144), np.full(144, 1e-6), meta)
        assert omni_path_gain(scan) == pytest.approx(-60.0 - 33.5)

    def test_scales_with_received_power(self):
        base = synthetic_scan()
        louder = AngularScan(base.angles_deg, 10.0 * base.power_mw, base.meta)
        assert omni_path_gain(louder) - omni_path_gain(base) == pytest.approx(10.0)


class TestAzimuthGain:
    def test_uniform_pattern_is_zero(self):
        assert azimuth_gain(isotropic_pattern()) == pytest.approx(0.0, abs=1e-12)

    def test_gaussian_beam(self):
        assert azimuth_gain(gaussian_beam_pattern(144, 10.0, None)) == pytest.approx(15.3, abs=0.3)

    def test_sidelobe_floor_lowers_gain(self):
        no_floor = azimuth_gain(gaussian_beam_pattern(144, 10.0, None))
        with_floor = azimuth_gain(gaussian_beam_pattern(144, 10.0, -25.0))
        assert with_floor < no_floor
        assert with_floor == pytest.approx(14.89, abs=0.05)

    def test_invariant_to_scale(self):
        scan = synthetic_scan()
        assert azimuth_gain(scan.power_mw * 1e3) == pytest.approx(azimuth_gain(scan))

    def test_not_negative(self, rng):
        power = rng.exponential(size=144)
        assert azimuth_gain(power) >= 0.0

    def test_empty(self):
        with pytest.raises(DomainError):
            azimuth_gain(np.array([]))


class TestEffectivePattern:
    def test_impulse_channel_shifts_antenna(self):
        antenna = gaussian_beam_pattern(144, 10.0, -25.0)
        out = effective_pattern(impulse_pattern(144, 10), antenna)
        assert out.power == pytest.approx(np.roll(antenna.power, 10) / 144)
        assert azimuth_gain(out) == pytest.approx(azimuth_gain(antenna))

    def test_two_paths_cost_three_db(self):
        antenna = gaussian_beam_pattern(144, 10.0, None)
        channel = ComplexPattern(uniform_grid(144), impulse_pattern(144, 0).amplitude + impulse_pattern(144, 12).amplitude)
        drop = azimuth_gain(antenna) - azimuth_gain(effective_pattern(channel, antenna))
        assert drop == pytest.approx(3.01, abs=0.05)

    def test_impulse_channel_conserves_power(self):
        antenna = gaussian_beam_pattern(144, 10.0, -25.0)
        channel = impulse_pattern(144, 30, amplitude=2.0)
        out = effective_pattern(channel, antenna)
        assert out.power.mean() == pytest.approx(channel.power.mean() * antenna.power.mean())

    def test_random_channels_conserve_power_on_average(self, rng):
        antenna = gaussian_beam_pattern(144, 10.0, -25.0)
        means = []
        for _ in range(2000):
            draw = rng.standard_normal((2, 144))
            channel = ComplexPattern(uniform_grid(144), (draw[0] + 1j * draw[1]) / np.sqrt(2.0))
            means.append(effective_pattern(channel, antenna).power.mean())
        assert np.mean(means) == pytest.approx(antenna.power.mean(), rel=0.03)

    def test_grid_mismatch(self):
        with pytest.raises(DomainError):
            effective_pattern(isotropic_pattern(144), isotropic_pattern(288))

    def test_pattern_needs_uniform_grid(self):
        angles = uniform_grid(144)
        angles[1] += 0.5
        with pytest.raises(DomainError):
            ComplexPattern(angles, np.ones(144))

    def test_pattern_minimum_resolution(self):
        with pytest.raises(DomainError):
            isotropic_pattern(72)


class TestFullScattering:
    @pytest.mark.slow
    @pytest.mark.timeout(30)
    def test_isotropic_matches_exponential_oracle(self):
        gains = simulate_full_scattering(impulse_pattern(144), 10_000, seed=11)
        oracle_rng = np.random.default_rng(12)
        power = oracle_rng.exponential(size=(10_000, 144))
        oracle = 10.0 * np.log10(power.max(axis=1) / power.mean(axis=1))
        assert gains.mean() == pytest.approx(oracle.mean(), abs=0.3)

    def test_reproducible(self):
        antenna = gaussian_beam_pattern()
        first = simulate_full_scattering(antenna, 50, seed=5)
        second = simulate_full_scattering(antenna, 50, seed=5)
        assert np.array_equal(first, second)

    def test_scattering_degrades_directional_gain(self):
        antenna = gaussian_beam_pattern()
        nominal = azimuth_gain(antenna)
        degradation = degradation_from_nominal(simulate_full_scattering(antenna, 500, seed=3), nominal)
        assert np.median(degradation) > 2.0
        assert fraction_within(degradation, 2.0) < 0.5

    @pytest.mark.slow
    @pytest.mark.timeout(30)
    def test_ninety_ninth_percentile_below_nominal(self):
        antenna = gaussian_beam_pattern(144, 10.0)
        gains = simulate_full_scattering(antenna, 10_000, seed=21)
        assert np.percentile(gains, 99) < azimuth_gain(antenna)

    def test_needs_trials(self):
        with pytest.raises(DomainError):
            simulate_full_scattering(gaussian_beam_pattern(), 0, seed=1)


class TestDkw:
    def test_epsilon_value(self):
        assert dkw_epsilon(1000, 0.1) == pytest.approx(0.0387, abs=1e-4)

    def test_epsilon_shrinks_with_samples(self):
        assert dkw_epsilon(4000) == pytest.approx(dkw_epsilon(1000) / 2.0)

    def test_invalid_alpha(self):
        with pytest.raises(DomainError):
            dkw_epsilon(100, 1.0)

    @pytest.mark.slow
    @pytest.mark.timeout(30)
    def test_band_coverage(self):
        covered = 0
        for seed in range(200):
            sample = np.random.default_rng(seed).standard_normal(200)
            cdf = empirical_cdf(sample, alpha=0.1)
            if stats.kstest(sample, "norm").statistic <= cdf.band_epsilon:
                covered += 1
        # nominal coverage is 90%; allow ~3.5 binomial sd
        assert covered >= 165

    def test_cdf_shape(self):
        cdf = empirical_cdf(np.array([3.0, 1.0, 2.0, 4.0]))
        assert list(cdf.values) == [1.0, 2.0, 3.0, 4.0]
        assert cdf.probabilities == pytest.approx([0.25, 0.5, 0.75, 1.0])
        assert np.all(cdf.band_lower >= 0.0) and np.all(cdf.band_upper <= 1.0)
        assert cdf.evaluate(2.5) == pytest.approx(0.5)


class TestDegradationCdf:
    def test_default_anchor(self):
        cdf = DegradationCdf.default()
        assert cdf.inverse(0.9) == pytest.approx(2.0)
        assert cdf.inverse(0.45) == pytest.approx(1.0)
        assert cdf.inverse(1.0) == pytest.approx(4.0)

    def test_ninety_percent_within_two_db(self, rng):
        draws = DegradationCdf.default().sample(rng, 20_000)
        assert fraction_within(draws, 2.0) == pytest.approx(0.9, abs=0.01)

    def test_zero(self, rng):
        assert np.all(DegradationCdf.zero().sample(rng, 10) == 0.0)

    @pytest.mark.parametrize(
        "deg, prob",
        [
            ([0.0, 2.0], [0.0, 0.8]),
            ([2.0, 0.0], [0.0, 1.0]),
            ([0.0], [1.0]),
            ([-1.0, 2.0], [0.0, 1.0]),
        ],
    )
    def test_invalid(self, deg, prob):
        with pytest.raises(InputDataError):
            DegradationCdf(np.array(deg), np.array(prob))


class TestWrapAngle:
    def test_range(self):
        wrapped = wrap_angle_deg(np.array([-540.0, -180.0, 0.0, 190.0, 360.0]))
        assert wrapped == pytest.approx([180.0, 180.0, 0.0, -170.0, 0.0])
