import dataclasses
import math

import numpy as np
import pytest

from fdisac.scenario import (
    LOS_ONLY_KAPPA,
    Bearing,
    ChannelSet,
    ConfigError,
    SystemConfig,
    dbm_to_mw,
    float_key,
    ground_truth,
    make_rng,
    pathloss_db,
    radar_attenuation,
    rician_channel,
    steering_rx,
    steering_tx,
    synthesize,
)


class TestSystemConfig:
    def test_reference_defaults(self):
        cfg = SystemConfig()
        assert (cfg.n_t, cfg.n_r, cfg.n_u, cfg.n_d) == (16, 16, 2, 2)
        assert cfg.p_d_mw == pytest.approx(100.0)
        assert cfg.p_u_mw == pytest.approx(10.0)
        assert cfg.noise_mw == pytest.approx(10 ** -9.4)
        assert cfg.wavelength == pytest.approx(0.125)
        assert cfg.sample_period == pytest.approx(5e-8)
        assert cfg.beta == 1e-25 and cfg.epsilon == 1e-5

    @pytest.mark.parametrize("key, value", [("n_t", 0), ("n_r", -1), ("beta", 0.0),
                                            ("epsilon", -1e-3), ("hd_fraction", 1.5),
                                            ("kappa", -1.0)])
    def test_invalid_values_name_the_key(self, key, value):
        with pytest.raises(ConfigError) as info:
            dataclasses.replace(SystemConfig(), **{key: value})
        assert info.value.key == key

    def test_bad_bearing(self):
        with pytest.raises(ConfigError) as info:
            SystemConfig(target=Bearing(95.0, 7.5, 20.0))
        assert info.value.key == "target.theta"

    def test_with_priority(self):
        assert SystemConfig().with_priority(100.0).alphas == (100.0, 100.0, 1.0, 1.0)


class TestSteering:
    def test_broadside_is_ones(self):
        np.testing.assert_allclose(steering_rx(0.0, 8), np.ones(8))

    def test_unit_modulus_and_phase(self):
        a = steering_tx(30.0, 16)
        np.testing.assert_allclose(np.abs(a), 1.0)
        # half-wavelength spacing: phase step π·sin θ
        np.testing.assert_allclose(a[1] / a[0], np.exp(1j * np.pi * 0.5))

    def test_invalid_size(self):
        with pytest.raises(ValueError):
            steering_rx(0.0, 0)


class TestLargeScale:
    def test_pathloss_free_space_at_d0(self):
        cfg = SystemConfig()
        expected = -20 * math.log10(cfg.wavelength / (4 * math.pi))
        assert pathloss_db(1.0, cfg) == pytest.approx(expected)
        assert pathloss_db(10.0, cfg) - pathloss_db(1.0, cfg) == pytest.approx(22.0)

    def test_radar_attenuation_r4(self):
        a1 = radar_attenuation(1.0, 1.0, 0.125)
        a2 = radar_attenuation(2.0, 1.0, 0.125)
        assert a1 / a2 == pytest.approx(4.0)  # amplitude ∝ 1/r²

    def test_ground_truth_doppler(self):
        gt = ground_truth(SystemConfig(), Bearing(45.0, 7.5, 20.0))
        assert gt.f_d == pytest.approx(320.0)

    def test_dbm(self):
        assert dbm_to_mw(20.0) == pytest.approx(100.0)


class TestRician:
    def test_los_only_draws_nothing(self):
        rng = make_rng(1)
        probe = make_rng(1)
        h = rician_channel(10.0, -20.0, 4, 3, LOS_ONLY_KAPPA, 2.0, rng)
        assert rng.standard_normal() == probe.standard_normal()
        expected = math.sqrt(2.0) * np.outer(steering_rx(10.0, 4), steering_tx(-20.0, 3))
        np.testing.assert_allclose(h, expected)

    def test_conjugate_convention(self):
        h = rician_channel(10.0, -20.0, 4, 3, LOS_ONLY_KAPPA, 1.0, make_rng(1), conjugate=True)
        np.testing.assert_allclose(h, np.outer(steering_rx(10.0, 4), steering_tx(-20.0, 3).conj()))

    def test_mean_power(self):
        # E|h_ij|² = η for any κ
        rng = make_rng(7)
        h = np.stack([rician_channel(0.0, 30.0, 4, 4, 1.0, 3.0, rng) for _ in range(4000)])
        assert np.mean(np.abs(h) ** 2) == pytest.approx(3.0, rel=0.03)

    def test_rejects_negative_kappa(self):
        with pytest.raises(ValueError):
            rician_channel(0.0, 0.0, 2, 2, -1.0, 1.0, make_rng(0))


class TestSynthesize:
    def test_shapes(self, reference_channels):
        ch, _ = reference_channels
        assert ch.h_u.shape == (16, 2) and ch.h_d.shape == (2, 16)
        assert ch.h_r.shape == ch.h_si.shape == ch.h.shape == (16, 16)
        np.testing.assert_allclose(ch.h, ch.h_r + ch.h_si)

    def test_deterministic(self):
        cfg = SystemConfig()
        a, _ = synthesize(cfg, rng=make_rng(3, 1))
        b, _ = synthesize(cfg, rng=make_rng(3, 1))
        for x, y in zip(dataclasses.astuple(a), dataclasses.astuple(b)):
            np.testing.assert_array_equal(x, y)

    def test_si_calibration(self):
        # mean per-entry SI power at full transmit power = noise + SI level
        cfg = SystemConfig(si_level_db=40.0)
        rng = make_rng(11)
        powers = [np.mean(np.abs(synthesize(cfg, rng=rng)[0].h_si) ** 2) for _ in range(200)]
        target = dbm_to_mw(cfg.noise_dbm + 40.0) / cfg.p_d_mw
        assert np.mean(powers) == pytest.approx(target, rel=0.03)

    def test_radar_channel_rank_one(self, reference_channels):
        ch, _ = reference_channels
        s = np.linalg.svd(ch.h_r, compute_uv=False)
        assert s[1] < 1e-12 * s[0]

    def test_without_si(self, reference_channels):
        ch, _ = reference_channels
        clean = ch.without_si()
        assert not clean.h_si.any()
        np.testing.assert_array_equal(clean.h, ch.h_r)

    def test_build_shape_check(self):
        with pytest.raises(ValueError):
            ChannelSet.build(np.ones((3, 2)), np.ones((2, 4)), np.ones((4, 4)), np.ones((4, 4)))


class TestSeeds:
    def test_float_key_distinct(self):
        keys = {float_key(x) for x in (1.0, 10.0, 100.0, 1000.0, 10.5, -1.0, 0.0)}
        assert len(keys) == 7

    def test_streams_independent(self):
        a = make_rng(0, 1, 2).standard_normal(4)
        b = make_rng(0, 2, 1).standard_normal(4)
        c = make_rng(0, 1, 2).standard_normal(4)
        assert not np.allclose(a, b)
        np.testing.assert_array_equal(a, c)

    def test_negative_stream_rejected(self):
        with pytest.raises(ValueError):
            make_rng(0, -1)
