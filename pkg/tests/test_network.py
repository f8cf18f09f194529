"""Scenario generation: geometry, assignment, channel statistics, replay."""

import numpy as np
import pytest

from spcabeam import rng as rng_mod
from spcabeam.errors import AssignmentError, ConfigurationError
from spcabeam.network import (
    NetworkConfig,
    assign_subcarriers,
    bs_layout,
    channels_from_json,
    channels_to_json,
    draw_fading,
    draw_shadowing,
    drop_network,
    generate_channels,
    path_loss_amplitude,
    scenario_from_json,
    scenario_to_json,
    PATHLOSS_EXP,
    PATHLOSS_REF_M,
)


def wide_area_config(**over):
    base = dict(cells=3, users_per_cell=2, subcarriers=8, antennas=2,
                p_max=100.0, inter_bs_distance=1000.0,
                annulus_inner=500.0, annulus_outer=1000.0)
    base.update(over)
    return NetworkConfig.equal_weights(**base)


class TestGeometry:
    def test_serving_distances_within_annulus(self):
        cfg = wide_area_config()
        sc = drop_network(cfg, seed=3)
        for m in range(cfg.cells):
            serving = sc.distances[m, :, m]
            assert np.all(serving >= 500.0)
            assert np.all(serving <= 1000.0)

    def test_adjacent_bs_spacing(self):
        for m in (2, 3, 5):
            bs = bs_layout(m, 1000.0)
            for i in range(m):
                d = np.linalg.norm(bs[i] - bs[(i + 1) % m])
                assert d == pytest.approx(1000.0, rel=1e-12)

    def test_degenerate_annulus_pins_radius(self):
        cfg = wide_area_config(annulus_inner=700.0, annulus_outer=700.0)
        sc = drop_network(cfg, seed=1)
        for m in range(cfg.cells):
            assert np.allclose(sc.distances[m, :, m], 700.0)

    def test_seed_determinism(self):
        cfg = wide_area_config()
        a = drop_network(cfg, seed=42)
        b = drop_network(cfg, seed=42)
        assert np.array_equal(a.user_positions, b.user_positions)
        assert np.array_equal(a.assignment.user_of, b.assignment.user_of)

    def test_invalid_config_names_field(self):
        with pytest.raises(ConfigurationError, match="annulus_inner"):
            wide_area_config(annulus_inner=1200.0)
        with pytest.raises(ConfigurationError, match="p_max"):
            wide_area_config(p_max=-5.0)
        with pytest.raises(ConfigurationError, match="subcarriers"):
            wide_area_config(subcarriers=1)


class TestAssignment:
    def test_single_user_takes_everything(self):
        cfg = wide_area_config(users_per_cell=1, subcarriers=4)
        a = assign_subcarriers(cfg, seed=0)
        assert np.all(a.user_of == 0)

    def test_two_users_partition_64(self):
        cfg = wide_area_config(users_per_cell=2, subcarriers=64)
        a = assign_subcarriers(cfg, seed=5)
        for m in range(cfg.cells):
            counts = np.bincount(a.user_of[m], minlength=2)
            assert counts.sum() == 64
            assert np.all(counts >= 1)
            got = sorted(
                np.concatenate([a.subcarriers_of(m, 0), a.subcarriers_of(m, 1)])
            )
            assert got == list(range(64))

    def test_every_user_served_many_seeds(self):
        cfg = wide_area_config(users_per_cell=3, subcarriers=4)
        for seed in range(25):
            a = assign_subcarriers(cfg, seed=seed)
            a.check(cfg)

    def test_determinism(self):
        cfg = wide_area_config()
        a = assign_subcarriers(cfg, seed=9)
        b = assign_subcarriers(cfg, seed=9)
        assert np.array_equal(a.user_of, b.user_of)

    def test_too_few_subcarriers_rejected(self):
        with pytest.raises(ConfigurationError):
            wide_area_config(users_per_cell=5, subcarriers=4)


class TestChannels:
    def test_pathloss_reference_distance_unity(self):
        assert path_loss_amplitude(200.0) == 1.0

    def test_pathloss_monotone_decreasing(self):
        gains = path_loss_amplitude(np.linspace(50.0, 2000.0, 100))
        assert np.all(np.diff(gains) < 0)

    def test_channel_array_covers_all_triples(self):
        cfg = wide_area_config()
        sc = drop_network(cfg, seed=2)
        ch = generate_channels(sc, seed=2)
        assert ch.h.shape == (3, 2, 3, 8, 2)
        assert np.all(np.isfinite(ch.h.real)) and np.all(np.isfinite(ch.h.imag))

    def test_determinism(self):
        cfg = wide_area_config()
        sc = drop_network(cfg, seed=7)
        a = generate_channels(sc, seed=7)
        b = generate_channels(sc, seed=7)
        assert np.array_equal(a.h, b.h)

    def test_shadowing_variance_matches_model(self):
        # 10*log10(shadow) must have variance 8 within 5% over 1e5 draws
        shadow = draw_shadowing(rng_mod.stream(123, rng_mod.CHANNEL), 100_000)
        var = np.var(10.0 * np.log10(shadow))
        assert abs(var - 8.0) <= 0.05 * 8.0

    def test_fading_unit_variance(self):
        # per-entry |fading|^2 sample mean 1.0 +- 2% over 1e5 draws
        fading = draw_fading(rng_mod.stream(9, rng_mod.CHANNEL), 100_000)
        assert np.mean(np.abs(fading) ** 2) == pytest.approx(1.0, abs=0.02)

    def test_variance_scales_with_pathloss(self):
        # average |h|^2 across many draws tracks pathloss^2
        cfg_near = wide_area_config(cells=1, users_per_cell=1, subcarriers=200,
                                antennas=2, annulus_inner=300.0,
                                annulus_outer=300.0)
        cfg_far = wide_area_config(cells=1, users_per_cell=1, subcarriers=200,
                               antennas=2, annulus_inner=600.0,
                               annulus_outer=600.0)
        p_near = np.mean([
            np.abs(generate_channels(drop_network(cfg_near, 0), s).h) ** 2
            for s in range(40)])
        p_far = np.mean([
            np.abs(generate_channels(drop_network(cfg_far, 0), s).h) ** 2
            for s in range(40)])
        expect = ((300.0 / 600.0) ** (2 * PATHLOSS_EXP))
        assert p_far / p_near == pytest.approx(expect, rel=0.15)


class TestSerialization:
    def test_scenario_round_trip_bit_exact(self):
        cfg = wide_area_config()
        sc = drop_network(cfg, seed=77)
        back = scenario_from_json(scenario_to_json(sc))
        assert np.array_equal(back.user_positions, sc.user_positions)
        assert np.array_equal(back.distances, sc.distances)
        assert np.array_equal(back.assignment.user_of, sc.assignment.user_of)
        assert np.array_equal(back.config.p_max, cfg.p_max)

    def test_channels_round_trip_bit_exact(self):
        cfg = wide_area_config(subcarriers=4)
        sc = drop_network(cfg, seed=8)
        ch = generate_channels(sc, seed=8)
        back = channels_from_json(channels_to_json(ch))
        assert np.array_equal(back.h, ch.h)

    def test_schema_mismatch_rejected(self):
        with pytest.raises(ConfigurationError):
            scenario_from_json('{"schema": "other/9"}')


class TestRngStreams:
    def test_purpose_streams_differ(self):
        a = rng_mod.stream(5, rng_mod.DROP).random(4)
        b = rng_mod.stream(5, rng_mod.ASSIGN).random(4)
        assert not np.allclose(a, b)

    def test_trial_seeds_distinct_and_stable(self):
        seeds = [rng_mod.trial_seed(1000, t) for t in range(50)]
        assert len(set(seeds)) == 50
        assert seeds == [rng_mod.trial_seed(1000, t) for t in range(50)]
