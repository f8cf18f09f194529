"""SINR, rates, power and feasibility metrics."""

import numpy as np
import pytest

from spcabeam.errors import ConfigurationError, ShapeError
from spcabeam.metrics import (
    BeamformerSet,
    LinkIndex,
    all_bs_powers,
    all_sinr,
    check_feasibility,
    desired_gains,
    per_bs_power,
    per_user_rates,
    sinr,
    weighted_sum_rate,
)
from spcabeam.network import Assignment, ChannelSet, NetworkConfig


def tiny_setup(M=1, N=1, Nt=1, K=1):
    """Hand-made channels/beams/assignment, all zeros, shapes consistent."""
    h = np.zeros((M, K, M, N, Nt), dtype=complex)
    g = np.zeros((M, N, Nt), dtype=complex)
    a = Assignment(user_of=np.zeros((M, N), dtype=int))
    return ChannelSet(h=h, seed=0), BeamformerSet(g=g), a


class TestSinr:
    def test_no_interferers_denominator_one(self):
        ch, beams, a = tiny_setup()
        ch.h[0, 0, 0, 0, 0] = np.sqrt(3.0)
        beams.g[0, 0, 0] = 1.0
        assert sinr(ch, beams, a, 0) == pytest.approx(3.0)

    def test_zero_beams_zero_sinr(self):
        ch, beams, a = tiny_setup(M=2)
        ch.h[:] = 1.0
        assert sinr(ch, beams, a, 0) == 0.0

    def test_two_cells_direct_substitution(self):
        # desired power 4, one cross power 1 -> 4 / (1 + 1) = 2
        ch, beams, a = tiny_setup(M=2)
        ch.h[0, 0, 0, 0, 0] = 2.0       # own link of cell 0
        ch.h[0, 0, 1, 0, 0] = 1.0       # cross channel from BS 1 to user 0
        ch.h[1, 0, 1, 0, 0] = 1.0       # cell 1's own link
        beams.g[:, 0, 0] = 1.0
        assert sinr(ch, beams, a, 0) == pytest.approx(2.0)

    def test_dimension_mismatch_raises(self):
        ch, beams, a = tiny_setup(M=2)
        bad = BeamformerSet(g=np.zeros((1, 1, 1), dtype=complex))
        with pytest.raises(ShapeError):
            sinr(ch, bad, a, 0)

    def test_phase_rotation_invariance(self):
        rng = np.random.default_rng(0)
        M, N, Nt, K = 3, 2, 2, 1
        ch, beams, a = tiny_setup(M=M, N=N, Nt=Nt, K=K)
        ch.h[:] = rng.normal(size=ch.h.shape) + 1j * rng.normal(size=ch.h.shape)
        beams.g[:] = rng.normal(size=beams.g.shape) + 1j * rng.normal(
            size=beams.g.shape)
        base = all_sinr(ch, beams, a)
        for _ in range(20):
            m = rng.integers(M)
            n = rng.integers(N)
            rotated = BeamformerSet(g=beams.g.copy())
            rotated.g[m, n] *= np.exp(1j * rng.uniform(0, 2 * np.pi))
            assert np.allclose(all_sinr(ch, rotated, a), base, rtol=1e-12)

    def test_monotone_in_single_link_gain(self):
        # scaling one desired channel up never lowers the weighted sum-rate
        rng = np.random.default_rng(3)
        M, N = 2, 2
        ch, beams, a = tiny_setup(M=M, N=N, Nt=2, K=1)
        ch.h[:] = rng.normal(size=ch.h.shape) + 1j * rng.normal(size=ch.h.shape)
        beams.g[:] = rng.normal(size=beams.g.shape)
        w = np.ones((M, 1))
        base = weighted_sum_rate(ch, beams, a, w)
        boosted = ChannelSet(h=ch.h.copy(), seed=0)
        boosted.h[0, 0, 0, 0] *= 1.5     # desired channel of link (0, 0) only
        assert weighted_sum_rate(boosted, beams, a, w) >= base - 1e-12


class TestWeightedSumRate:
    def test_all_zero_sinr(self):
        ch, beams, a = tiny_setup(M=2, N=3)
        assert weighted_sum_rate(ch, beams, a, np.ones((2, 1))) == 0.0

    def test_single_link_log2(self):
        ch, beams, a = tiny_setup()
        ch.h[0, 0, 0, 0, 0] = np.sqrt(3.0)
        beams.g[0, 0, 0] = 1.0
        assert weighted_sum_rate(ch, beams, a, np.ones((1, 1))) == pytest.approx(2.0)

    def test_weight_doubling_doubles_wsr(self):
        rng = np.random.default_rng(1)
        ch, beams, a = tiny_setup(M=2, N=3, Nt=2, K=1)
        ch.h[:] = rng.normal(size=ch.h.shape) + 1j * rng.normal(size=ch.h.shape)
        beams.g[:] = rng.normal(size=beams.g.shape)
        w = np.full((2, 1), 1.7)
        assert weighted_sum_rate(ch, beams, a, 2 * w) == pytest.approx(
            2 * weighted_sum_rate(ch, beams, a, w))

    def test_negative_weight_rejected(self):
        ch, beams, a = tiny_setup()
        with pytest.raises(ConfigurationError):
            weighted_sum_rate(ch, beams, a, np.array([[-1.0]]))

    def test_per_user_rates_sum_to_links(self):
        rng = np.random.default_rng(2)
        ch, beams, a = tiny_setup(M=2, N=4, Nt=1, K=2)
        a.user_of[:] = [[0, 1, 0, 1], [1, 1, 0, 0]]
        ch.h[:] = rng.normal(size=ch.h.shape) + 1j * rng.normal(size=ch.h.shape)
        beams.g[:] = rng.normal(size=beams.g.shape)
        per_user = per_user_rates(ch, beams, a, users_per_cell=2)
        total = weighted_sum_rate(ch, beams, a, np.ones((2, 2)))
        assert per_user.sum() == pytest.approx(total)


class TestPower:
    def test_zero_beams(self):
        _, beams, _ = tiny_setup(M=2, N=3, Nt=2)
        assert per_bs_power(beams, 0) == 0.0
        assert per_bs_power(beams, 1) == 0.0

    def test_two_subcarriers_sum(self):
        _, beams, _ = tiny_setup(M=1, N=2, Nt=2)
        beams.g[0, 0] = [0.5, 0.5]       # norm^2 = 0.5
        beams.g[0, 1] = [0.5, -0.5j]     # norm^2 = 0.5
        assert per_bs_power(beams, 0) == pytest.approx(1.0)

    def test_feasibility_boundary(self):
        cfg = NetworkConfig.equal_weights(
            cells=1, users_per_cell=1, subcarriers=2, antennas=1, p_max=1.0,
            inter_bs_distance=1.0, annulus_inner=1.0, annulus_outer=2.0)
        _, beams, _ = tiny_setup(M=1, N=2, Nt=1)
        beams.g[0, :, 0] = 0.5 + 0.5j    # |g|^2 = 0.5 exactly, total = p_max
        rep = check_feasibility(beams, cfg, tol=0.0)
        assert rep.ok

    def test_feasibility_violation_names_bs(self):
        cfg = NetworkConfig.equal_weights(
            cells=2, users_per_cell=1, subcarriers=1, antennas=1, p_max=1.0,
            inter_bs_distance=1.0, annulus_inner=1.0, annulus_outer=2.0)
        _, beams, _ = tiny_setup(M=2, N=1, Nt=1)
        beams.g[1, 0, 0] = np.sqrt(1.01)
        rep = check_feasibility(beams, cfg, tol=1e-6)
        assert not rep.ok
        assert any("BS 1" in v for v in rep.violations)

    def test_zero_beams_feasible(self):
        cfg = NetworkConfig.equal_weights(
            cells=1, users_per_cell=1, subcarriers=1, antennas=1, p_max=1.0,
            inter_bs_distance=1.0, annulus_inner=1.0, annulus_outer=2.0)
        _, beams, _ = tiny_setup()
        assert check_feasibility(beams, cfg, tol=0.0).ok


class TestLinkIndex:
    def test_bijection(self):
        idx = LinkIndex(3, 8)
        pairs = [idx.to_pair(t) for t in range(idx.count)]
        assert len(set(pairs)) == 24
        for t, (m, n) in enumerate(pairs):
            assert idx.to_flat(m, n) == t

    def test_out_of_range(self):
        idx = LinkIndex(2, 2)
        with pytest.raises(ShapeError):
            idx.to_pair(4)
        with pytest.raises(ShapeError):
            idx.to_flat(2, 0)
