"""Independent verification oracles.

Neither oracle touches the conic solver or the outer loop: water-filling
is the closed-form optimum for parallel interference-free channels, and
the grid search exhaustively scans per-link transmit powers on instances
small enough to brute-force.  Both are used as trust anchors for the
optimizer's results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .metrics import BeamformerSet, weighted_sum_rate
from .network import Assignment, ChannelSet, NetworkConfig

GRID_MAX_POINTS = 10_000_000


@dataclass
class WaterFillingResult:
    powers: np.ndarray
    rate: float
    level: float


def water_filling(gains: np.ndarray, p_total: float,
                  level_tol: float = 1e-10) -> WaterFillingResult:
    """Maximize sum log2(1 + p*g) subject to sum p <= p_total, p >= 0.

    Bisection on the water level mu with p_i = max(0, mu - 1/g_i); the
    bracket is tightened until its width drops below ``level_tol``.
    """
    gains = np.asarray(gains, dtype=float)
    if np.any(gains < 0):
        raise ConfigurationError("channel power gains must be >= 0")
    if p_total <= 0:
        raise ConfigurationError(f"p_total must be > 0, got {p_total}")
    live = gains > 0
    if not live.any():
        return WaterFillingResult(np.zeros_like(gains), 0.0, 0.0)
    inv = 1.0 / gains[live]

    def allocated(mu):
        return np.sum(np.maximum(0.0, mu - inv))

    lo = float(np.min(inv))
    hi = lo + p_total
    while allocated(hi) < p_total:
        hi += p_total
    while hi - lo > level_tol:
        mid = 0.5 * (lo + hi)
        if allocated(mid) < p_total:
            lo = mid
        else:
            hi = mid
    mu = 0.5 * (lo + hi)
    powers = np.zeros_like(gains)
    powers[live] = np.maximum(0.0, mu - inv)
    rate = float(np.sum(np.log2(1.0 + powers * gains)))
    return WaterFillingResult(powers=powers, rate=rate, level=mu)


@dataclass
class GridSearchResult:
    wsr: float
    powers: np.ndarray
    resolution: int


def grid_search_wsr(channels: ChannelSet, assignment: Assignment,
                    config: NetworkConfig, resolution: int = 201
                    ) -> GridSearchResult:
    """Exhaustive per-link power grid for tiny single-antenna instances.

    Requires one subcarrier, one user per cell and one antenna, so each
    cell contributes a single scalar power in [0, P_max]; beam phases are
    irrelevant to all SINRs.  Rates come from the shared rate metrics.
    """
    M, K, M2, N, Nt = channels.h.shape
    if (K, N, Nt) != (1, 1, 1):
        raise ConfigurationError(
            "grid oracle needs users_per_cell=1, subcarriers=1, antennas=1; "
            f"got K={K}, N={N}, Nt={Nt}")
    if resolution < 200:
        raise ConfigurationError(
            f"resolution must be >= 200 points per axis, got {resolution}")
    if resolution ** M > GRID_MAX_POINTS:
        raise ConfigurationError(
            f"grid of {resolution}^{M} points exceeds the "
            f"{GRID_MAX_POINTS:.0e} point bound; instance too large")

    axes = [np.linspace(0.0, config.p_max[m], resolution) for m in range(M)]
    # direct and cross power gains: gain[i, j] = |h from BS j to user i|^2
    gain = np.empty((M, M))
    for i in range(M):
        for j in range(M):
            gain[i, j] = float(np.abs(channels.h[i, 0, j, 0, 0]) ** 2)
    w = config.weights[:, 0]

    best_wsr = -np.inf
    best_powers = None
    mesh = np.meshgrid(*axes, indexing="ij")
    p = np.stack([g.ravel() for g in mesh], axis=0)      # (M, points)
    wsr = np.zeros(p.shape[1])
    for i in range(M):
        interference = np.zeros(p.shape[1])
        for j in range(M):
            if j != i:
                interference += p[j] * gain[i, j]
        wsr += w[i] * np.log2(1.0 + p[i] * gain[i, i] / (1.0 + interference))
    k = int(np.argmax(wsr))
    best_wsr = float(wsr[k])
    best_powers = p[:, k].copy()
    return GridSearchResult(wsr=best_wsr, powers=best_powers,
                            resolution=resolution)


def beams_from_powers(powers: np.ndarray, channels: ChannelSet,
                      assignment: Assignment, config: NetworkConfig
                      ) -> BeamformerSet:
    """Scalar-power beamformers (matched phase) for oracle cross-checks."""
    M = config.cells
    g = np.zeros((M, config.subcarriers, config.antennas), dtype=complex)
    for m in range(M):
        h = channels.h[m, int(assignment.user_of[m, 0]), m, 0, 0]
        phase = h.conj() / abs(h) if h != 0 else 1.0
        g[m, 0, 0] = np.sqrt(powers[m]) * phase
    return BeamformerSet(g=g)
