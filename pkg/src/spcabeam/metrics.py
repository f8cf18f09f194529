"""Rate and power metrics for a beamformer set.

All quantities follow the unit-noise convention: the interference-plus-
noise denominator is 1 + sum of interfering powers, and rates are log2,
i.e. bits/s/Hz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError
from .network import Assignment, ChannelSet, NetworkConfig


@dataclass
class BeamformerSet:
    """One transmit vector per (cell, subcarrier); g[m, n, :] complex."""

    g: np.ndarray

    def check(self, config: NetworkConfig) -> None:
        expect = (config.cells, config.subcarriers, config.antennas)
        if self.g.shape != expect:
            raise ShapeError(f"beamformers have shape {self.g.shape}, "
                             f"expected {expect}")
        if not np.all(np.isfinite(self.g)):
            raise ShapeError("beamformers contain non-finite entries")


class LinkIndex:
    """Bijection between flat link index t and (cell, subcarrier) pairs.

    Links are the scheduled triples (user, cell, subcarrier) with
    user = assignment(cell, subcarrier); T = cells * subcarriers.
    """

    def __init__(self, cells: int, subcarriers: int):
        self.cells = cells
        self.subcarriers = subcarriers
        self.count = cells * subcarriers

    def to_pair(self, t: int) -> tuple[int, int]:
        if not 0 <= t < self.count:
            raise ShapeError(f"link index {t} out of range [0, {self.count})")
        return divmod(t, self.subcarriers)

    def to_flat(self, cell: int, subcarrier: int) -> int:
        if not (0 <= cell < self.cells and 0 <= subcarrier < self.subcarriers):
            raise ShapeError(f"({cell}, {subcarrier}) out of range")
        return cell * self.subcarriers + subcarrier

    def user(self, assignment: Assignment, t: int) -> int:
        m, n = self.to_pair(t)
        return int(assignment.user_of[m, n])


def _check_dims(channels: ChannelSet, beams: BeamformerSet,
                assignment: Assignment) -> tuple[int, int, int]:
    M, K, M2, N, Nt = channels.h.shape
    if M != M2:
        raise ShapeError(f"channel array has inconsistent cell axes {M} != {M2}")
    if beams.g.shape != (M, N, Nt):
        raise ShapeError(f"beamformers have shape {beams.g.shape}, expected "
                         f"({M}, {N}, {Nt})")
    if assignment.user_of.shape != (M, N):
        raise ShapeError(f"assignment has shape {assignment.user_of.shape}, "
                         f"expected ({M}, {N})")
    return M, N, Nt


def desired_gains(channels: ChannelSet, beams: BeamformerSet,
                  assignment: Assignment) -> np.ndarray:
    """Complex h.g of each scheduled link, shaped (cells, subcarriers)."""
    M, N, _ = _check_dims(channels, beams, assignment)
    out = np.empty((M, N), dtype=complex)
    for m in range(M):
        k = assignment.user_of[m]                       # (N,)
        hk = channels.h[m, k, m, np.arange(N)]          # (N, Nt)
        out[m] = np.einsum("nj,nj->n", hk, beams.g[m])
    return out


def interference_powers(channels: ChannelSet, beams: BeamformerSet,
                        assignment: Assignment) -> np.ndarray:
    """Sum of interfering powers per scheduled link, shaped (M, N)."""
    M, N, _ = _check_dims(channels, beams, assignment)
    out = np.zeros((M, N))
    for m in range(M):
        k = assignment.user_of[m]
        for mp in range(M):
            if mp == m:
                continue
            hcross = channels.h[m, k, mp, np.arange(N)]  # (N, Nt)
            cross = np.einsum("nj,nj->n", hcross, beams.g[mp])
            out[m] += np.abs(cross) ** 2
    return out


def sinr(channels: ChannelSet, beams: BeamformerSet, assignment: Assignment,
         t: int) -> float:
    """SINR of link t: |h.g|^2 over (1 + interference power)."""
    M, N, _ = _check_dims(channels, beams, assignment)
    links = LinkIndex(M, N)
    m, n = links.to_pair(t)
    k = int(assignment.user_of[m, n])
    sig = abs(channels.h[m, k, m, n] @ beams.g[m, n]) ** 2
    interf = 0.0
    for mp in range(M):
        if mp == m:
            continue
        interf += abs(channels.h[m, k, mp, n] @ beams.g[mp, n]) ** 2
    return float(sig / (1.0 + interf))


def all_sinr(channels: ChannelSet, beams: BeamformerSet,
             assignment: Assignment) -> np.ndarray:
    """SINR of every scheduled link, shaped (cells, subcarriers)."""
    sig = np.abs(desired_gains(channels, beams, assignment)) ** 2
    return sig / (1.0 + interference_powers(channels, beams, assignment))


def link_rates(channels: ChannelSet, beams: BeamformerSet,
               assignment: Assignment) -> np.ndarray:
    """log2(1 + SINR) per scheduled link, shaped (cells, subcarriers)."""
    return np.log2(1.0 + all_sinr(channels, beams, assignment))


def per_user_rates(channels: ChannelSet, beams: BeamformerSet,
                   assignment: Assignment, users_per_cell: int) -> np.ndarray:
    """Rate per (cell, user): sum of the user's subcarrier rates."""
    rates = link_rates(channels, beams, assignment)
    M, N = rates.shape
    out = np.zeros((M, users_per_cell))
    for m in range(M):
        np.add.at(out[m], assignment.user_of[m], rates[m])
    return out


def weighted_sum_rate(channels: ChannelSet, beams: BeamformerSet,
                      assignment: Assignment, weights: np.ndarray) -> float:
    """Sum over scheduled links of w[user] * log2(1 + SINR)."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0):
        raise ConfigurationError("weights must be nonnegative")
    rates = link_rates(channels, beams, assignment)
    M, N = rates.shape
    if weights.shape[0] != M:
        raise ShapeError(f"weights have {weights.shape[0]} cells, expected {M}")
    total = 0.0
    for m in range(M):
        total += float(weights[m][assignment.user_of[m]] @ rates[m])
    return total


def per_bs_power(beams: BeamformerSet, m: int) -> float:
    """Transmit power of cell m: sum over subcarriers of ||g||^2."""
    if not 0 <= m < beams.g.shape[0]:
        raise ShapeError(f"cell index {m} out of range")
    g = beams.g[m]
    return float(np.sum(g.real ** 2 + g.imag ** 2))


def all_bs_powers(beams: BeamformerSet) -> np.ndarray:
    g = beams.g
    return np.sum(g.real ** 2 + g.imag ** 2, axis=(1, 2))


@dataclass
class FeasibilityReport:
    ok: bool
    powers: np.ndarray
    limits: np.ndarray
    violations: list[str]


def check_feasibility(beams: BeamformerSet, config: NetworkConfig,
                      tol: float) -> FeasibilityReport:
    """Per-BS power within (1 + tol) of the budget; report names violators."""
    if tol < 0:
        raise ConfigurationError(f"tol must be >= 0, got {tol}")
    powers = all_bs_powers(beams)
    violations = []
    for m in range(config.cells):
        if powers[m] > config.p_max[m] * (1.0 + tol):
            violations.append(
                f"BS {m}: power {powers[m]:.9g} exceeds budget "
                f"{config.p_max[m]:.9g} (tol {tol:g})")
    return FeasibilityReport(ok=not violations, powers=powers,
                             limits=config.p_max.copy(), violations=violations)
