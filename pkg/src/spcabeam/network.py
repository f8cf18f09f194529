"""Scenario generation: cell geometry, subcarrier assignment, channels.

Base stations sit on a regular polygon with side length equal to the
configured inter-BS distance (a single point for M=1, a segment for M=2,
an equilateral triangle for M=3).  Each cell serves K single-antenna users
dropped uniformly at random in an annulus around its own BS.  Every cell
schedules exactly one user per subcarrier, so there is no intra-cell
interference; cross-cell channels exist for every (user, BS, subcarrier)
triple so any assignment can evaluate its interference terms.

Channel model (frequency-selective, i.i.d. across subcarriers):

    h[user, bs, n] = (200 / distance)^3.5 * shadow * fading_vector

where 10*log10(shadow) is Gaussian with mean 0 and variance 8, and each of
the Nt fading entries is circularly-symmetric complex Gaussian with unit
variance.  The path-loss expression is applied literally to the channel
amplitude as written; it has no reference-distance normalization, so
absolute gains are small for distances beyond 200 m (see README).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import rng as rng_mod
from .errors import AssignmentError, ConfigurationError

SCENARIO_SCHEMA = "spcabeam-scenario/1"
CHANNELS_SCHEMA = "spcabeam-channels/1"

PATHLOSS_REF_M = 200.0
PATHLOSS_EXP = 3.5
SHADOW_VAR_DB = 8.0


@dataclass
class NetworkConfig:
    cells: int
    users_per_cell: int
    subcarriers: int
    antennas: int
    p_max: np.ndarray            # per-BS budget, linear watts
    inter_bs_distance: float     # meters
    annulus_inner: float         # meters
    annulus_outer: float         # meters
    weights: np.ndarray          # (cells, users_per_cell), positive

    def __post_init__(self):
        self.p_max = np.atleast_1d(np.asarray(self.p_max, dtype=float))
        if self.p_max.size == 1:
            self.p_max = np.repeat(self.p_max, self.cells)
        self.weights = np.asarray(self.weights, dtype=float)
        self.check()

    def check(self) -> None:
        if self.cells < 1:
            raise ConfigurationError(f"cells must be >= 1, got {self.cells}")
        if self.users_per_cell < 1:
            raise ConfigurationError(
                f"users_per_cell must be >= 1, got {self.users_per_cell}")
        if self.subcarriers < self.users_per_cell:
            raise ConfigurationError(
                f"subcarriers ({self.subcarriers}) must be >= users_per_cell "
                f"({self.users_per_cell}) so every user gets a subcarrier")
        if self.antennas < 1:
            raise ConfigurationError(f"antennas must be >= 1, got {self.antennas}")
        if self.p_max.shape != (self.cells,):
            raise ConfigurationError(
                f"p_max must be scalar or length {self.cells}, got shape "
                f"{self.p_max.shape}")
        if np.any(self.p_max <= 0):
            raise ConfigurationError("p_max entries must be > 0")
        if self.inter_bs_distance <= 0 and self.cells > 1:
            raise ConfigurationError(
                f"inter_bs_distance must be > 0, got {self.inter_bs_distance}")
        if not 0 < self.annulus_inner <= self.annulus_outer:
            raise ConfigurationError(
                f"annulus_inner ({self.annulus_inner}) must be in "
                f"(0, annulus_outer ({self.annulus_outer})]")
        if self.weights.shape != (self.cells, self.users_per_cell):
            raise ConfigurationError(
                f"weights must have shape ({self.cells}, "
                f"{self.users_per_cell}), got {self.weights.shape}")
        if np.any(self.weights <= 0):
            raise ConfigurationError("weights must be > 0")

    @classmethod
    def equal_weights(cls, cells, users_per_cell, subcarriers, antennas,
                      p_max, inter_bs_distance, annulus_inner, annulus_outer):
        return cls(cells, users_per_cell, subcarriers, antennas, p_max,
                   inter_bs_distance, annulus_inner, annulus_outer,
                   np.ones((cells, users_per_cell)))


@dataclass
class Assignment:
    """Per-cell map subcarrier -> user index; every user gets >= 1."""

    user_of: np.ndarray          # (cells, subcarriers), ints in [0, K)

    def subcarriers_of(self, cell: int, user: int) -> np.ndarray:
        return np.nonzero(self.user_of[cell] == user)[0]

    def check(self, config: NetworkConfig) -> None:
        if self.user_of.shape != (config.cells, config.subcarriers):
            raise AssignmentError(
                f"assignment shape {self.user_of.shape} does not match "
                f"({config.cells}, {config.subcarriers})")
        for m in range(config.cells):
            counts = np.bincount(self.user_of[m],
                                 minlength=config.users_per_cell)
            if np.any(counts == 0):
                raise AssignmentError(
                    f"cell {m}: users {np.nonzero(counts == 0)[0].tolist()} "
                    "received no subcarrier")


@dataclass
class Scenario:
    config: NetworkConfig
    seed: int
    bs_positions: np.ndarray     # (cells, 2) meters
    user_positions: np.ndarray   # (cells, users_per_cell, 2) meters
    distances: np.ndarray        # (cells, users_per_cell, cells) meters
    assignment: Assignment


@dataclass
class ChannelSet:
    """Channels h[cell, user, bs, subcarrier, :] for every triple."""

    h: np.ndarray                # complex, (M, K, M, N, Nt)
    seed: int

    def link(self, cell: int, user: int, bs: int, subcarrier: int) -> np.ndarray:
        return self.h[cell, user, bs, subcarrier]


def bs_layout(cells: int, spacing: float) -> np.ndarray:
    """Regular polygon with side length ``spacing`` (adjacent BS distance)."""
    if cells == 1:
        return np.zeros((1, 2))
    radius = spacing / (2.0 * np.sin(np.pi / cells))
    angles = 2.0 * np.pi * np.arange(cells) / cells
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def drop_network(config: NetworkConfig, seed: int) -> Scenario:
    """Place BSs and users, compute all distances, draw the assignment."""
    config.check()
    gen = rng_mod.stream(seed, rng_mod.DROP)
    M, K = config.cells, config.users_per_cell
    bs = bs_layout(M, config.inter_bs_distance)
    # uniform over the annulus area: r = sqrt(u*(ro^2 - ri^2) + ri^2)
    u = gen.random(size=(M, K))
    radii = np.sqrt(u * (config.annulus_outer ** 2 - config.annulus_inner ** 2)
                    + config.annulus_inner ** 2)
    phi = gen.uniform(0.0, 2.0 * np.pi, size=(M, K))
    offsets = radii[..., None] * np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    users = bs[:, None, :] + offsets
    dist = np.linalg.norm(users[:, :, None, :] - bs[None, None, :, :], axis=-1)
    assignment = assign_subcarriers(config, seed)
    return Scenario(config=config, seed=seed, bs_positions=bs,
                    user_positions=users, distances=dist,
                    assignment=assignment)


def assign_subcarriers(config: NetworkConfig, seed: int) -> Assignment:
    """Random partition of subcarriers; round-robin over a shuffled list
    guarantees every user at least one subcarrier."""
    if config.subcarriers < config.users_per_cell:
        raise AssignmentError(
            f"cannot assign {config.subcarriers} subcarriers to "
            f"{config.users_per_cell} users with everyone served")
    gen = rng_mod.stream(seed, rng_mod.ASSIGN)
    M, K, N = config.cells, config.users_per_cell, config.subcarriers
    user_of = np.empty((M, N), dtype=int)
    for m in range(M):
        order = gen.permutation(N)
        users = gen.permutation(K)
        for slot, n in enumerate(order):
            user_of[m, n] = users[slot % K]
    a = Assignment(user_of=user_of)
    a.check(config)
    return a


def path_loss_amplitude(distance) -> np.ndarray:
    """Amplitude scaling (200/l)^3.5; equals 1 at the 200 m reference."""
    return (PATHLOSS_REF_M / np.asarray(distance, dtype=float)) ** PATHLOSS_EXP


def draw_shadowing(gen: np.random.Generator, size) -> np.ndarray:
    """Log-normal shadowing: 10*log10(value) ~ Gaussian(0, variance 8)."""
    return 10.0 ** (gen.normal(0.0, np.sqrt(SHADOW_VAR_DB), size=size) / 10.0)


def draw_fading(gen: np.random.Generator, size) -> np.ndarray:
    """Circularly-symmetric complex Gaussian entries with unit variance."""
    return (gen.normal(size=size) + 1j * gen.normal(size=size)) / np.sqrt(2.0)


def generate_channels(scenario: Scenario, seed: int) -> ChannelSet:
    """Draw shadowing and fading for every (user, BS, subcarrier) triple."""
    cfg = scenario.config
    gen = rng_mod.stream(seed, rng_mod.CHANNEL)
    M, K, N, Nt = cfg.cells, cfg.users_per_cell, cfg.subcarriers, cfg.antennas
    pathloss = path_loss_amplitude(scenario.distances)       # (M, K, M)
    shadow = draw_shadowing(gen, (M, K, M, N))
    fading = draw_fading(gen, (M, K, M, N, Nt))
    h = pathloss[..., None, None] * shadow[..., None] * fading
    return ChannelSet(h=h, seed=seed)


# -- JSON serialization --------------------------------------------------------


def _complex_to_pairs(arr: np.ndarray):
    stacked = np.stack([arr.real, arr.imag], axis=-1)
    return stacked.tolist()


def _pairs_to_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def scenario_to_json(scenario: Scenario) -> str:
    cfg = scenario.config
    doc = {
        "schema": SCENARIO_SCHEMA,
        "seed": scenario.seed,
        "config": {
            "cells": cfg.cells,
            "users_per_cell": cfg.users_per_cell,
            "subcarriers": cfg.subcarriers,
            "antennas": cfg.antennas,
            "p_max": cfg.p_max.tolist(),
            "inter_bs_distance": cfg.inter_bs_distance,
            "annulus_inner": cfg.annulus_inner,
            "annulus_outer": cfg.annulus_outer,
            "weights": cfg.weights.tolist(),
        },
        "bs_positions": scenario.bs_positions.tolist(),
        "user_positions": scenario.user_positions.tolist(),
        "distances": scenario.distances.tolist(),
        "assignment": scenario.assignment.user_of.tolist(),
    }
    return json.dumps(doc, indent=1)


def scenario_from_json(text: str) -> Scenario:
    doc = json.loads(text)
    if doc.get("schema") != SCENARIO_SCHEMA:
        raise ConfigurationError(
            f"unexpected scenario schema {doc.get('schema')!r}")
    c = doc["config"]
    cfg = NetworkConfig(
        cells=c["cells"], users_per_cell=c["users_per_cell"],
        subcarriers=c["subcarriers"], antennas=c["antennas"],
        p_max=np.asarray(c["p_max"]),
        inter_bs_distance=c["inter_bs_distance"],
        annulus_inner=c["annulus_inner"], annulus_outer=c["annulus_outer"],
        weights=np.asarray(c["weights"]))
    return Scenario(
        config=cfg, seed=doc["seed"],
        bs_positions=np.asarray(doc["bs_positions"], dtype=float),
        user_positions=np.asarray(doc["user_positions"], dtype=float),
        distances=np.asarray(doc["distances"], dtype=float),
        assignment=Assignment(user_of=np.asarray(doc["assignment"], dtype=int)))


def channels_to_json(channels: ChannelSet) -> str:
    doc = {
        "schema": CHANNELS_SCHEMA,
        "seed": channels.seed,
        "shape": list(channels.h.shape),
        "h": _complex_to_pairs(channels.h),
    }
    return json.dumps(doc, indent=1)


def channels_from_json(text: str) -> ChannelSet:
    doc = json.loads(text)
    if doc.get("schema") != CHANNELS_SCHEMA:
        raise ConfigurationError(
            f"unexpected channels schema {doc.get('schema')!r}")
    h = _pairs_to_complex(doc["h"]).reshape(doc["shape"])
    return ChannelSet(h=h, seed=doc["seed"])
