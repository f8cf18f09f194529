"""Per-iteration convex subproblem for the beamforming outer loop.

Each outer iteration maximizes the product of per-link rate variables
r(t) over real-embedded beamformers subject to:

  power        per cell, || stacked beamformer reals ||_2 <= sqrt(P_max)
  rate SOC     the convex upper estimate of sqrt(v)*zeta <= Re(h.g) at the
               current slope theta:  v/(2 theta) + (theta/2) zeta^2 <= Re(h.g),
               written as the hyperbolic SOC with w = zeta*sqrt(theta/2),
               x = Re(h.g) - v/(2 theta), y = 1
  phase        Im(h.g) = 0 for every scheduled link (free phase choice)
  linearized   v >= gradient overestimate of r^q - 1 around the previous r
  interference || [1; cross-link gains] ||_2 <= zeta
  floors       r >= 0, v >= epsilon, tree root >= 0

The objective is the root of a geometric-mean tree over the r(t), which is
a monotone transform of the product; the "gm" and "tree" method labels
share this identical program and differ only in how the objective value is
reported.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cones import ConicProgram, ProgramBuilder, VariableMap, gm_tree
from .errors import ConfigurationError, ShapeError, StateError
from .metrics import BeamformerSet, LinkIndex
from .network import Assignment, ChannelSet, NetworkConfig

METHODS = ("gm", "tree")


@dataclass
class WeightVector:
    """Per-link exponents delta(t) > 1 and the common scale factor."""

    delta: np.ndarray
    scale: float

    @property
    def q(self) -> np.ndarray:
        return 1.0 / self.delta

    def check(self) -> None:
        if np.any(self.delta <= 1.0):
            raise ConfigurationError(
                "scaled weights must all exceed 1 (rate variables need "
                "concave fractional powers)")


def scale_weights(weights: np.ndarray, assignment: Assignment,
                  margin: float = 0.01) -> WeightVector:
    """Flatten per-user weights to links and scale so min delta = 1+margin.

    The maximizer is invariant to the common factor; the factor is recorded
    so objective values can be mapped back to the configured weights.
    """
    weights = np.asarray(weights, dtype=float)
    if np.any(weights <= 0):
        raise ConfigurationError("weights must be > 0")
    if margin <= 0:
        raise ConfigurationError(f"margin must be > 0, got {margin}")
    M, N = assignment.user_of.shape
    per_link = np.empty(M * N)
    for m in range(M):
        per_link[m * N:(m + 1) * N] = weights[m][assignment.user_of[m]]
    s = (1.0 + margin) / per_link.min()
    wv = WeightVector(delta=per_link * s, scale=s)
    wv.check()
    return wv


@dataclass
class SpcaState:
    """Per-link iterate values of the outer loop."""

    theta: np.ndarray      # approximation slope, > 0
    r: np.ndarray          # rate-product variable at the current iterate, >= 1
    zeta: np.ndarray       # interference-plus-noise amplitude, >= 1
    v: np.ndarray          # auxiliary SINR-like value, >= epsilon
    epsilon: float
    iteration: int = 0

    def check(self) -> None:
        T = self.theta.shape[0]
        for name in ("r", "zeta", "v"):
            if getattr(self, name).shape != (T,):
                raise StateError(f"{name} has wrong shape")
        if self.epsilon < 0:
            raise StateError(f"epsilon must be >= 0, got {self.epsilon}")
        if np.any(self.theta <= 0):
            bad = np.nonzero(self.theta <= 0)[0]
            raise StateError(f"nonpositive slope theta at links {bad.tolist()}")
        if np.any(self.zeta <= 0):
            raise StateError("zeta must be strictly positive")
        if np.any(self.r < 1.0 - 1e-12):
            raise StateError("rate variables must be >= 1")
        if np.any(self.v < self.epsilon - 1e-12):
            raise StateError("v must respect the epsilon floor")


def estimator_value(zeta, v, theta) -> np.ndarray:
    """Convex upper estimate (v/theta + theta*zeta^2)/2 of sqrt(v)*zeta."""
    zeta = np.asarray(zeta, dtype=float)
    v = np.asarray(v, dtype=float)
    theta = np.asarray(theta, dtype=float)
    return 0.5 * (v / theta + theta * zeta ** 2)


def _desired_channel(channels: ChannelSet, assignment: Assignment,
                     m: int, n: int) -> np.ndarray:
    k = int(assignment.user_of[m, n])
    return channels.h[m, k, m, n]


def build_subproblem(channels: ChannelSet, assignment: Assignment,
                     weights: WeightVector, state: SpcaState,
                     config: NetworkConfig, method: str = "tree"
                     ) -> tuple[ConicProgram, VariableMap]:
    """Assemble the convex SOCP for the current state.

    Returns the standard-form program and the variable map used by
    :func:`extract_solution`.
    """
    if method not in METHODS:
        raise ConfigurationError(f"method must be one of {METHODS}, got {method!r}")
    state.check()
    weights.check()
    M, K, M2, N, Nt = channels.h.shape
    if (M, N) != assignment.user_of.shape or M != M2:
        raise ShapeError("channels and assignment dimensions disagree")
    if (M, K, N, Nt) != (config.cells, config.users_per_cell,
                         config.subcarriers, config.antennas):
        raise ShapeError("channels do not match the network config")
    links = LinkIndex(M, N)
    T = links.count
    if state.theta.shape[0] != T:
        raise ShapeError(f"state covers {state.theta.shape[0]} links, "
                         f"expected {T}")

    bld = ProgramBuilder()
    g_re = np.empty((M, N), dtype=object)
    g_im = np.empty((M, N), dtype=object)
    for m in range(M):
        for n in range(N):
            g_re[m, n] = bld.add_block(("g_re", m, n), Nt)
            g_im[m, n] = bld.add_block(("g_im", m, n), Nt)
    r_idx = bld.add_block(("r",), T)
    zeta_idx = bld.add_block(("zeta",), T)
    v_idx = bld.add_block(("v",), T)

    degenerate = np.zeros(T, dtype=bool)
    for t in range(T):
        m, n = links.to_pair(t)
        h = _desired_channel(channels, assignment, m, n)
        if not np.any(h):
            degenerate[t] = True

    # phase alignment: Im(h.g) = 0 on every non-degenerate scheduled link
    for t in range(T):
        if degenerate[t]:
            bld.add_zero([r_idx[t]], [1.0], -1.0)   # pin dead link's r to 1
            continue
        m, n = links.to_pair(t)
        h = _desired_channel(channels, assignment, m, n)
        idx = list(g_re[m, n]) + list(g_im[m, n])
        val = np.concatenate([h.imag, h.real])
        bld.add_zero(idx, val, 0.0)

    # linearized rate-power constraint around the previous r
    q = weights.q
    for t in range(T):
        slope = q[t] * state.r[t] ** (q[t] - 1.0)
        const = state.r[t] ** q[t] - 1.0 - slope * state.r[t]
        bld.add_nonneg([v_idx[t], r_idx[t]], [1.0, -slope], -const)

    # floors
    for t in range(T):
        bld.add_nonneg([r_idx[t]], [1.0], 0.0)
        bld.add_nonneg([v_idx[t]], [1.0], -state.epsilon)

    # per-cell power cone
    for m in range(M):
        rows = [([], [], float(np.sqrt(config.p_max[m])))]
        for n in range(N):
            for j in list(g_re[m, n]) + list(g_im[m, n]):
                rows.append(([j], [1.0], 0.0))
        bld.add_soc(rows)

    # rate SOC per link, instantiated at the current slope
    for t in range(T):
        if degenerate[t]:
            continue
        m, n = links.to_pair(t)
        h = _desired_channel(channels, assignment, m, n)
        theta = state.theta[t]
        idx = list(g_re[m, n]) + list(g_im[m, n]) + [v_idx[t]]
        val = np.concatenate([h.real, -h.imag, [-0.5 / theta]])
        head = (idx, val, 1.0)
        w_entry = ([zeta_idx[t]], [2.0 * np.sqrt(theta / 2.0)], 0.0)
        tail = (idx, val, -1.0)
        bld.add_soc([head, w_entry, tail])

    # interference norm per link
    for t in range(T):
        if degenerate[t]:
            continue
        m, n = links.to_pair(t)
        k = int(assignment.user_of[m, n])
        rows = [([zeta_idx[t]], [1.0], 0.0), ([], [], 1.0)]
        for mp in range(M):
            if mp == m:
                continue
            hx = channels.h[m, k, mp, n]
            idx = list(g_re[mp, n]) + list(g_im[mp, n])
            rows.append((idx, np.concatenate([hx.real, -hx.imag]), 0.0))
            rows.append((idx, np.concatenate([hx.imag, hx.real]), 0.0))
        bld.add_soc(rows)

    # objective: root of the geometric-mean tree over the rate variables
    root = gm_tree(bld, list(r_idx))
    if T > 1:
        bld.add_nonneg([root], [1.0], 0.0)
    bld.maximize([root], [1.0])

    prog = bld.build()
    return prog, bld.varmap


def extract_solution(x: np.ndarray, varmap: VariableMap,
                     config: NetworkConfig
                     ) -> tuple[BeamformerSet, np.ndarray, np.ndarray, np.ndarray]:
    """Rebuild complex beamformers and per-link (r, zeta, v) from a solve."""
    M, N, Nt = config.cells, config.subcarriers, config.antennas
    g = np.empty((M, N, Nt), dtype=complex)
    for m in range(M):
        for n in range(N):
            re = varmap[("g_re", m, n)]
            im = varmap[("g_im", m, n)]
            g[m, n] = x[re.start:re.stop] + 1j * x[im.start:im.stop]
    r = x[varmap[("r",)].start:varmap[("r",)].stop].copy()
    zeta = x[varmap[("zeta",)].start:varmap[("zeta",)].stop].copy()
    v = x[varmap[("v",)].start:varmap[("v",)].stop].copy()
    return BeamformerSet(g=g), r, zeta, v


def embed_beamformers(beams: BeamformerSet, varmap: VariableMap,
                      config: NetworkConfig, x: np.ndarray) -> None:
    """Write a beamformer set into a solution vector (testing aid)."""
    for m in range(config.cells):
        for n in range(config.subcarriers):
            re = varmap[("g_re", m, n)]
            im = varmap[("g_im", m, n)]
            x[re.start:re.stop] = beams.g[m, n].real
            x[im.start:im.stop] = beams.g[m, n].imag
