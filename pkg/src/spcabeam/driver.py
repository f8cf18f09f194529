"""Outer successive-convex-approximation loop for the beamforming problem.

One run is: channel-matched initialization (feasible by construction),
then repeated convex subproblem solves, each followed by the slope update
theta = sqrt(v)/zeta at the new iterate, until the relative change of the
true weighted sum-rate drops below the tolerance or the iteration cap is
hit.  The reported trajectory always contains the true weighted sum-rate
of the extracted beamformers, recomputed through the rate metrics rather
than the optimizer's internal variables.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import ipm, metrics
from .cones import write_program
from .errors import SubproblemError
from .ipm import SolverSettings
from .metrics import BeamformerSet, LinkIndex
from .network import Assignment, ChannelSet, NetworkConfig, Scenario
from .subproblem import (
    SpcaState,
    WeightVector,
    build_subproblem,
    estimator_value,
    extract_solution,
    scale_weights,
)

RESULT_SCHEMA = "spcabeam-run/1"

CONVERGED = "converged"
MAX_ITERATIONS = "max-iterations"


@dataclass
class RunOptions:
    epsilon: float = 1e-4
    tol: float = 1e-4
    max_iterations: int = 50
    method: str = "tree"
    weight_margin: float = 0.01
    solver: str = "ipm"
    solver_settings: SolverSettings = field(default_factory=SolverSettings)
    dump_dir: str | None = None
    # a slightly inexact inner solve is tolerable for the outer loop
    accept_inexact_residual: float = 1e-5

    def check(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        self.solver_settings.check()


@dataclass
class TrajectoryPoint:
    iteration: int
    wsr: float
    powers: np.ndarray
    solver_status: str
    solver_iterations: int
    max_im_gain: float
    wall_time: float          # diagnostics only, never written to CSV


@dataclass
class RunResult:
    trajectory: list[TrajectoryPoint]
    beams: BeamformerSet
    state: SpcaState
    termination: str
    method: str
    weight_scale: float
    estimator_gaps: np.ndarray | None
    rate_agreement_rel: float
    warnings: list[str]

    @property
    def wsr(self) -> float:
        return self.trajectory[-1].wsr

    @property
    def iterations(self) -> int:
        return self.trajectory[-1].iteration

    def wsr_values(self) -> np.ndarray:
        return np.array([p.wsr for p in self.trajectory])

    def to_json(self) -> str:
        g = self.beams.g
        doc = {
            "schema": RESULT_SCHEMA,
            "termination": self.termination,
            "method": self.method,
            "weight_scale": self.weight_scale,
            "rate_agreement_rel": self.rate_agreement_rel,
            "warnings": self.warnings,
            "wsr": self.wsr,
            "trajectory": [
                {
                    "iteration": p.iteration,
                    "wsr": p.wsr,
                    "powers": p.powers.tolist(),
                    "solver_status": p.solver_status,
                    "solver_iterations": p.solver_iterations,
                    "max_im_gain": p.max_im_gain,
                }
                for p in self.trajectory
            ],
            "wall_times": [p.wall_time for p in self.trajectory],
            "beams": np.stack([g.real, g.imag], axis=-1).tolist(),
        }
        return json.dumps(doc, indent=1)


def initialize(channels: ChannelSet, assignment: Assignment,
               config: NetworkConfig, weights: WeightVector,
               epsilon: float) -> tuple[SpcaState, BeamformerSet]:
    """Channel-matched starting point, feasible for the first subproblem.

    Beams point along the conjugate desired channel with power split evenly
    across subcarriers, which satisfies every per-cell power budget with
    equality and makes every desired gain real positive.  The slack values
    are then read off their constraints at equality; v is clamped up to the
    floor before the slope theta = sqrt(v)/zeta is taken, so floored links
    start with a slope their rate SOC can actually carry.
    """
    M, K, M2, N, Nt = channels.h.shape
    links = LinkIndex(M, N)
    T = links.count
    g = np.zeros((M, N, Nt), dtype=complex)
    gain = np.zeros(T)
    for t in range(T):
        m, n = links.to_pair(t)
        k = int(assignment.user_of[m, n])
        h = channels.h[m, k, m, n]
        norm = np.linalg.norm(h)
        if norm == 0.0:
            continue
        g[m, n] = np.sqrt(config.p_max[m] / N) * h.conj() / norm
        gain[t] = np.sqrt(config.p_max[m] / N) * norm
    beams = BeamformerSet(g=g)
    interference = metrics.interference_powers(channels, beams,
                                               assignment).reshape(T)
    zeta = np.sqrt(1.0 + interference)
    theta = np.ones(T)
    r = np.ones(T)
    v = np.full(T, max(epsilon, 0.0))
    live = gain > 0.0
    snr = (gain[live] / zeta[live]) ** 2
    r[live] = (1.0 + snr) ** weights.delta[live]
    # clamp before taking the slope: a slope below sqrt(eps)/zeta would make
    # the floored rate SOC require far more gain than sqrt(eps)*zeta and can
    # render the first subproblem infeasible, defeating the initializer
    v[live] = np.maximum(snr, epsilon)
    theta[live] = np.sqrt(v[live]) / zeta[live]
    state = SpcaState(theta=theta, r=r, zeta=zeta, v=v, epsilon=epsilon,
                      iteration=0)
    state.check()
    return state, beams


@dataclass
class IterateOutcome:
    state: SpcaState
    beams: BeamformerSet
    wsr: float
    solver_status: str
    solver_iterations: int
    estimator_gaps: np.ndarray
    max_im_gain: float
    warning: str | None = None


def iterate(state: SpcaState, channels: ChannelSet, assignment: Assignment,
            weights: WeightVector, config: NetworkConfig,
            options: RunOptions) -> IterateOutcome:
    """Build and solve one subproblem, then update the slopes."""
    prog, varmap = build_subproblem(channels, assignment, weights, state,
                                    config, method=options.method)
    if options.dump_dir:
        os.makedirs(options.dump_dir, exist_ok=True)
        write_program(prog, os.path.join(
            options.dump_dir, f"subproblem_{state.iteration:03d}.txt"))
    solver = ipm.get_solver(options.solver)
    sol = solver(prog, options.solver_settings)

    warning = None
    if sol.status != ipm.OPTIMAL:
        inexact_ok = (
            sol.status == ipm.MAX_ITERATIONS
            and np.isfinite(sol.primal_residual)
            and max(sol.primal_residual, sol.dual_residual)
            <= options.accept_inexact_residual)
        if inexact_ok:
            warning = (f"iteration {state.iteration}: solver stopped at "
                       f"{sol.status} with residuals "
                       f"{max(sol.primal_residual, sol.dual_residual):.2e}; "
                       "iterate accepted")
        else:
            dump_note = ""
            if options.dump_dir:
                path = os.path.join(options.dump_dir,
                                    f"subproblem_{state.iteration:03d}.txt")
                dump_note = f"; program dumped to {path}"
            hint = ""
            if state.iteration == 0 and sol.status == ipm.PRIMAL_INFEASIBLE:
                hint = (" (first subproblem infeasible; the channel-matched "
                        "initialization should prevent this, check any "
                        "user-supplied state or an aggressive epsilon floor)")
            raise SubproblemError(
                f"solver returned {sol.status} at outer iteration "
                f"{state.iteration}{hint}{dump_note}")

    beams, r, zeta, v = extract_solution(sol.x, varmap, config)
    gaps = estimator_value(zeta, v, state.theta) - np.sqrt(np.maximum(v, 0)) * zeta
    # clamp tiny solver violations so state invariants hold exactly
    r = np.maximum(r, 1.0)
    zeta = np.maximum(zeta, 1.0)
    v = np.maximum(v, state.epsilon)
    new_state = SpcaState(theta=np.sqrt(v) / zeta, r=r, zeta=zeta, v=v,
                          epsilon=state.epsilon, iteration=state.iteration + 1)
    new_state.check()
    wsr = metrics.weighted_sum_rate(channels, beams, assignment,
                                    config.weights)
    im_gain = float(np.max(np.abs(
        metrics.desired_gains(channels, beams, assignment).imag)))
    return IterateOutcome(state=new_state, beams=beams, wsr=wsr,
                          solver_status=sol.status,
                          solver_iterations=sol.iterations,
                          estimator_gaps=gaps, max_im_gain=im_gain,
                          warning=warning)


def run(scenario: Scenario, channels: ChannelSet,
        options: RunOptions | None = None) -> RunResult:
    """Full outer loop on one scenario/channel realization."""
    options = options or RunOptions()
    options.check()
    config = scenario.config
    assignment = scenario.assignment
    weights = scale_weights(config.weights, assignment, options.weight_margin)

    state, beams = initialize(channels, assignment, config, weights,
                              options.epsilon)
    wsr = metrics.weighted_sum_rate(channels, beams, assignment, config.weights)
    im0 = float(np.max(np.abs(
        metrics.desired_gains(channels, beams, assignment).imag)))
    trajectory = [TrajectoryPoint(
        iteration=0, wsr=wsr, powers=metrics.all_bs_powers(beams),
        solver_status="initialization", solver_iterations=0,
        max_im_gain=im0, wall_time=0.0)]
    warnings: list[str] = []
    termination = MAX_ITERATIONS
    gaps = None

    for i in range(1, options.max_iterations + 1):
        t0 = time.perf_counter()
        out = iterate(state, channels, assignment, weights, config, options)
        dt = time.perf_counter() - t0
        state, beams, gaps = out.state, out.beams, out.estimator_gaps
        if out.warning:
            warnings.append(out.warning)
        trajectory.append(TrajectoryPoint(
            iteration=i, wsr=out.wsr, powers=metrics.all_bs_powers(beams),
            solver_status=out.solver_status,
            solver_iterations=out.solver_iterations,
            max_im_gain=out.max_im_gain, wall_time=dt))
        prev, curr = trajectory[-2].wsr, out.wsr
        if abs(curr - prev) <= options.tol * max(abs(prev), 1e-12):
            termination = CONVERGED
            break

    final_wsr = trajectory[-1].wsr
    if state.iteration > 0 and final_wsr > 0:
        internal = float(np.sum(np.log2(state.r)))
        rate_agreement = abs(internal - weights.scale * final_wsr) / (
            weights.scale * final_wsr)
    else:
        rate_agreement = np.nan
    return RunResult(trajectory=trajectory, beams=beams, state=state,
                     termination=termination, method=options.method,
                     weight_scale=weights.scale, estimator_gaps=gaps,
                     rate_agreement_rel=rate_agreement, warnings=warnings)
