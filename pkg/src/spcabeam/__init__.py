"""Coordinated multicell MU-MISO OFDMA beamforming by successive convex
approximation over second-order cone programs, with a built-in conic solver
and a reproducible experiment harness."""

__version__ = "0.1.0"

from .driver import RunOptions, RunResult, run  # noqa: F401
from .ipm import SolverSettings, Solution, residuals, solve  # noqa: F401
from .metrics import (  # noqa: F401
    BeamformerSet,
    check_feasibility,
    per_bs_power,
    sinr,
    weighted_sum_rate,
)
from .network import (  # noqa: F401
    Assignment,
    ChannelSet,
    NetworkConfig,
    Scenario,
    assign_subcarriers,
    drop_network,
    generate_channels,
)
