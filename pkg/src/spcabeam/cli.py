"""Command-line interface.

Subcommands:
    run <config.json>      execute one experiment config
    sweep <config.json>    execute a config that declares a sweep axis
    solve <program.txt>    solve a cone program in the text dump format
    oracle wf|grid ...     independent oracles, with optimizer cross-check
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__, ipm, rng as rng_mod
from .driver import RunOptions, run as run_spca
from .errors import ConfigurationError
from .harness import load_config, run_experiment
from .ipm import SolverSettings, residuals
from .network import NetworkConfig, drop_network, generate_channels
from .oracles import grid_search_wsr, water_filling


def _add_run_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="override the config base seed")
    p.add_argument("--trials", type=int, help="override the trial count")
    p.add_argument("--out", default=None, help="artifact directory")
    p.add_argument("--method", choices=["gm", "tree"],
                   help="objective handling of the rate product")
    p.add_argument("--epsilon", type=float,
                   help="floor on the auxiliary SINR variables")
    p.add_argument("--workers", type=int, default=1,
                   help="trial worker processes")


def _apply_overrides(config, args):
    if args.seed is not None:
        config.base_seed = args.seed
        config.raw.setdefault("overrides", {})["base_seed"] = args.seed
    if args.trials is not None:
        config.trials = args.trials
        config.raw.setdefault("overrides", {})["trials"] = args.trials
    if args.method is not None:
        config.options.method = args.method
        config.raw.setdefault("overrides", {})["method"] = args.method
    if args.epsilon is not None:
        config.options.epsilon = args.epsilon
        config.raw.setdefault("overrides", {})["epsilon"] = args.epsilon
    return config


def cmd_run(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    out_dir = args.out or f"runs/{config.name}"
    summary = run_experiment(config, out_dir, workers=args.workers)
    for label, agg in summary["aggregates"].items():
        print(f"{label}: trials={agg.trials} failures={agg.failures} "
              f"mean_wsr={agg.mean_wsr:.6g} std_wsr={agg.std_wsr:.4g} "
              f"mean_iterations={agg.mean_iterations:.3g}")
    print(f"artifacts written to {summary['out_dir']}")
    return 0


def cmd_sweep(args) -> int:
    config = _apply_overrides(load_config(args.config), args)
    if not config.sweep_axis:
        raise ConfigurationError(
            "config declares no sweep axis; add a 'sweep' section or use "
            "the 'run' subcommand")
    return cmd_run(args)


def cmd_solve(args) -> int:
    from .cones import read_program
    prog = read_program(args.program)
    sol = ipm.solve(prog, SolverSettings())
    print(f"status: {sol.status} (iterations {sol.iterations})")
    if sol.status == ipm.OPTIMAL:
        print(f"objective: {sol.primal_objective:.12g} "
              f"(dual {sol.dual_objective:.12g}, gap {sol.gap:.3e})")
    rep = residuals(prog, sol)
    if sol.status in (ipm.OPTIMAL, ipm.MAX_ITERATIONS):
        print(f"independent residuals: primal {rep.primal_residual:.3e} "
              f"dual {rep.dual_residual:.3e} "
              f"complementarity {rep.complementarity:.3e}")
    else:
        print(f"certificate value {rep.certificate_value:.6g}, "
              f"residual {rep.certificate_residual:.3e}")
    if args.print_solution and sol.status == ipm.OPTIMAL:
        np.set_printoptions(precision=9, suppress=False)
        print("x =", sol.x)
    return 0 if sol.status == ipm.OPTIMAL else 1


def _single_cell_config(subcarriers: int, p_max_dbw: float) -> NetworkConfig:
    return NetworkConfig.equal_weights(
        cells=1, users_per_cell=1, subcarriers=subcarriers, antennas=1,
        p_max=10 ** (p_max_dbw / 10.0), inter_bs_distance=500.0,
        annulus_inner=100.0, annulus_outer=300.0)


def cmd_oracle_wf(args) -> int:
    p_max = 10 ** (args.pmax_dbw / 10.0) if args.gains is None else args.pmax
    if args.gains is not None:
        gains = np.array([float(g) for g in args.gains.split(",")])
        res = water_filling(gains, p_max)
        print(f"water level: {res.level:.12g}")
        print(f"allocation:  {np.array2string(res.powers, precision=6)}")
        print(f"rate:        {res.rate:.9g} bits/s/Hz")
        return 0
    cfg = _single_cell_config(args.subcarriers, args.pmax_dbw)
    sc = drop_network(cfg, args.seed)
    ch = generate_channels(sc, args.seed)
    gains = np.abs(ch.h[0, 0, 0, :, 0]) ** 2
    wf = water_filling(gains, float(cfg.p_max[0]))
    opt = run_spca(sc, ch, RunOptions(tol=1e-6, max_iterations=100))
    rel = abs(opt.wsr - wf.rate) / wf.rate
    print(f"water-filling rate: {wf.rate:.9g} bits/s/Hz")
    print(f"optimizer rate:     {opt.wsr:.9g} bits/s/Hz "
          f"({opt.termination}, {opt.iterations} iterations)")
    print(f"relative difference: {rel:.3e}")
    return 0


def cmd_oracle_grid(args) -> int:
    cfg = NetworkConfig.equal_weights(
        cells=2, users_per_cell=1, subcarriers=1, antennas=1,
        p_max=10 ** (args.pmax_dbw / 10.0), inter_bs_distance=args.spacing,
        annulus_inner=100.0, annulus_outer=300.0)
    sc = drop_network(cfg, args.seed)
    ch = generate_channels(sc, args.seed)
    grid = grid_search_wsr(ch, sc.assignment, cfg, resolution=args.resolution)
    opt = run_spca(sc, ch, RunOptions(tol=1e-6, max_iterations=100))
    print(f"grid-best WSR: {grid.wsr:.9g} at powers "
          f"{np.array2string(grid.powers, precision=4)}")
    print(f"optimizer WSR: {opt.wsr:.9g} "
          f"({opt.termination}, {opt.iterations} iterations)")
    print(f"relative gap to grid: {(grid.wsr - opt.wsr) / grid.wsr:.3e}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spcabeam",
        description="Coordinated multicell beamforming optimizer and "
                    "experiment harness")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    _add_run_overrides(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a config with a sweep axis")
    p_sweep.add_argument("config")
    _add_run_overrides(p_sweep)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_solve = sub.add_parser("solve", help="solve a cone-program text dump")
    p_solve.add_argument("program")
    p_solve.add_argument("--print-solution", action="store_true")
    p_solve.set_defaults(fn=cmd_solve)

    p_oracle = sub.add_parser("oracle", help="independent verification oracles")
    osub = p_oracle.add_subparsers(dest="oracle", required=True)

    p_wf = osub.add_parser("wf", help="water-filling on parallel channels")
    p_wf.add_argument("--gains", help="comma-separated power gains")
    p_wf.add_argument("--pmax", type=float, default=1.0,
                      help="power budget (linear) when --gains is given")
    p_wf.add_argument("--seed", type=int, default=0)
    p_wf.add_argument("--subcarriers", type=int, default=8)
    p_wf.add_argument("--pmax-dbw", type=float, default=20.0)
    p_wf.set_defaults(fn=cmd_oracle_wf)

    p_grid = osub.add_parser("grid", help="exhaustive grid on a tiny instance")
    p_grid.add_argument("--seed", type=int, default=0)
    p_grid.add_argument("--pmax-dbw", type=float, default=20.0)
    p_grid.add_argument("--resolution", type=int, default=201)
    p_grid.add_argument("--spacing", type=float, default=650.0)
    p_grid.set_defaults(fn=cmd_oracle_grid)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
