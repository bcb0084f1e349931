"""Command-line entry points: relax, run, check."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .experiment import ExperimentConfig, build_grid, build_model, bound_state_count
from .experiment import ground_state, load_config, run_experiment


def _base_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    if args.tau is not None:
        config.tau = args.tau
    if args.t_final is not None:
        config.t_final = args.t_final
    if args.gamma_off:
        config.gamma_off = True
    if args.out is not None:
        config.out_dir = args.out
    config.validate()
    return config


def _cmd_relax(args) -> int:
    config = _base_config(args)
    grid = build_grid(config)
    model = build_model(config, grid)
    result = ground_state(config, model)
    summary = {
        "relaxed_energy": result.energy,
        "relax_steps": result.steps,
        "bound_state_count": bound_state_count(grid, model),
    }
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "relax.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(f"relaxed energy: {result.energy:.10f} ({result.steps} steps)")
    return 0


def _cmd_run(args) -> int:
    config = _base_config(args)
    meta = run_experiment(config)
    final = meta["final"]
    print(f"run complete: t={final['t']:g}, trace={final['trace']:.12f}")
    probs = ", ".join(f"p{n}={p:.6g}" for n, p in enumerate(final["block_probs"]))
    print(f"  {probs}")
    print(f"  outputs in {config.out_dir}/")
    return 0


def _cmd_check(args) -> int:
    from .selfcheck import run_checks

    results = run_checks(seed_basis=args.seed_basis)
    failed = 0
    for name, ok, detail in results:
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail}")
        failed += not ok
    return 1 if failed else 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="openmctdh",
        description="Density-operator MCTDH propagation with absorbing boundaries",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a key = value configuration file")
    common.add_argument("--tau", type=float, help="propagation time step")
    common.add_argument("--t-final", type=float, dest="t_final", help="propagation horizon")
    common.add_argument(
        "--gamma-off", action="store_true", dest="gamma_off", help="disable the absorber"
    )
    common.add_argument("--out", help="output directory")

    p_relax = sub.add_parser("relax", parents=[common], help="ground state only")
    p_relax.set_defaults(func=_cmd_relax)
    p_run = sub.add_parser("run", parents=[common], help="full scattering experiment")
    p_run.set_defaults(func=_cmd_run)
    p_check = sub.add_parser("check", parents=[common], help="invariant suite on tiny instances")
    p_check.add_argument(
        "--seed-basis",
        type=int,
        default=3,
        dest="seed_basis",
        help="mode count for the randomized oracle comparisons",
    )
    p_check.set_defaults(func=_cmd_check)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
