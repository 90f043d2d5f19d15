"""Command-line entry point.

Subcommands: run, compare, sweep-delta, verify-potential.  Flags mirror the
RunConfig fields; a JSON config file supplies defaults that flags override.
The output root defaults to $MPGLAB_OUTPUT (then the current directory).
"""

from __future__ import annotations

import argparse
import json
import sys

from .game import verify_potential
from .harness import (
    EnvConfig,
    RunConfig,
    build_env,
    compare,
    config_from_dict,
    load_config,
    run,
    sweep_delta,
)
from .learners import LearnerConfig


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--env", choices=("synthetic", "congestion", "delta_matrix", "random_mpg"))
    p.add_argument("--env-params", default=None, help="JSON dict of environment params")
    p.add_argument("--learner", choices=("npg", "pg_softmax", "projected_q",
                                         "npg_log_barrier", "npg_entropy"))
    p.add_argument("--eta", type=float)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--iterations", "-K", type=int)
    p.add_argument("--seeds", default=None, help="comma-separated, e.g. 0,1,2")
    p.add_argument("--tie-tol", type=float, default=None)
    p.add_argument("--record-every", type=int, default=None)
    p.add_argument("--compute-bound", action="store_true", default=None)
    p.add_argument("--no-gap", action="store_true", help="skip NE-gap computation")
    p.add_argument("--estimator", choices=("exact", "mc"), default=None)
    p.add_argument("--mc-episodes", type=int, default=None)
    p.add_argument("--mc-horizon", type=int, default=None)
    p.add_argument("--reference-nash", default=None)
    p.add_argument("--output", "-o", default=None)


def _config_from_args(args) -> RunConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    if args.env:
        base["env"] = {"kind": args.env, "params": {}}
    if args.env_params:
        base.setdefault("env", {"kind": "synthetic"})
        base["env"]["params"] = json.loads(args.env_params)
    if args.learner or args.eta is not None:
        ln = base.get("learner", {})
        if args.learner:
            ln["kind"] = args.learner
        if args.eta is not None:
            ln["eta"] = args.eta
        if args.lam is not None:
            ln["lam"] = args.lam
        if args.tau is not None:
            ln["tau"] = args.tau
        base["learner"] = ln
    for key, val in (
        ("iterations", args.iterations),
        ("tie_tol", args.tie_tol),
        ("record_every", args.record_every),
        ("estimator", args.estimator),
        ("mc_episodes", args.mc_episodes),
        ("mc_horizon", args.mc_horizon),
        ("reference_nash", args.reference_nash),
        ("output", args.output),
    ):
        if val is not None:
            base[key] = val
    if args.seeds is not None:
        base["seeds"] = [int(s) for s in args.seeds.split(",")]
    if args.compute_bound:
        base["compute_bound"] = True
    if args.no_gap:
        base["compute_gap"] = False
    return config_from_dict(base)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mpglab")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one learner on one environment")
    _add_run_flags(p_run)

    p_cmp = sub.add_parser("compare", help="run several learner configs on a shared environment")
    p_cmp.add_argument("configs", nargs="+", help="JSON RunConfig files")
    p_cmp.add_argument("--output", "-o", default=None)

    p_sweep = sub.add_parser("sweep-delta", help="margin sweep on the 2x2 matrix game")
    p_sweep.add_argument("--deltas", default="0.001,0.01,0.1,1,10")
    p_sweep.add_argument("--eta", type=float, default=1.0)
    p_sweep.add_argument("--iterations", "-K", type=int, default=3000)
    p_sweep.add_argument("--gap-threshold", type=float, default=1e-3)
    p_sweep.add_argument("--output", "-o", default=None)

    p_ver = sub.add_parser("verify-potential", help="check the potential identity for an environment")
    p_ver.add_argument("--env", required=True,
                       choices=("synthetic", "congestion", "delta_matrix", "random_mpg"))
    p_ver.add_argument("--env-params", default="{}")
    p_ver.add_argument("--trials", type=int, default=100)
    p_ver.add_argument("--seed", type=int, default=0)

    args = parser.parse_args(argv)

    if args.command == "run":
        summary = run(_config_from_args(args))
        json.dump(summary, sys.stdout, indent=2, sort_keys=True)
        print()
    elif args.command == "compare":
        cfgs = [load_config(path) for path in args.configs]
        if args.output:
            cfgs = [RunConfig(**{**cfg.__dict__, "output": args.output}) for cfg in cfgs]
        report = compare(cfgs)
        print(json.dumps({"ordering": report["ordering"]}, indent=2))
    elif args.command == "sweep-delta":
        deltas = [float(d) for d in args.deltas.split(",")]
        report = sweep_delta(deltas, args.eta, args.iterations,
                             args.gap_threshold, args.output)
        print(json.dumps(report["deltas"], indent=2, sort_keys=True))
    else:
        game, spec = build_env(
            EnvConfig(args.env, json.loads(args.env_params)), args.seed
        )
        if spec is None:
            print("environment ships no potential", file=sys.stderr)
            return 2
        report = verify_potential(game, spec, trials=args.trials, seed=args.seed)
        print(json.dumps({
            "max_violation": report.max_violation,
            "is_static_check": report.is_static_check,
            "trials": report.trials,
        }, indent=2))
        return 0 if report.max_violation < 1e-8 else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
