"""Command line entry point: ``opssa --command verify-ssa --dims 2,2,2 ...``."""

from __future__ import annotations

import argparse
import sys

from .campaign import COMMANDS, SSA_KINDS, CampaignConfig, ConfigError, dumps, run
from .tensor import DEFAULT_TOL, ToleranceConfig


def _dims(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"dims must be a comma list of integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="opssa",
        description="Numerical verification of the operator strong-subadditivity inequality.",
    )
    p.add_argument("--command", required=True, choices=COMMANDS)
    p.add_argument("--dims", type=_dims, default=(2, 2, 2), help="subsystem dimensions, e.g. 2,3,2")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--tol-psd", type=float, default=DEFAULT_TOL.psd_tol)
    p.add_argument("--tol-support", type=float, default=DEFAULT_TOL.support_cutoff_rel)
    p.add_argument("--tol-match", type=float, default=DEFAULT_TOL.match_tol)
    p.add_argument("--tol-convexity", type=float, default=DEFAULT_TOL.convexity_tol)
    p.add_argument("--tol-hermiticity", type=float, default=DEFAULT_TOL.hermiticity_tol)
    p.add_argument("--out", help="write line-delimited JSON records here (default: stdout)")
    p.add_argument("--state-in", help="state file used for every trial")
    p.add_argument("--state-out", help="search-extremal: write the best state here")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--ancilla", type=int, default=1, help="search-extremal purification dimension")
    p.add_argument("--kind", choices=tuple(SSA_KINDS), help="state kind (default: cycle)")
    p.add_argument("--function", help="verify-convexity: xlogx, neglog, square or power(t)")
    p.add_argument("--projectors", type=int, default=10, help="random projectors per rank")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--timing", action="store_true", help="include per-trial elapsed seconds")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tol = ToleranceConfig(
            support_cutoff_rel=args.tol_support,
            psd_tol=args.tol_psd,
            match_tol=args.tol_match,
            convexity_tol=args.tol_convexity,
            hermiticity_tol=args.tol_hermiticity,
        )
        dims = args.dims
        if args.state_in is not None:
            from .states import read_state
            dims = read_state(args.state_in, tol).dims
        config = CampaignConfig(
            command=args.command, dims=dims, trials=args.trials, master_seed=args.seed,
            tolerances=tol, output_path=args.out, kind=args.kind, function=args.function,
            projectors=args.projectors, restarts=args.restarts, steps=args.steps,
            ancilla=args.ancilla, state_in=args.state_in, state_out=args.state_out,
            jobs=args.jobs, timing=args.timing,
        )
    except (ConfigError, ValueError) as exc:
        print(f"opssa: error: {exc}", file=sys.stderr)
        return 2

    try:
        result = run(config, stream=sys.stdout)
    except OSError as exc:
        print(f"opssa: error: {exc}", file=sys.stderr)
        return 2
    summary_stream = sys.stderr if args.out is None else sys.stdout
    print(dumps(result.summary), file=summary_stream)
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
