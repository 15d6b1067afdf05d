"""Command line entry point: ``gauge-cgm {run,sweep,verify}``."""
import argparse
from pathlib import Path
import sys

from .config import config_from_kv, load_grid, parse_kv
from .harness import experiment_filename, rows_to_csv, run_experiment, sweep, write_sweep


def _overrides(args):
    out = {}
    if args.max_iter is not None:
        out["solver.max_iter"] = str(args.max_iter)
    if args.seed is not None:
        out["problem.seed"] = str(args.seed)
    if args.lam is not None:
        out["lambda"] = repr(args.lam)
    if args.screen is not None:
        out["solver.screen"] = args.screen
    if args.eps0 is not None:
        out["solver.eps0"] = repr(args.eps0)
    return out


def _add_common(p):
    p.add_argument("--config", required=True, help="flat key = value config file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--max-iter", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--screen", choices=("off", "safe", "heuristic"))
    p.add_argument("--eps0", type=float)


def cmd_run(args):
    path = Path(args.config)
    kv = parse_kv(path.read_text())
    kv.update(_overrides(args))
    cfg = config_from_kv(kv, path.parent)
    rows = run_experiment(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    target = out / experiment_filename(cfg)
    target.write_text(rows_to_csv(rows))
    print(target)
    return 0 if rows[-1][-1] == "summary" else 1


def cmd_sweep(args):
    path = Path(args.config)
    kv = parse_kv(path.read_text())
    grid = load_grid(args.grid)
    results = sweep(kv, grid, base_dir=path.parent, jobs=args.jobs,
                    overrides=_overrides(args))
    summary = write_sweep(results, args.out, {**kv, **_overrides(args)})
    print(summary)
    failed = sum(rows[-1][-1] != "summary" for _, rows in results)
    if failed:
        print("%d of %d cells reported an error" % (failed, len(results)), file=sys.stderr)
    return 0


def cmd_verify(args):
    from .verify import run_all
    only = None
    if args.only:
        only = {int(s) for s in args.only.split(",")}
    results = run_all(only=only)
    return 0 if all(r.passed or r.expected_fail for r in results) else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="gauge-cgm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment and write its CSV")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run the cartesian product of a grid file")
    _add_common(p)
    p.add_argument("--grid", required=True, help="key = v1, v2, ... grid file")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the oracle-backed acceptance checks")
    p.add_argument("--only", help="comma-separated criterion numbers")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
