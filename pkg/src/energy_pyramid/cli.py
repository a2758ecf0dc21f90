"""Command-line interface.

Subcommands: ``gen``, ``validate``, ``solve``, ``pyramid``, ``compare``.
Exit status is 0 on success, 1 on usage errors and 2 when an input file
fails validation.
"""
import argparse
import json
import logging
import sys

import numpy as np

from .exceptions import CapacityError, InvalidArgumentError, ParseError
from .harness import METHODS, REPORT_SCHEMA, RunReport, SyntheticSpec, gen_synthetic, run_compare
from .io import dump_pyramid, format_mrf, read_mrf
from .pipeline import PyramidConfig, build_pyramid

EXIT_OK, EXIT_USAGE, EXIT_INVALID = 0, 1, 2

logger = logging.getLogger("energy_pyramid")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


def _grid(text):
    try:
        h, w = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, got {text!r}") from None
    if h < 1 or w < 1:
        raise argparse.ArgumentTypeError("grid dimensions must be positive")
    return h, w


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _coarsening_args(p):
    p.add_argument("--seed", type=int, default=0, help="solver seed")
    p.add_argument("--mode", choices=("vars", "labels"), default="vars")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--restarts", type=int, default=10, help="agreement samples K")
    p.add_argument("--sweeps", type=int, default=10, help="ICM sweeps t per sample")
    p.add_argument("--max-sweeps", type=int, default=1000, help="refinement sweep budget")
    p.add_argument("--out", default=None, help="write a JSON report here")


def build_parser():
    parser = _Parser(prog="energy-pyramid", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic grid energy")
    p.add_argument("--grid", type=_grid, default=(50, 50), help="HxW, default 50x50")
    p.add_argument("--labels", type=int, default=5)
    p.add_argument("--lambda", dest="strength", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-", help="output .mrf path, '-' for stdout")

    p = sub.add_parser("validate", help="check an .mrf file")
    p.add_argument("file")

    p = sub.add_parser("solve", help="minimize the energy in an .mrf file")
    p.add_argument("file")
    p.add_argument("--method", default="ms-icm",
                   choices=("ss-icm", "ms-icm", "ms-icm-agnostic", "exact"))
    _coarsening_args(p)

    p = sub.add_parser("pyramid", help="build and optionally dump an energy pyramid")
    p.add_argument("file")
    p.add_argument("--agreement", choices=("energy", "agnostic"), default="energy")
    p.add_argument("--dump", default=None, help="directory for scale_<s>.mrf / interp_<s>.spm")
    _coarsening_args(p)

    p = sub.add_parser("compare", help="compare methods on a synthetic ensemble")
    p.add_argument("--grid", type=_grid, default=(50, 50))
    p.add_argument("--labels", type=int, default=5)
    p.add_argument("--lambdas", type=_floats, default=[5.0, 10.0, 15.0])
    p.add_argument("--seeds", type=int, default=100, help="instances per lambda")
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--methods", default="ss-icm,ms-icm,ms-icm-agnostic")
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--delta", type=int, default=None)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--sweeps", type=int, default=10)
    p.add_argument("--no-labels", action="store_true", help="omit labelings from the report")
    p.add_argument("--out", default=None)
    return parser


def _params(args):
    return {"beta": args.beta, "delta": args.delta, "n_restarts": args.restarts,
            "n_sweeps": args.sweeps, "max_sweeps": getattr(args, "max_sweeps", 1000)}


def _write_report(payload, path):
    if path is None:
        return
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def cmd_gen(args):
    h, w = args.grid
    e = gen_synthetic(SyntheticSpec(h, w, args.labels, args.strength, args.seed))
    text = format_mrf(e)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_validate(args):
    e = read_mrf(args.file)
    print(f"ok: n={e.n} l={e.l} edges={e.n_edges}")
    return EXIT_OK


def cmd_solve(args):
    e = read_mrf(args.file)
    method = args.method
    if args.mode == "labels":
        if method not in ("ms-icm", "ss-icm", "exact"):
            raise _UsageError(f"method {method} has no label-coarsening variant")
        if method == "ms-icm":
            method = "ms-icm-labels"
    report = run_compare([e], [method], seeds=[args.seed], params=_params(args))
    report.config.update(file=args.file, mode=args.mode)
    run = report.runs[0]
    if run.get("energy") is None:
        print(run.get("error", "failed"), file=sys.stderr)
        _write_report(report.to_dict(), args.out)
        return EXIT_INVALID
    print(f"{args.method} energy {run['energy']:.10g} ({run['time_sec']:.3f}s)")
    if "pyramid_sizes" in run:
        print("pyramid sizes " + " ".join(str(s) for s in run["pyramid_sizes"]))
    _write_report(report.to_dict(), args.out)
    return EXIT_OK


def cmd_pyramid(args):
    e = read_mrf(args.file)
    cfg = PyramidConfig(mode=args.mode, beta=args.beta, delta=args.delta,
                        n_restarts=args.restarts, n_sweeps=args.sweeps,
                        agreement=args.agreement, seed=args.seed)
    pyr = build_pyramid(e, cfg)
    print("sizes " + " ".join(str(s) for s in pyr.sizes))
    print("rates " + " ".join(f"{r:.3f}" for r in pyr.rates))
    for w in pyr.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.dump:
        dump_pyramid(pyr, args.dump)
    _write_report({
        "schema": REPORT_SCHEMA,
        "config": {"file": args.file, "mode": cfg.mode, "beta": cfg.beta, "delta": cfg.delta,
                   "n_restarts": cfg.n_restarts, "n_sweeps": cfg.n_sweeps,
                   "agreement": cfg.agreement, "seed": cfg.seed},
        "pyramid": {"sizes": pyr.sizes, "rates": pyr.rates,
                    "fixed_point": pyr.fixed_point, "warnings": pyr.warnings},
        "runs": [],
    }, args.out)
    return EXIT_OK


def cmd_compare(args):
    methods = [m for m in args.methods.split(",") if m]
    for m in methods:
        if m not in METHODS:
            raise _UsageError(f"unknown method {m!r}; known: {', '.join(sorted(METHODS))}")
    h, w = args.grid
    seeds = list(range(args.first_seed, args.first_seed + args.seeds))
    runs, summary = [], {}
    for lam in args.lambdas:
        instances = [gen_synthetic(SyntheticSpec(h, w, args.labels, lam, s)) for s in seeds]
        rep = run_compare(instances, methods, seeds=seeds, params=_params(args),
                          keep_labels=not args.no_labels)
        for r in rep.runs:
            r["strength"] = lam
        runs.extend(rep.runs)
        summary[str(lam)] = rep.summary()

    cols = methods + (["ms/ss"] if {"ms-icm", "ss-icm"} <= set(methods) else [])
    print("lambda | " + " | ".join(f"{c:>15}" for c in cols))
    for lam in args.lambdas:
        s = summary[str(lam)]
        cells = [f"{s[m]['mean_energy']:15.3f}" if s[m]["mean_energy"] is not None else f"{'-':>15}"
                 for m in methods]
        if "ms/ss" in cols:
            cells.append(f"{s['ms-icm']['mean_ratio_vs_ss_icm']:15.4f}")
        print(f"{lam:6g} | " + " | ".join(cells))
    report = RunReport(runs=runs, config={
        "grid": [h, w], "labels": args.labels, "lambdas": args.lambdas,
        "seeds": seeds, "methods": methods, "params": _params(args)})
    payload = report.to_dict()
    payload["summary"] = summary
    _write_report(payload, args.out)
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "validate": cmd_validate, "solve": cmd_solve,
            "pyramid": cmd_pyramid, "compare": cmd_compare}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError(parser.format_usage().strip())
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (InvalidArgumentError, CapacityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
