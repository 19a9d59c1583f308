"""Command-line harness: simulate benchmark datasets, run inference on them,
and time configuration grids.

Exit codes: 0 success, 2 configuration fault, 3 wiring/rule-resolution fault.
"""

import argparse
import json
import sys

from .bench import benchmark, infer
from .errors import ConfigError, FactorStreamError, WiringError
from .simulate import Dataset, simulate

EXIT_CONFIG = 2
EXIT_WIRING = 3


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("cannot read JSON from %r: %s" % (path, exc))


def _cmd_simulate(args):
    config = _load_json(args.config) if args.config else {}
    config.setdefault("model", args.model)
    if config["model"] != args.model:
        raise ConfigError("--model disagrees with the config file")
    if args.n is not None:
        config["n"] = args.n
    if args.seed is not None:
        config["seed"] = args.seed
    dataset = simulate(config)
    with open(args.out, "w") as fh:
        json.dump(dataset.to_json(), fh)
    print("wrote %s dataset with n=%d to %s" % (dataset.model, dataset.config["n"], args.out))
    return 0


def _cmd_infer(args):
    payload = _load_json(args.data)
    dataset = Dataset.from_json(payload)
    if dataset.model != args.model:
        raise ConfigError(
            "--model %s does not match dataset model %s" % (args.model, dataset.model)
        )
    overrides = _load_json(args.config) if args.config else {}
    if args.iterations is not None:
        overrides["vmp_iterations"] = args.iterations
    trace_fh = None
    trace = None
    if args.trace:
        trace_fh = open(args.trace, "w")

        def trace(record):
            trace_fh.write(json.dumps(record) + "\n")

    try:
        report = infer(dataset, overrides, keep_posteriors=args.posteriors, trace=trace)
    finally:
        if trace_fh is not None:
            trace_fh.close()
    with open(args.out, "w") as fh:
        json.dump(report.to_json(), fh)
    errs = ", ".join("%s=%.4g" % (k, v) for k, v in report.average_errors.items())
    print(
        "%s: n=%d iterations=%d wall=%.1fms %s -> %s"
        % (report.model, report.n, report.iterations, report.wall_time_ms, errs, args.out)
    )
    return 0


def _cmd_benchmark(args):
    grid_spec = _load_json(args.grid)
    if isinstance(grid_spec, dict):
        grid = grid_spec.get("cells")
        if grid is None:
            raise ConfigError("grid file must be a list or contain a 'cells' list")
    else:
        grid = grid_spec
    text = benchmark(grid, args.reps)
    with open(args.out, "w") as fh:
        fh.write(text)
    print("wrote %d-cell benchmark to %s" % (len(grid), args.out))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="factorstream",
        description="Reactive message passing benchmarks: simulate, infer, benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--model", required=True, choices=["lgssm", "hmm", "hgf"])
    p.add_argument("--n", type=int, help="number of observations")
    p.add_argument("--seed", type=int, help="generator seed")
    p.add_argument("--config", help="JSON file with model parameters")
    p.add_argument("--out", required=True, help="dataset JSON output path")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("infer", help="run inference on a dataset file")
    p.add_argument("--model", required=True, choices=["lgssm", "hmm", "hgf"])
    p.add_argument("--data", required=True, help="dataset JSON produced by simulate")
    p.add_argument("--iterations", type=int, help="variational sweeps")
    p.add_argument("--config", help="JSON file with inference overrides")
    p.add_argument("--out", required=True, help="report JSON output path")
    p.add_argument("--trace", help="JSON-lines trace sink path")
    p.add_argument("--posteriors", action="store_true", help="embed posteriors in the report")
    p.set_defaults(fn=_cmd_infer)

    p = sub.add_parser("benchmark", help="time a grid of configurations")
    p.add_argument("--grid", required=True, help="JSON file with a list of configs")
    p.add_argument("--reps", type=int, required=True, help="repetitions per cell")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(fn=_cmd_benchmark)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except WiringError as exc:
        print("wiring error: %s" % exc, file=sys.stderr)
        return EXIT_WIRING
    except FactorStreamError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
