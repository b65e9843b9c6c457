"""``simulate`` command line entry point.

Exit codes: 0 success, 1 invalid configuration, 2 runtime or I/O failure,
3 every run was flagged infeasible.
"""

import argparse
import json
import logging
import sys

from .errors import ConfigurationError
from .harness import ORACLES, SCHEMES, SWEEP_AXES, ExperimentConfig, emit_results, run_experiment

log = logging.getLogger("mmnoma")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_INFEASIBLE = 0, 1, 2, 3


def build_parser():
    p = argparse.ArgumentParser(prog="simulate",
                                description="Monte Carlo mmWave-NOMA sum-rate experiments.")
    p.add_argument("--config", help="experiment JSON (a metadata.json from an earlier run "
                                    "also works)")
    p.add_argument("--runs", type=int, help="number of independent realizations")
    p.add_argument("--seed", type=int, help="base seed (0 <= seed < 2**64)")
    p.add_argument("--scheme", choices=SCHEMES)
    p.add_argument("--sweep", nargs=2, metavar=("AXIS", "VALUES"),
                   help=f"axis in {{{','.join(SWEEP_AXES[1:])}}} and comma-separated values")
    p.add_argument("--oracle", choices=[o for o in ORACLES if o])
    p.add_argument("--out", help="output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args):
    data = {}
    if args.config:
        with open(args.config) as fh:
            data = json.load(fh)
        if "config" in data and "summary" in data:
            data = data["config"]
    cfg = ExperimentConfig.from_dict(data)
    for name, attr in (("runs", "runs"), ("seed", "base_seed"), ("scheme", "scheme"),
                       ("oracle", "oracle"), ("out", "out"), ("workers", "workers")):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, attr, value)
    if args.sweep:
        axis, raw = args.sweep
        try:
            values = [float(v) for v in raw.split(",") if v.strip()]
        except ValueError:
            raise ConfigurationError(f"sweep_values: cannot parse {raw!r}") from None
        if axis in ("M_AP", "B"):
            values = [int(v) if v.is_integer() else v for v in values]
        cfg.sweep_axis, cfg.sweep_values = axis, values
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args).resolved().validate()
    except ConfigurationError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = run_experiment(cfg)
        paths = emit_results(result, cfg.out)
    except Exception as exc:  # reported as a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for s in result.summary():
        log.info("%s sweep=%s mean=%.4f stderr=%.4f infeasible=%.2f", s["scheme"],
                 s["sweep_value"], s["mean"], s["stderr"], s["infeasible_fraction"])
    print("\n".join(paths))
    return EXIT_INFEASIBLE if result.all_infeasible else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
