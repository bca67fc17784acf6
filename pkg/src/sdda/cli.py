"""Command-line entry point.

Exit codes: 0 success, 1 config/input error, 2 numeric or verification
failure, 3 IO error.
"""

import argparse
import dataclasses
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import gradcheck, kernels, report
from .config import dump_config, parse_config
from .datagen import generate_pair, load_csv, write_csv
from .errors import ConfigError, NumericError, ParseError
from .trainer import train

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("sdda")


def read_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def load_data(config, seed_offset=0):
    """Source and target datasets for one run."""
    if config.data is not None:
        spec = dataclasses.replace(config.data, seed=config.data.seed + seed_offset)
        return generate_pair(spec)
    source = load_csv(config.source_csv, has_labels=True, domain="source")
    target = load_csv(config.target_csv, has_labels=config.target_has_labels, domain="target")
    return source, target


def output_dir(config):
    return Path(os.environ.get("SDDA_OUT_DIR") or config.output.directory)


def run_seed(config, seed, out):
    """Train one seed and write its files; returns ``(seed, log, error)``."""
    trainer_cfg = dataclasses.replace(config.trainer, seed=seed)
    source, target = load_data(config, seed_offset=seed)
    try:
        params, tlog = train(trainer_cfg, source, target)
    except NumericError as exc:
        report.write_metrics(out / f"metrics_{seed}.csv", exc.log)
        return seed, exc.log, str(exc)
    report.write_metrics(out / f"metrics_{seed}.csv", tlog)
    if config.output.emit_features:
        report.write_features(out / f"features_{seed}.csv", params, source, target)
    return seed, tlog, None


def run_experiment(config, jobs=1):
    """Train every configured seed and write metrics, summary, and plots."""
    out = output_dir(config)
    try:
        out.mkdir(parents=True, exist_ok=True)
        seeds = config.seeds
        if jobs > 1 and len(seeds) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(run_seed, [config] * len(seeds), seeds, [out] * len(seeds)))
        else:
            results = [run_seed(config, s, out) for s in seeds]
        runs = [(seed, tlog) for seed, tlog, _ in results]
        report.write_summary(out / "summary.json", report.summarize(runs))
        if config.output.emit_svg:
            (out / "convergence.svg").write_text(report.convergence_svg(runs))
    except (ParseError, ConfigError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("IO error: %s", exc)
        return EXIT_IO
    failures = [(seed, err) for seed, _, err in results if err]
    for seed, err in failures:
        log.error("seed %d: numeric failure: %s", seed, err)
    return EXIT_NUMERIC if failures else EXIT_OK


def gradcheck_command(scope="all", trials=20, seed=0, corrupt=None, stream=None):
    stream = stream or sys.stdout
    results = gradcheck.run_checks(scope, trials, seed, corrupt)
    failed = []
    for r in results:
        status = "ok" if r.passed else "FAIL"
        print(f"{r.name:24s} max_rel_err={r.max_rel_error:.3e}  {status}", file=stream)
        if not r.passed:
            failed.append(r)
    for r in failed:
        print(f"failing loss {r.name} at point seed {r.worst_point_seed}", file=stream)
    return EXIT_NUMERIC if failed else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="sdda", description="Self-similarity domain adaptation experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="train every configured seed and write outputs")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, default=1, help="seeds trained concurrently")

    p = sub.add_parser("gradcheck", help="compare analytic gradients with finite differences")
    p.add_argument("--scope", default="all", choices=gradcheck.SCOPES)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrupt", default=None, help=argparse.SUPPRESS)

    p = sub.add_parser("gen-data", help="write <prefix>_source.csv and <prefix>_target.csv")
    p.add_argument("config")
    p.add_argument("prefix")

    p = sub.add_parser("print-config", help="print the config with all defaults filled in")
    p.add_argument("config")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    log.info("kernel backend: %s", kernels.BACKEND)

    if args.command == "gradcheck":
        return gradcheck_command(args.scope, args.trials, args.seed, args.corrupt)

    try:
        config = read_config(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("IO error: %s", exc)
        return EXIT_IO

    if args.command == "print-config":
        sys.stdout.write(dump_config(config))
        return EXIT_OK
    if args.command == "gen-data":
        if config.data is None:
            log.error("gen-data needs generator keys in [data], not csv paths")
            return EXIT_CONFIG
        try:
            source, target = generate_pair(config.data)
            write_csv(f"{args.prefix}_source.csv", source)
            write_csv(f"{args.prefix}_target.csv", target)
        except OSError as exc:
            log.error("IO error: %s", exc)
            return EXIT_IO
        return EXIT_OK
    return run_experiment(config, jobs=args.jobs)


if __name__ == "__main__":
    sys.exit(main())
