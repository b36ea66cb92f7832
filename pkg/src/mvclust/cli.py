"""Command-line interface.

Subcommands: ``run`` (cluster a dataset described by a manifest), ``synth``
(generate synthetic data and cluster it), ``bench`` (grid of runs, one
table row each) and ``prox-check`` (numerical self-test).  Every pipeline
flag can also live in a TOML config file whose keys equal the long flag
names; explicit flags win over the file.

Exit codes: 0 success, 1 runtime failure, 2 usage or input errors.
"""

import argparse
import dataclasses
import sys
import time
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import selfcheck
from .data import ManifestError, generate_synthetic, load_dataset, save_dataset
from .pipeline import PipelineConfig, run_pipeline
from .report import METRIC_COLUMNS, format_table, write_bench_table, write_outputs

USAGE_EXIT = 2
RUNTIME_EXIT = 1

# flag name -> (argparse dest, PipelineConfig field, type)
CONFIG_FLAGS = {
    "k": ("k", "k", int),
    "clusters": ("clusters", "clusters", int),
    "gamma": ("gamma", "gamma", float),
    "lambda": ("lambda_", "lam", float),
    "rho": ("rho", "rho", float),
    "eps": ("eps", "eps", float),
    "max-iter": ("max_iter", "max_iter", int),
    "restarts": ("restarts", "kmeans_restarts", int),
    "norm": ("norm", "norm_mode", str),
    "seed": ("seed", "seed", int),
    "consensus-k": ("consensus_k", "consensus_k", int),
    "affinity-normalization": ("affinity_normalization", "affinity_mode", str),
    "kmeans-on": ("kmeans_on", "kmeans_on", str),
}


def _add_config_flags(parser):
    parser.add_argument("--config", metavar="FILE", help="TOML config file")
    parser.add_argument("--k", type=int)
    parser.add_argument("--clusters", type=int)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--lambda", dest="lambda_", type=float)
    parser.add_argument("--rho", type=float)
    parser.add_argument("--eps", type=float)
    parser.add_argument("--max-iter", type=int)
    parser.add_argument("--restarts", type=int)
    parser.add_argument("--norm", choices=["t-gamma", "weighted-tnn", "tnn"])
    parser.add_argument("--seed", type=int)
    parser.add_argument("--consensus-k", type=int)
    parser.add_argument("--affinity-normalization", choices=["symmetric", "literal"])
    parser.add_argument("--kmeans-on", choices=["rotation", "stacked"])
    parser.add_argument("--out", metavar="DIR", default="mvclust-out")


def _load_config_file(path):
    path = Path(path)
    if not path.is_file():
        raise ManifestError("config file not found: %s" % path)
    try:
        with open(path, "rb") as fh:
            values = tomllib.load(fh)
    except tomllib.TOMLDecodeError as err:
        raise ManifestError("%s: %s" % (path, err)) from None
    unknown = set(values) - set(CONFIG_FLAGS)
    if unknown:
        raise ManifestError(
            "%s: unknown config keys %s" % (path, sorted(unknown))
        )
    return values


def _build_config(args, default_clusters=None):
    """Defaults < config file < explicit flags."""
    merged = {}
    if args.config:
        for key, raw in _load_config_file(args.config).items():
            _, field, typ = CONFIG_FLAGS[key]
            merged[field] = typ(raw)
    for dest, field, _ in CONFIG_FLAGS.values():
        value = getattr(args, dest, None)
        if value is not None:
            merged[field] = value
    if "clusters" not in merged:
        if default_clusters is None:
            raise ManifestError("missing required option --clusters (or config key)")
        merged["clusters"] = default_clusters
    try:
        return PipelineConfig(**merged)
    except ValueError as err:
        raise ManifestError(str(err)) from None


def _report_run(dataset, cfg, out_dir):
    try:
        cfg.resolve(dataset.n_samples)  # config-vs-data errors are usage errors
    except ValueError as err:
        raise ManifestError(str(err)) from None
    result = run_pipeline(dataset, cfg)
    report = write_outputs(result, dataset, out_dir)
    sys.stdout.write(format_table(report))
    sys.stdout.write("wrote %s\n" % (Path(out_dir) / "report.json"))
    return result


def cmd_run(args):
    if not args.data:
        raise ManifestError("run needs --data MANIFEST")
    dataset = load_dataset(args.data)
    cfg = _build_config(args)
    _report_run(dataset, cfg, args.out)
    return 0


def cmd_synth(args):
    dataset = generate_synthetic(
        per_cluster=args.per_cluster,
        clusters=args.gen_clusters,
        views=args.views,
        noise=args.noise,
        seed=args.data_seed,
    )
    if args.save_data:
        manifest = save_dataset(dataset, args.save_data)
        sys.stdout.write("dataset written to %s\n" % manifest)
    cfg = _build_config(args, default_clusters=args.gen_clusters)
    _report_run(dataset, cfg, args.out)
    return 0


def cmd_bench(args):
    if args.data:
        dataset = load_dataset(args.data)
    else:
        dataset = generate_synthetic(
            per_cluster=args.per_cluster,
            clusters=args.gen_clusters,
            views=args.views,
            noise=args.noise,
            seed=args.data_seed,
        )
    base = _build_config(
        args, default_clusters=None if args.data else args.gen_clusters
    )
    try:
        base.resolve(dataset.n_samples)
    except ValueError as err:
        raise ManifestError(str(err)) from None
    norms = args.norms.split(",")
    gammas = [float(v) for v in args.gammas.split(",")] if args.gammas else [base.gamma]
    rhos = [float(v) for v in args.rhos.split(",")] if args.rhos else [base.rho]
    rows = []
    for norm in norms:
        for gamma in gammas:
            for rho in rhos:
                cfg = dataclasses.replace(base, norm_mode=norm, gamma=gamma, rho=rho)
                t0 = time.perf_counter()
                result = run_pipeline(dataset, cfg)
                seconds = time.perf_counter() - t0
                row = {"norm": norm, "gamma": gamma, "rho": rho, "seconds": round(seconds, 3)}
                for col in METRIC_COLUMNS:
                    row[col] = result.metrics[col] if result.metrics else float("nan")
                rows.append(row)
    csv_path = write_bench_table(rows, args.out)
    header = ["norm", "gamma", "rho"] + METRIC_COLUMNS + ["seconds"]
    sys.stdout.write("  ".join(header) + "\n")
    for row in rows:
        cells = [str(row["norm"]), "%g" % row["gamma"], "%g" % row["rho"]]
        cells += ["%.4f" % row[c] for c in METRIC_COLUMNS]
        cells.append("%.3f" % row["seconds"])
        sys.stdout.write("  ".join(cells) + "\n")
    sys.stdout.write("wrote %s\n" % csv_path)
    return 0


def cmd_prox_check(args):
    ok = selfcheck.run_all(trials=args.trials, seed=args.seed or 0)
    return 0 if ok else RUNTIME_EXIT


def _parser():
    parser = argparse.ArgumentParser(
        prog="mvclust",
        description="Multi-view clustering through a learned consensus graph.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="cluster a dataset described by a manifest")
    run_p.add_argument("--data", metavar="MANIFEST", help="dataset manifest (TOML)")
    _add_config_flags(run_p)
    run_p.set_defaults(func=cmd_run)

    synth_p = sub.add_parser("synth", help="generate synthetic data and cluster it")
    _add_synth_flags(synth_p)
    _add_config_flags(synth_p)
    synth_p.set_defaults(func=cmd_synth)

    bench_p = sub.add_parser("bench", help="run a config grid and tabulate")
    bench_p.add_argument("--data", metavar="MANIFEST")
    _add_synth_flags(bench_p)
    bench_p.add_argument("--norms", default="t-gamma,weighted-tnn,tnn",
                         help="comma list of norm modes")
    bench_p.add_argument("--gammas", help="comma list of gamma values")
    bench_p.add_argument("--rhos", help="comma list of rho values")
    _add_config_flags(bench_p)
    bench_p.set_defaults(func=cmd_bench)

    prox_p = sub.add_parser("prox-check", help="numerical self-test of the shrinkage")
    prox_p.add_argument("--trials", type=int, default=100)
    prox_p.add_argument("--seed", type=int, default=0)
    prox_p.set_defaults(func=cmd_prox_check)
    return parser


def _add_synth_flags(parser):
    parser.add_argument("--per-cluster", type=int, default=50)
    parser.add_argument("--gen-clusters", type=int, default=3,
                        help="number of generated clusters")
    parser.add_argument("--views", type=int, default=3)
    parser.add_argument("--noise", type=float, default=1.0)
    parser.add_argument("--data-seed", type=int, default=0)
    parser.add_argument("--save-data", metavar="DIR",
                        help="also write the generated dataset here")


def main(argv=None):
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ManifestError as err:
        sys.stderr.write("error: input: %s\n" % err)
        return USAGE_EXIT
    except Exception as err:  # noqa: BLE001 - single CLI boundary
        sys.stderr.write("error: runtime: %s\n" % err)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
