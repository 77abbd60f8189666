"""Command-line harness: ``rbfgan {gen-data,train,eval,reconstruct,report}``."""
import argparse
import os
import sys

import numpy as np
from scipy.spatial import cKDTree

from .checkpoint import checkpoint_load, checkpoint_save
from .config import PROFILES, resolve_config
from .datasets import (
    Dataset,
    GridSpec,
    NormStats,
    burgers_generate,
    burgers_solution,
    csv_load,
    csv_save,
    read_keyvalue,
    split,
    write_keyvalue,
)
from .errors import (
    ArchitectureParseError,
    CheckpointError,
    ConfigError,
    DivergenceError,
    ParameterError,
    RbfGanError,
    ResolutionError,
    SchemaError,
)
from .gan import TrainingTrace, make_burgers_evaluator, train, train_regressor
from .metrics import MetricReport, eta, interval_std, mode_coverage, mse, mspe
from .tensor import SeededRng

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3, 4
_RECON_STREAM = 5


def _fmt(x):
    return format(float(x), ".17g")


def load_dataset(cfg):
    if cfg.data:
        return csv_load(cfg.data, cfg.schema, cfg.design_dim or None)
    if cfg.schema != "burgers":
        raise ConfigError(f"schema {cfg.schema!r} needs a data path")
    return burgers_generate(GridSpec.parse(cfg.grid), cfg.family)


def prepare(cfg):
    """Return (train_set, validation, stats, eval_target) for the configured run.

    ``eval_target`` is the dataset (or evaluator) used by ``eval``.
    """
    ds = load_dataset(cfg)
    plain_gan = cfg.model == "gan" and cfg.gan.mode == "gan"
    if plain_gan:
        if cfg.schema != "burgers":
            raise ConfigError("unconditional GAN evaluation needs the Burgers' solution; use mode = cgan")
        stats = NormStats.from_dataset(ds, cfg.norm_range_map())
        evaluator = make_burgers_evaluator(ds, cfg.family if not cfg.data else None)
        return ds, evaluator, stats, evaluator
    if ds.split is None:
        ds = split(ds, cfg.split_ratios(), cfg.split_seed)
    stats = NormStats.from_dataset(ds, cfg.norm_range_map())
    return ds.subset("train"), ds.subset("val"), stats, ds.subset(cfg.eval_split)


def cmd_gen_data(cfg, out):
    ds = load_dataset(cfg)
    ds.metadata["seed"] = str(cfg.gan.seed)
    path = os.path.join(out, "data.csv")
    csv_save(ds, path)
    print(f"wrote {ds.n_rows} rows to {path}")
    return path


def cmd_train(cfg, out):
    train_set, validation, stats, _ = prepare(cfg)
    if cfg.model == "regressor":
        model, trace = train_regressor(cfg.gan, train_set, validation, stats)
    else:
        model, trace = train(cfg.gan, train_set, validation, stats)
    checkpoint_save(model, os.path.join(out, "checkpoint.txt"))
    trace.to_csv(os.path.join(out, "trace.csv"))
    if cfg.record_timing:
        trace.to_csv(os.path.join(out, "timing.csv"), timing=True)
    print(f"trained {len(trace)} epochs; final validation MSE {_fmt(trace.val_mse[-1])}")
    return model, trace


def _generated_dataset(model, target, pred):
    """Generated rows as a Dataset aligned with the evaluation target."""
    if hasattr(target, "compare"):
        rows = model.stats.denormalize(model.generator(model.eval_noise(model.config.eval_samples)))
        return Dataset(model.schema, model.design_columns, model.response_columns, rows)
    return Dataset(model.schema, model.design_columns, model.response_columns,
                   np.hstack([target.design, pred]))


def cmd_eval(cfg, out, checkpoint):
    model = checkpoint_load(checkpoint)
    _, _, _, target = prepare(cfg)
    pred, actual = model.validation_pairs(target)
    report = MetricReport(name=cfg.name, mse=mse(pred, actual))
    report.mspe, report.mspe_excluded = mspe(pred, actual, return_excluded=True)
    trace_path = os.path.join(os.path.dirname(os.path.abspath(checkpoint)), "trace.csv")
    if os.path.exists(trace_path):
        trace = TrainingTrace.from_csv(trace_path)
        fit = [iv for iv in cfg.interval_list() if iv[1] <= len(trace)]
        if fit:
            report.intervals = [list(iv) for iv in fit]
            report.interval_std = interval_std(trace, fit)
    if cfg.coverage_column in model.design_columns + model.response_columns:
        reference = load_dataset(cfg)
        generated = _generated_dataset(model, target, pred)
        report.coverage_generated, report.coverage_reference = mode_coverage(
            generated, reference, cfg.coverage_column, cfg.coverage_threshold)
    with open(os.path.join(out, "metrics.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.to_text())
    with open(os.path.join(out, "metrics.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report.csv_header() + "\n" + report.csv_row() + "\n")
    print(f"MSE {_fmt(report.mse)}  MSPE {report.mspe:.4f}%")
    return report


def cmd_reconstruct(cfg, out, checkpoint):
    model = checkpoint_load(checkpoint)
    if not cfg.recon_grid:
        raise ConfigError("reconstruct needs recon_grid")
    grid = GridSpec.parse(cfg.recon_grid)
    if sorted(grid.names) != sorted(model.design_columns):
        raise ConfigError(f"recon_grid must cover design columns {model.design_columns}, got {grid.names}")
    pts = grid.points()[:, [grid.names.index(c) for c in model.design_columns]]
    rng = SeededRng(model.config.seed).child(_RECON_STREAM)
    if "regressor" in model.networks:
        resp = model.predict(pts)
    elif model.config.mode == "cgan":
        resp = model.generate_conditional(rng, pts)
    else:
        # unconditional generator: average the k generated samples nearest to each grid point
        rows = model.generate(rng, cfg.recon_samples)
        dstats = model.stats.select(model.design_columns)
        tree = cKDTree(dstats.normalize(rows[:, :model.n_design]))
        k = min(cfg.recon_neighbors, cfg.recon_samples)
        _, idx = tree.query(dstats.normalize(pts), k=k)
        idx = np.asarray(idx).reshape(len(pts), k)
        resp = rows[:, model.n_design:][idx].mean(axis=1)
    header = model.design_columns + model.response_columns
    cols = [pts, resp]
    if model.schema == "burgers":
        header = header + ["u_ref"]
        cols.append(np.asarray(burgers_solution(pts[:, 1], pts[:, 0], pts[:, 2], cfg.family)).reshape(-1, 1))
    table = np.hstack(cols)
    path = os.path.join(out, "reconstruction.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in table:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    print(f"wrote {len(table)} rows to {path}")
    return path


def cmd_report(runs, baseline, out):
    reports = []
    for run in runs:
        path = os.path.join(run, "metrics.txt") if os.path.isdir(run) else run
        reports.append(MetricReport.from_mapping(read_keyvalue(path)))
    base = None
    if baseline:
        bpath = os.path.join(baseline, "metrics.txt") if os.path.isdir(baseline) else baseline
        base = MetricReport.from_mapping(read_keyvalue(bpath))
        if not base.interval_std:
            raise SchemaError(f"baseline {baseline} has no interval statistics")
        for r in reports:
            if r.interval_std:
                r.eta = eta(r.interval_std[-1], base.interval_std[-1])
                r.baseline = base.name
    path = os.path.join(out, "report.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if reports:
            fh.write(reports[0].csv_header() + "\n")
        for r in reports:
            fh.write(r.csv_row() + "\n")
    print(f"wrote {len(reports)} rows to {path}")
    return path


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--profile", help=f"built-in profile: {', '.join(sorted(PROFILES))}")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key")
    p = argparse.ArgumentParser(prog="rbfgan", description="RBF-discriminator GANs for flow-field data")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-data", parents=[common], help="generate the Burgers' dataset")
    sub.add_parser("train", parents=[common], help="train a model; writes checkpoint and trace")
    for name in ("eval", "reconstruct"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--checkpoint", help="defaults to <out>/checkpoint.txt")
    rp = sub.add_parser("report", parents=[common], help="aggregate metrics into one CSV")
    rp.add_argument("runs", nargs="+", help="run directories or metrics.txt files")
    rp.add_argument("--baseline", help="run whose last-interval std is the stability baseline")
    return p


def run(argv=None):
    args = _parser().parse_args(argv)
    os.makedirs(args.out, exist_ok=True)
    if args.command == "report":
        cmd_report(args.runs, args.baseline, args.out)
        return EXIT_OK
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    cfg = resolve_config(args.config, args.profile, overrides)
    write_keyvalue(os.path.join(args.out, "config.resolved"), cfg.to_mapping())
    checkpoint = getattr(args, "checkpoint", None) or os.path.join(args.out, "checkpoint.txt")
    if args.command == "gen-data":
        cmd_gen_data(cfg, args.out)
    elif args.command == "train":
        cmd_train(cfg, args.out)
    elif args.command == "eval":
        cmd_eval(cfg, args.out, checkpoint)
    else:
        cmd_reconstruct(cfg, args.out, checkpoint)
    return EXIT_OK


def main(argv=None):
    try:
        return run(argv)
    except (ConfigError, ArchitectureParseError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DivergenceError, ResolutionError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SchemaError, CheckpointError, ParameterError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RbfGanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
