"""Command line entry point: ``nsbmggm {infer,simulate,subsample,sweep-maxdegree}``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from .config import build_config, load_yaml
from .experiment import (
    ROW_HEADER,
    SUMMARY_HEADER,
    ConfigError,
    bh_graph,
    compute_statistics,
    infer_graph,
    rows_to_csv,
    run_experiment,
    summarize,
)
from .ggmstats import DataError, read_sample_csv
from .icl import Variant
from .mtp import select_edges

log = logging.getLogger("nsbmggm")

EXIT_OK, EXIT_DATA, EXIT_CONFIG = 0, 1, 2
THREADS_ENV = "NSBMGGM_THREADS"


def _workers(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}: expected an integer, got {raw!r}") from None


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _summary_path(out: Path) -> Path:
    return out.with_name(out.stem + "_summary.csv")


def _matrix_csv(m, fmt="%.10g") -> str:
    return "\n".join(",".join(fmt % v for v in row) for row in np.asarray(m)) + "\n"


def cmd_infer(args) -> int:
    y = read_sample_csv(args.data)
    if args.matrix:
        x = np.asarray(y, dtype=float)
        if x.shape[0] != x.shape[1]:
            raise DataError(f"{args.data}: statistic matrix must be square, got {x.shape}")
        if not np.allclose(x, x.T):
            raise DataError(f"{args.data}: statistic matrix is not symmetric")
    else:
        x = compute_statistics(y, args.statistic, args.lam)
    greedy = {"restarts": args.restarts}
    adj, fit = infer_graph(x, args.alpha, Variant(args.variant), greedy, args.seed)
    out = Path(args.out_dir)
    _write(out / "adjacency.csv", _matrix_csv(adj, "%d"))
    _write(out / "lvalues.csv", _matrix_csv(fit.lvalues))
    report = {
        "p": int(len(x)),
        "q": int(fit.q),
        "icl": float(fit.icl.total),
        "icl_sbm": float(fit.icl.sbm_part),
        "icl_noise": float(fit.icl.noise_part),
        "edges": int(adj[np.triu_indices(len(x), 1)].sum()),
        "alpha": float(args.alpha),
        "clusters": [int(v) for v in fit.z],
        "pi": [float(v) for v in fit.params.pi],
        "w": fit.params.w.tolist(),
        "mu": fit.params.mu.tolist(),
        "sigma_sq": fit.params.sigma_sq.tolist(),
    }
    _write(out / "report.yaml", yaml.safe_dump(report, sort_keys=False))
    print(f"Q={fit.q} ICL={fit.icl.total:.6f} edges={report['edges']} -> {out}")
    return EXIT_OK


def _experiment_config(args):
    overrides = {"replicates": args.replicates, "seed": args.seed, "output": args.output}
    return build_config(load_yaml(args.config), overrides)


def _emit(rows, cfg, out: Path, header, summary_rows, summary_header):
    _write(out, rows_to_csv(rows, header))
    _write(_summary_path(out), rows_to_csv(summary_rows, summary_header))
    print(f"{len(rows)} rows -> {out}")


def cmd_simulate(args) -> int:
    cfg, _ = _experiment_config(args)
    if not cfg.output:
        raise ConfigError("output: required (config key or --output)")
    rows = run_experiment(cfg, _workers(args))
    _emit(rows, cfg, Path(cfg.output), ROW_HEADER, summarize(rows, cfg.procedures), SUMMARY_HEADER)
    return EXIT_OK


def cmd_sweep_maxdegree(args) -> int:
    cfg, extra = _experiment_config(args)
    if "grid" not in extra:
        raise ConfigError("grid: required field missing")
    if not cfg.output:
        raise ConfigError("output: required (config key or --output)")
    rows, summary = [], []
    workers = _workers(args)
    for s in extra["grid"]:
        graph = dataclasses.replace(cfg.graph, kind="max_degree", max_degree=s)
        sub = dataclasses.replace(cfg, graph=graph)
        part = run_experiment(sub, workers)
        rows += [dict(s=s, **r) for r in part]
        summary += [dict(s=s, **r) for r in summarize(part, cfg.procedures)]
    _emit(rows, cfg, Path(cfg.output), ["s"] + ROW_HEADER, summary, ["s"] + SUMMARY_HEADER)
    return EXIT_OK


def cmd_subsample(args) -> int:
    y, names = read_sample_csv(args.data, with_header=True)
    n, p = y.shape
    if not 2 <= args.size <= n:
        raise DataError(f"subset size must lie in [2, {n}], got {args.size}")
    names = names or [f"V{i + 1}" for i in range(p)]
    counts = {"nsbm": np.zeros((p, p), dtype=np.int64), "bh": np.zeros((p, p), dtype=np.int64)}
    seeds = np.random.SeedSequence(args.seed).spawn(args.replicates)
    for r, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        idx = np.sort(rng.choice(n, size=args.size, replace=False))
        x = compute_statistics(y[idx], args.statistic, args.lam)
        adj, _ = infer_graph(x, args.alpha, Variant(args.variant), {"restarts": args.restarts}, int(ss.generate_state(1)[0]))
        counts["nsbm"] += adj
        counts["bh"] += bh_graph(x, args.alpha)
    lines = ["var_i,var_j,nsbm,bh,replicates"]
    for i, j in zip(*np.triu_indices(p, 1)):
        lines.append(f"{names[i]},{names[j]},{counts['nsbm'][i, j]},{counts['bh'][i, j]},{args.replicates}")
    _write(Path(args.output), "\n".join(lines) + "\n")
    print(f"{len(lines) - 1} pairs -> {args.output}")
    return EXIT_OK


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nsbmggm", description="Graph inference with a noisy stochastic block model.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def fit_flags(p, default_stat="ztransform"):
        p.add_argument("--statistic", choices=["ztransform", "nodewise"], default=default_stat)
        p.add_argument("--variant", choices=[v.value for v in Variant], default="gaussian")
        p.add_argument("--alpha", type=float, default=0.1)
        p.add_argument("--lam", type=float, default=None, help="nodewise lasso penalty")
        p.add_argument("--restarts", type=_positive_int, default=3)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("infer", help="fit one data set (rows = observations)")
    p.add_argument("data")
    p.add_argument("--matrix", action="store_true", help="input is already a p x p statistic matrix")
    p.add_argument("--out-dir", default="nsbm_out")
    fit_flags(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("subsample", help="edge detection counts over random row subsets")
    p.add_argument("data")
    p.add_argument("--size", type=int, default=20)
    p.add_argument("--replicates", type=_positive_int, default=200)
    p.add_argument("--output", default="subsample_counts.csv")
    fit_flags(p, default_stat="nodewise")
    p.set_defaults(func=cmd_subsample)

    for name, func in (("simulate", cmd_simulate), ("sweep-maxdegree", cmd_sweep_maxdegree)):
        p = sub.add_parser(name, help=f"replicated {'simulation' if name == 'simulate' else 'max-degree sweep'} from a YAML config")
        p.add_argument("config")
        p.add_argument("--replicates", type=_positive_int, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--output", default=None)
        p.add_argument("--threads", type=_positive_int, default=None, help=f"worker processes (else ${THREADS_ENV})")
        p.set_defaults(func=func)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
