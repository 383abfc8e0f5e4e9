"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .balancing import BalancingError, SmoteConfig, balance_dataset
from .dataset import EXAMPLE_DATASETS, DataError, Dataset, load_csv, load_example, write_csv
from .forest import ModelFormatError, grow_forest, impute_adaptive, load_forest, save_forest
from .harness import (ExperimentConfig, backward_select, cv_evaluate, default_grid, importance,
                      partial_dependence, survival_at, variable_dependence, write_cv_outputs)
from .metrics import NoPermissiblePairsError, c_index
from .theory import corollary_sweep

logger = logging.getLogger("brsf")

EXIT_CONFIG = 2
EXIT_DATA = 3


class ConfigError(ValueError):
    pass


# config-file key -> (argparse dest, converter)
CONFIG_KEYS = {
    "trees": ("trees", int),
    "mtry": ("mtry", str),
    "min_deaths": ("min_deaths", int),
    "seed": ("seed", int),
    "balance": ("balance", str),
    "folds": ("folds", int),
    "time_col": ("time_col", str),
    "status_col": ("status_col", str),
    "categorical": ("categorical", str),
    "k": ("k", int),
    "ratio": ("ratio", float),
    "jobs": ("jobs", int),
}


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    out = {}
    for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        sep = "=" if "=" in line else ":" if ":" in line else None
        if sep is None:
            raise ConfigError(f"{p}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split(sep, 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{p}:{lineno}: unknown key {key!r}")
        dest, conv = CONFIG_KEYS[key]
        try:
            out[dest] = conv(value)
        except ValueError:
            raise ConfigError(f"{p}:{lineno}: bad value for {key!r}: {value!r}") from None
    return out


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


def _int_grid(text):
    """``"a,b,c"`` or an inclusive range ``"start:stop[:step]"``."""
    try:
        if ":" in text:
            parts = [int(v) for v in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            return list(range(start, stop + 1, step))
        return [int(v) for v in text.split(",") if v.strip()]
    except (ValueError, IndexError):
        raise argparse.ArgumentTypeError(f"bad integer grid: {text!r}") from None


def _mtry(text):
    if text in ("auto", "sqrt"):
        return "auto"
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError("--mtry must be 'auto' or a positive integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError("--mtry must be positive")
    return v


def _add_data(p, required=True):
    p.add_argument("--data", "--in", dest="data", required=required,
                   help="CSV file or bundled dataset name (" + ", ".join(EXAMPLE_DATASETS) + ")")
    p.add_argument("--time-col", default="time")
    p.add_argument("--status-col", default="status")
    p.add_argument("--categorical", default="", help="comma-separated categorical columns")


def _add_forest(p):
    p.add_argument("--trees", type=int, default=1000)
    p.add_argument("--mtry", type=_mtry, default="auto")
    p.add_argument("--min-deaths", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker threads")


def _add_balance(p, default="none"):
    p.add_argument("--balance", choices=("none", "smote"), default=default)
    p.add_argument("--k", type=int, default=5, help="SMOTE nearest neighbours")
    p.add_argument("--ratio", type=float, default=1.0, help="target minority/majority ratio")
    p.add_argument("--smote-extrapolate", action="store_true",
                   help="place synthetic points at xi + g(xi - xj) instead of on the segment")
    p.add_argument("--smote-time", choices=("copy", "interp"), default="copy")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brsf", description="Balanced random survival forests")
    parser.add_argument("--config", help="flat key = value configuration file")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a forest and save it as JSON")
    _add_data(p)
    _add_forest(p)
    _add_balance(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("predict", help="predict risk and survival with a saved forest")
    _add_data(p)
    p.add_argument("--model", required=True)
    p.add_argument("--times", type=_float_list, help="survival evaluation times")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="cross-validated RSF (and BRSF) evaluation")
    _add_data(p)
    _add_forest(p)
    _add_balance(p)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("balance", help="SMOTE-balance a dataset")
    _add_data(p)
    _add_balance(p, default="smote")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trees", type=int, default=1000,
                   help="trees used to impute missing values before balancing")
    p.add_argument("--out", required=True, help="balanced CSV path; sidecar gets .json")

    p = sub.add_parser("importance", help="VIMP and minimal depth")
    _add_data(p)
    _add_forest(p)
    p.add_argument("--repeats", type=int, default=1, help="permutations per feature")
    p.add_argument("--out", required=True, help="output directory")

    for name, helptext in (("pdp", "partial dependence"), ("vdp", "variable dependence")):
        p = sub.add_parser(name, help=helptext)
        _add_data(p)
        _add_forest(p)
        p.add_argument("--feature", required=True)
        p.add_argument("--times", type=_float_list, help="survival evaluation times")
        if name == "pdp":
            p.add_argument("--grid", type=_float_list, help="feature values")
            p.add_argument("--grid-points", type=int, default=25)
        p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("select", help="backward feature selection on OOB error")
    _add_data(p)
    _add_forest(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("theory", help="Brier ratio of the idealized imbalanced split")
    p.add_argument("--m1", type=int, required=True, help="censored count")
    p.add_argument("--m2", type=int, required=True, help="mortality count")
    p.add_argument("--d0", type=int, default=3)
    p.add_argument("--m2-prime-grid", type=_int_grid,
                   help="balanced minority sizes, 'a,b,c' or 'start:stop[:step]'")
    p.add_argument("--minority", choices=("mortality", "censored"), default="mortality")
    p.add_argument("--hc-denominator", choices=("half", "full"), default="half")
    p.add_argument("--csv", help="also write the table to this CSV")
    return parser


def _load(args) -> Dataset:
    cats = [c.strip() for c in args.categorical.split(",") if c.strip()]
    if args.data in EXAMPLE_DATASETS and not Path(args.data).exists():
        return load_example(args.data)
    return load_csv(args.data, args.time_col, args.status_col, cats)


def _max_features(args):
    return "sqrt" if args.mtry == "auto" else int(args.mtry)


def _smote_config(args, seed) -> SmoteConfig:
    return SmoteConfig(args.k, args.ratio, seed, args.smote_extrapolate, args.smote_time)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_rows(path, rows, header):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def _feature_index(data: Dataset, name: str) -> int:
    if name not in data.feature_names:
        raise ConfigError(f"unknown feature {name!r}; have {data.feature_names}")
    return data.feature_names.index(name)


def _default_times(forest):
    return np.quantile(forest.event_times_, [0.25, 0.5, 0.75])


def _balanced_training_set(data, args, trees, seed):
    """Impute (if needed) then SMOTE-balance; returns (dataset, sidecar)."""
    completed, _ = impute_adaptive(data, trees, _max_features(args), args.min_deaths, seed,
                                   args.jobs)
    bal = balance_dataset(completed, _smote_config(args, seed))
    return bal.data, bal.sidecar()


def cmd_train(args):
    data = _load(args)
    sidecar = None
    if args.balance == "smote":
        data, sidecar = _balanced_training_set(data, args, args.trees, args.seed)
    forest = grow_forest(data, args.trees, _max_features(args), args.min_deaths, args.seed,
                         args.jobs)
    out = _outdir(args)
    save_forest(forest, out / "model.json")
    summary = {"n_records": data.n_records, "trees": args.trees, "balance": args.balance,
               "oob_c_index": forest.oob_score()}
    if sidecar is not None:
        summary["balancing"] = sidecar
    (out / "train.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    print(f"OOB C-index {summary['oob_c_index']:.2f}; model written to {out / 'model.json'}")


def cmd_predict(args):
    try:
        forest = load_forest(args.model)
    except (OSError, ModelFormatError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load model: {exc}") from None
    if args.data in EXAMPLE_DATASETS and not Path(args.data).exists():
        data = load_example(args.data)
    else:
        data = load_csv(args.data, args.time_col, args.status_col, features=forest.feature_meta_)
    times = np.asarray(args.times if args.times else _default_times(forest), dtype=float)
    risk = forest.predict(data.X)
    S = survival_at(forest, data.X, times)
    header = ["row", "risk"] + [f"S({t:g})" for t in times]
    rows = [{"row": i, "risk": float(risk[i]), **{header[2 + k]: float(S[i, k])
                                                   for k in range(times.size)}}
            for i in range(data.n_records)]
    out = _outdir(args)
    _write_rows(out / "predictions.csv", rows, header)
    try:
        print(f"C-index {c_index(risk, data.time, data.status):.2f} on {data.n_records} records")
    except NoPermissiblePairsError:
        print(f"{data.n_records} predictions written")


def cmd_eval(args):
    cfg = ExperimentConfig(data=args.data, time_col=args.time_col, status_col=args.status_col,
                           categorical=tuple(c for c in args.categorical.split(",") if c),
                           folds=args.folds, trees=args.trees, mtry=args.mtry,
                           min_deaths=args.min_deaths, seed=args.seed, balance=args.balance,
                           k=args.k, ratio=args.ratio, smote_time=args.smote_time,
                           smote_extrapolate=args.smote_extrapolate, n_jobs=args.jobs)
    data = _load(args)
    if cfg.folds > data.n_records:
        raise ConfigError(f"folds={cfg.folds} exceeds the {data.n_records} records")
    result = cv_evaluate(cfg, data)
    write_cv_outputs(result, _outdir(args))
    print(f"{'model':<6} {'C-index':>16} {'IBS':>18}")
    for name, m in result.models.items():
        print(f"{name:<6} {m.mean('c_index'):8.2f} ({m.sd('c_index'):5.2f}) "
              f"{m.mean('ibs'):9.4f} ({m.sd('ibs'):.4f})")
    if result.redraws:
        print(f"fold assignment re-drawn {result.redraws} time(s)")


def cmd_balance(args):
    data = _load(args)
    if data.n_missing:
        data, _ = impute_adaptive(data, args.trees, "sqrt", 3, args.seed)
    bal = balance_dataset(data, _smote_config(args, args.seed))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(bal.data, out, args.time_col, args.status_col)
    side = out.with_suffix(".json")
    side.write_text(json.dumps(bal.sidecar(), indent=2, sort_keys=True))
    print(f"{bal.synthetic_count} synthetic records added; wrote {out} and {side}")


def _fit(args, data):
    return grow_forest(data, args.trees, _max_features(args), args.min_deaths, args.seed,
                       args.jobs)


def cmd_importance(args):
    data = _load(args)
    report = importance(_fit(args, data), args.seed, data.feature_names, args.repeats)
    rows = list(report.rows())
    _write_rows(_outdir(args) / "importance.csv", rows,
                ["feature", "vimp", "md", "vimp_rank", "md_rank"])
    for row in sorted(rows, key=lambda r: r["vimp_rank"]):
        print(f"{row['feature']:<16} vimp {row['vimp']:+.4f}  md {row['md']:.2f}")


def cmd_pdp(args):
    data = _load(args)
    j = _feature_index(data, args.feature)
    forest = _fit(args, data)
    grid = args.grid if args.grid else default_grid(data.X[:, j], args.grid_points,
                                                    bool(data.categorical_mask[j]))
    times = args.times if args.times else _default_times(forest)
    X = forest.imputed_X_
    prof = partial_dependence(forest, X, j, grid, times)
    path = _outdir(args) / f"pdp_{args.feature}.csv"
    _write_rows(path, prof.rows(), ["value", "t", "survival"])
    print(f"partial dependence written to {path}")


def cmd_vdp(args):
    data = _load(args)
    j = _feature_index(data, args.feature)
    forest = _fit(args, data)
    times = args.times if args.times else _default_times(forest)
    prof = variable_dependence(forest, forest.imputed_X_, j, times)
    path = _outdir(args) / f"vdp_{args.feature}.csv"
    _write_rows(path, prof.rows(), ["subject", "value", "t", "survival"])
    print(f"variable dependence written to {path}")


def cmd_select(args):
    data = _load(args)
    if data.n_features < 2:
        raise ConfigError("backward selection needs at least two features")
    res = backward_select(data, args.trees, _max_features(args), args.min_deaths, args.seed,
                          args.jobs)
    out = _outdir(args)
    (out / "selection.json").write_text(json.dumps(res.to_dict(), indent=2))
    rows = [{"step": k, "n_features": len(s.features), "oob_error": s.error,
             "removed": s.removed or ""} for k, s in enumerate(res.trace)]
    _write_rows(out / "selection_trace.csv", rows, ["step", "n_features", "oob_error", "removed"])
    print(f"selected {len(res.selected)} features, OOB error {res.error:.4f}: "
          + ", ".join(res.selected))


def cmd_theory(args):
    small = args.m2 if args.minority == "mortality" else args.m1
    big = args.m1 if args.minority == "mortality" else args.m2
    grid = args.m2_prime_grid or list(range(small, big + 1))
    rows = corollary_sweep(args.m1, args.m2, args.d0, grid, args.minority, args.hc_denominator)
    header = ("m2_prime", "H_M_prime", "rho_prime", "ratio")
    table = [(mp, c.h_m_prime, c.rho_prime, c.ratio) for mp, c in rows]
    print(f"m1={args.m1} m2={args.m2} d0={args.d0} minority={args.minority}  "
          f"H_M={rows[0][1].h_m:.6f} H_C={rows[0][1].h_c:.6f} rho={rows[0][1].rho:.6f}")
    print(f"{header[0]:>9} {header[1]:>12} {header[2]:>12} {header[3]:>12}")
    for mp, h, rho, ratio in table:
        print(f"{mp:>9d} {h:>12.6f} {rho:>12.6f} {ratio:>12.6f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for mp, h, rho, ratio in table:
                w.writerow([mp, repr(h), repr(rho), repr(ratio)])


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "eval": cmd_eval,
            "balance": cmd_balance, "importance": cmd_importance, "pdp": cmd_pdp,
            "vdp": cmd_vdp, "select": cmd_select, "theory": cmd_theory}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            defaults = read_config(known.config)
            for action in parser._subparsers._group_actions[0].choices.values():
                valid = {a.dest for a in action._actions}
                action.set_defaults(**{k: v for k, v in defaults.items() if k in valid})
        args = parser.parse_args(argv)
    except ConfigError as exc:
        print(f"brsf: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (DataError, BalancingError, NoPermissiblePairsError) as exc:
        print(f"brsf: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, ValueError) as exc:
        print(f"brsf: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
