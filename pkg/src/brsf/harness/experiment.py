"""Cross-validated comparison of RSF and balanced RSF (BRSF)."""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from joblib import Parallel, delayed

from ..balancing import BalancingError, SmoteConfig, balance_dataset
from ..dataset import EXAMPLE_DATASETS, Dataset, load_csv, load_example, split_folds
from ..forest import grow_forest
from ..metrics import (censoring_survival, concordance_values, evaluate,
                       kaplan_meier, pec)

logger = logging.getLogger(__name__)

MAX_REDRAWS = 100


@dataclass
class ExperimentConfig:
    """Cross-validation protocol.

    ``data`` is a CSV path or the name of a bundled example dataset. ``n_jobs``
    threads evaluate folds concurrently; trees inside a fold grow serially.
    """

    data: str | None = None
    time_col: str = "time"
    status_col: str = "status"
    categorical: tuple = ()
    folds: int = 10
    trees: int = 1000
    mtry: str | int = "auto"
    min_deaths: int = 3
    seed: int = 0
    balance: str = "none"
    k: int = 5
    ratio: float = 1.0
    smote_time: str = "copy"
    smote_extrapolate: bool = False
    n_jobs: int | None = None
    tau_quantile: float = 95.0

    def __post_init__(self):
        if self.folds < 2:
            raise ValueError("folds must be >= 2")
        if self.trees < 1:
            raise ValueError("trees must be >= 1")
        if self.min_deaths < 1:
            raise ValueError("min_deaths must be >= 1")
        if self.balance not in ("none", "smote"):
            raise ValueError("balance must be 'none' or 'smote'")

    def load(self) -> Dataset:
        if self.data is None:
            raise ValueError("no dataset configured")
        if self.data in EXAMPLE_DATASETS:
            return load_example(self.data)
        return load_csv(self.data, self.time_col, self.status_col, list(self.categorical))

    def smote(self, seed: int, k: int | None = None) -> SmoteConfig:
        return SmoteConfig(self.k if k is None else k, self.ratio, seed,
                           self.smote_extrapolate, self.smote_time)

    @property
    def max_features(self):
        return "sqrt" if self.mtry in ("auto", None) else int(self.mtry)


def derive_seed(*keys: int) -> int:
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


@dataclass
class FoldResult:
    fold: int
    n_train: int
    n_test: int
    c_index: float
    ibs: float
    tau: float
    n_dropped_weight_zero: int
    synthetic_count: int
    k_neighbors: int = 0
    pec_t: list = field(default_factory=list)
    pec_e: list = field(default_factory=list)
    km_e: list = field(default_factory=list)

    def summary(self) -> dict:
        d = asdict(self)
        for k in ("pec_t", "pec_e", "km_e"):
            d.pop(k)
        d["pec"] = [{"t": t, "e": e} for t, e in zip(self.pec_t, self.pec_e)]
        return d


@dataclass
class ModelResult:
    name: str
    folds: list[FoldResult] = field(default_factory=list)

    def _values(self, key):
        return np.array([getattr(f, key) for f in self.folds], dtype=float)

    def mean(self, key) -> float:
        return float(np.mean(self._values(key)))

    def sd(self, key) -> float:
        v = self._values(key)
        return float(np.std(v, ddof=1)) if v.size > 1 else 0.0

    def to_dict(self) -> dict:
        return {"mean": {"c_index": self.mean("c_index"), "ibs": self.mean("ibs")},
                "sd": {"c_index": self.sd("c_index"), "ibs": self.sd("ibs")},
                "folds": [f.summary() for f in self.folds]}


@dataclass
class CVResult:
    config: ExperimentConfig
    models: dict
    redraws: int
    fold_seed: int

    def to_dict(self) -> dict:
        config = asdict(self.config)
        config.pop("n_jobs")  # execution detail; results do not depend on it
        return {"config": config, "fold_seed": self.fold_seed,
                "fold_redraws": self.redraws,
                "models": {k: m.to_dict() for k, m in self.models.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _fold_ok(data: Dataset, test_idx) -> bool:
    st = data.status[test_idx]
    if st.sum() == 0:
        return False
    return concordance_values(np.zeros(test_idx.size), data.time[test_idx], st)[1] > 0


def assign_folds(data: Dataset, k: int, seed: int):
    """Fold assignment in which every test fold has an event; redraws counted."""
    for attempt in range(MAX_REDRAWS):
        s = seed if attempt == 0 else derive_seed(seed, attempt)
        folds = split_folds(data, k, s)
        if all(_fold_ok(data, folds.test_indices(f)) for f in range(k)):
            return folds, attempt, s
    raise ValueError(f"could not find {k} folds that each contain an event")


def _score(forest, test: Dataset, G, tau, km, synthetic, n_train, fold) -> FoldResult:
    S = forest.predict_survival(test.X)
    rep = evaluate(S, forest.predict(test.X), forest.event_times_, test.time, test.status,
                   G, tau)
    km_curve = pec([km] * test.n_records, test.time, test.status, G, rep.pec.times)
    return FoldResult(fold=fold, n_train=n_train, n_test=test.n_records, c_index=rep.c_index,
                      ibs=rep.ibs, tau=rep.tau, n_dropped_weight_zero=rep.n_dropped_weight_zero,
                      synthetic_count=synthetic, pec_t=rep.pec.times.tolist(),
                      pec_e=rep.pec.errors.tolist(), km_e=km_curve.errors.tolist())


def _run_fold(data: Dataset, folds, f: int, cfg: ExperimentConfig):
    train = data.subset(folds.train_indices(f))
    test = data.subset(folds.test_indices(f))
    G = censoring_survival(train.time, train.status)
    km = kaplan_meier(train.time, train.status)
    tau = float(np.percentile(test.time, cfg.tau_quantile))
    fseed = derive_seed(cfg.seed, f)
    rsf = grow_forest(train, cfg.trees, cfg.max_features, cfg.min_deaths, fseed, 1)
    out = {"rsf": _score(rsf, test, G, tau, km, 0, train.n_records, f)}
    logger.info("fold %d rsf C=%.2f IBS=%.4f", f, out["rsf"].c_index, out["rsf"].ibs)
    if cfg.balance == "smote":
        completed = train.with_X(rsf.imputed_X_)
        # a small training fold may hold fewer minority records than k + 1
        k = min(cfg.k, min(train.class_counts()) - 1)
        if k < 1:
            raise BalancingError(f"fold {f}: minority class has fewer than 2 records")
        if k < cfg.k:
            logger.warning("fold %d: k_neighbors reduced from %d to %d", f, cfg.k, k)
        bal = balance_dataset(completed, cfg.smote(derive_seed(cfg.seed, f, 1), k))
        brsf = grow_forest(bal.data, cfg.trees, cfg.max_features, cfg.min_deaths, fseed, 1)
        out["brsf"] = _score(brsf, test, G, tau, km, bal.synthetic_count,
                             bal.data.n_records, f)
        out["brsf"].k_neighbors = k
        logger.info("fold %d brsf C=%.2f IBS=%.4f", f, out["brsf"].c_index, out["brsf"].ibs)
    return out


def cv_evaluate(cfg: ExperimentConfig, data: Dataset | None = None) -> CVResult:
    """K-fold comparison of RSF and, when ``cfg.balance == "smote"``, BRSF.

    Per fold: an RSF grows on the raw training fold with adaptive imputation;
    its summary imputation completes the training fold, which is balanced
    (training fold only) and used to grow the BRSF. Both models predict the
    untouched test fold; IPCW weights come from the training fold's censoring
    distribution. Every random stream derives from ``cfg.seed`` and the fold
    index, so results do not depend on ``cfg.n_jobs``.
    """
    data = cfg.load() if data is None else data
    folds, redraws, fold_seed = assign_folds(data, cfg.folds, cfg.seed)
    per_fold = Parallel(n_jobs=cfg.n_jobs, prefer="threads")(
        delayed(_run_fold)(data, folds, f, cfg) for f in range(cfg.folds))
    models = {name: ModelResult(name, [res[name] for res in per_fold]) for name in per_fold[0]}
    return CVResult(cfg, models, redraws, fold_seed)


def write_cv_outputs(result: CVResult, out_dir) -> None:
    """metrics.json, folds.csv and one PEC CSV per model and fold."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(result.to_json())
    with open(out / "folds.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["model", "fold", "n_train", "n_test", "c_index", "ibs", "tau",
                    "n_dropped_weight_zero", "synthetic_count", "k_neighbors"])
        for name, m in result.models.items():
            for fr in m.folds:
                w.writerow([name, fr.fold, fr.n_train, fr.n_test, repr(fr.c_index),
                            repr(fr.ibs), repr(fr.tau), fr.n_dropped_weight_zero,
                            fr.synthetic_count, fr.k_neighbors])
    for name, m in result.models.items():
        for fr in m.folds:
            with open(out / f"pec_{name}_fold{fr.fold}.csv", "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "model_error", "km_reference_error"])
                for row in zip(fr.pec_t, fr.pec_e, fr.km_e):
                    w.writerow([repr(float(v)) for v in row])
