"""Experimental protocol: preprocessing, stratified folds, per-fold
fitting and scoring, fold-pooled calibration tests, and a synthetic
cohort generator for property validation.

Preprocessing order is fixed: drop features missing over 25% of their
values or carrying a single value, one-hot encode nominal features, keep
features passing a univariate Cox filter at p <= 0.10, mean-impute, then
standardize.  Every statistic is estimated on the training fold only and
applied unchanged to the validation fold.  Discrimination metrics are
averaged over folds; calibration tests pool the predicted curves from all
folds into a single test, never averaging p-values.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import calibration as cal
from .aft import fit_aft_weibull, predict_curve_aft
from .core import FitError, Instance, SurvivalDataset
from .cox import fit_cox, univariate_cox_pvalue
from .curves import extend_linear, mean_survival, median_survival, survival_at
from .discrimination import (
    Prediction,
    PredictionSet,
    concordance,
    default_eta,
    l1_hinge,
    l1_log,
    l1_margin,
    l1_uncensored,
)
from .km import KaplanMeierModel, fit_censoring_km, fit_km
from .mtlr import default_grid_size, fit_mtlr, make_grid

__all__ = [
    "PreprocessReport",
    "FoldAssignment",
    "ExperimentConfig",
    "MetricReport",
    "OneCalEntry",
    "CohortConfig",
    "SimulatedCohort",
    "preprocess",
    "make_folds",
    "fold_indices",
    "run_experiment",
    "simulate_cohort",
    "simulate_cohort_latent",
    "MODEL_NAMES",
    "ALL_METRICS",
]

MODEL_NAMES = ("km", "cox-kp", "aft-weibull", "mtlr")
ALL_METRICS = (
    "concordance",
    "ibs",
    "l1-uncensored",
    "l1-hinge",
    "l1-margin",
    "l1-log-uncensored",
    "l1-log-margin",
    "one-calibration",
    "d-calibration",
)
_FOLD_METRICS = ("concordance", "ibs", "l1-uncensored", "l1-hinge", "l1-margin",
                 "l1-log-uncensored", "l1-log-margin")


# ---------------------------------------------------------------------------
# preprocessing

@dataclass(frozen=True)
class PreprocessReport:
    dropped_missing: tuple            # >25% missing or single-valued
    encoded: dict                     # original name -> tuple of indicator names
    selected: tuple                   # names surviving the univariate Cox filter
    p_values: dict                    # candidate name -> filter p-value
    imputation_means: dict            # selected name -> training mean
    standardization: dict             # selected name -> (mean, sd)


def _column(d: SurvivalDataset, j: int) -> list:
    return [inst.features[j] for inst in d.instances]


def _encode_columns(train: SurvivalDataset, validate: SurvivalDataset, keep: list):
    """One-hot encode nominal kept columns using training levels only."""
    encoded = {}
    new_names = []
    train_cols, val_cols = [], []
    for j in keep:
        name = train.feature_names[j]
        col_t = _column(train, j)
        col_v = _column(validate, j)
        is_nominal = any(isinstance(v, str) for v in col_t if v is not None)
        if not is_nominal:
            new_names.append(name)
            train_cols.append([None if v is None else float(v) for v in col_t])
            val_cols.append([
                None if v is None or isinstance(v, str) else float(v) for v in col_v
            ])
            continue
        levels = sorted({str(v) for v in col_t if v is not None})
        encoded[name] = tuple(f"{name}={lvl}" for lvl in levels)
        for lvl in levels:
            new_names.append(f"{name}={lvl}")
            train_cols.append([None if v is None else float(str(v) == lvl) for v in col_t])
            val_cols.append([None if v is None else float(str(v) == lvl) for v in col_v])
    return new_names, train_cols, val_cols, encoded


def _rebuild(d: SurvivalDataset, columns, names) -> SurvivalDataset:
    instances = []
    for i, inst in enumerate(d.instances):
        instances.append(Instance(tuple(col[i] for col in columns), inst.time, inst.event))
    return SurvivalDataset(tuple(instances), tuple(names), d.time_unit)


def preprocess(train: SurvivalDataset, validate: SurvivalDataset,
               p_cut: float = 0.10) -> tuple:
    """Fit the preprocessing pipeline on the training fold and apply it to
    both folds; returns (train', validate', report).

    Raises when no feature survives the filter (consider relaxing p_cut).
    """
    n_train = len(train)
    dropped = []
    keep = []
    for j, name in enumerate(train.feature_names):
        col = _column(train, j)
        missing = sum(1 for v in col if v is None)
        present = [v for v in col if v is not None]
        if n_train == 0 or missing / n_train > 0.25 or len(set(map(str, present))) <= 1:
            dropped.append(name)
        else:
            keep.append(j)

    names, train_cols, val_cols, encoded = _encode_columns(train, validate, keep)

    candidate = _rebuild(train, train_cols, names)
    p_values = {}
    selected_idx = []
    for j, name in enumerate(names):
        p = univariate_cox_pvalue(candidate, j)
        p_values[name] = p
        if p <= p_cut:
            selected_idx.append(j)
    if not selected_idx:
        raise FitError(
            f"no feature passed the univariate Cox filter at p <= {p_cut}; "
            "relax p_cut or inspect the data"
        )

    selected_names = tuple(names[j] for j in selected_idx)
    means, scales = {}, {}
    out_train, out_val = [], []
    for j in selected_idx:
        name = names[j]
        col_t = np.array([np.nan if v is None else v for v in train_cols[j]], dtype=float)
        col_v = np.array([np.nan if v is None else v for v in val_cols[j]], dtype=float)
        mean_impute = float(np.nanmean(col_t))
        col_t = np.where(np.isnan(col_t), mean_impute, col_t)
        col_v = np.where(np.isnan(col_v), mean_impute, col_v)
        mu = float(col_t.mean())
        sd = float(col_t.std())
        if sd == 0.0:
            sd = 1.0
        means[name] = mean_impute
        scales[name] = (mu, sd)
        out_train.append((col_t - mu) / sd)
        out_val.append((col_v - mu) / sd)

    report = PreprocessReport(
        dropped_missing=tuple(dropped),
        encoded=encoded,
        selected=selected_names,
        p_values=p_values,
        imputation_means=means,
        standardization=scales,
    )
    return (
        _rebuild(train, out_train, selected_names),
        _rebuild(validate, out_val, selected_names),
        report,
    )


# ---------------------------------------------------------------------------
# folds

@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray
    k: int

    def fold(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == j)

    def split(self, d: SurvivalDataset, j: int):
        val_mask = self.fold_of == j
        return d.subset(~val_mask), d.subset(val_mask)


def fold_indices(times, events, k: int) -> np.ndarray:
    """Deal instances to k folds: censored and uncensored groups are each
    sorted by time (ties by input order) and dealt round-robin, so every
    fold sees roughly the same time and censoring distribution."""
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    fold_of = np.empty(times.size, dtype=int)
    for group_mask in (events, ~events):
        idx = np.flatnonzero(group_mask)
        ordered = idx[np.argsort(times[idx], kind="stable")]
        fold_of[ordered] = np.arange(ordered.size) % k
    return fold_of


def make_folds(d: SurvivalDataset, k: int = 5, seed=None) -> FoldAssignment:
    """Stratified fold assignment; deterministic given the dataset order
    (`seed` is accepted for interface symmetry but the dealing rule does
    not need randomness)."""
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if len(d) < k:
        raise ValueError(f"cannot split {len(d)} instances into {k} folds")
    return FoldAssignment(fold_indices(d.times, d.events, k), k)


# ---------------------------------------------------------------------------
# experiment

@dataclass(frozen=True)
class ExperimentConfig:
    model: str = "km"
    metrics: tuple = ALL_METRICS
    percentiles: tuple = (10, 25, 50, 75, 90)
    bins: int = 10
    folds: int = 5
    seed: int = 0
    mtlr_c_grid: tuple = (0.01, 0.1, 1.0, 10.0, 100.0)
    percentile_basis: str = "all"     # "all" pooled times or "deaths" only
    p_cut: float = 0.10
    risk: str = "median"
    jobs: int = 1

    def __post_init__(self):
        if self.model not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODEL_NAMES}")
        unknown = set(self.metrics) - set(ALL_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics {sorted(unknown)}; choose from {ALL_METRICS}")
        if any(not 0 < p < 100 for p in self.percentiles):
            raise ValueError("percentiles must lie strictly between 0 and 100")
        if self.percentile_basis not in ("all", "deaths"):
            raise ValueError("percentile_basis must be 'all' or 'deaths'")


@dataclass(frozen=True)
class OneCalEntry:
    percentile: float
    tstar: float
    result: "cal.TestResult | None"
    error: str = ""


@dataclass
class MetricReport:
    model: str
    fold_scores: dict                  # metric -> list of per-fold values
    means: dict
    sds: dict
    one_calibration: list              # OneCalEntry per percentile
    dcal: "cal.TestResult | None"
    dcal_histogram: "cal.DCalHistogram | None"
    tau: float
    tstars: tuple
    predictions: list                  # (instance_index, fold, Prediction)
    fold_t0: list


@dataclass(frozen=True)
class _FoldOutput:
    raw_val: SurvivalDataset
    preds: PredictionSet
    train_km_ext: object
    g_hat: object
    t0_km: float
    eta: float
    val_indices: np.ndarray


def _fit_model(name: str, train: SurvivalDataset, cfg: ExperimentConfig):
    """Returns predict(instance) -> SurvivalCurve for the trained model."""
    if name == "km":
        return KaplanMeierModel.fit(train).predict_curve
    if name == "cox-kp":
        return fit_cox(train).predict_curve
    if name == "aft-weibull":
        model = fit_aft_weibull(train)
        grid = make_grid(train, default_grid_size(len(train)))
        return lambda inst: predict_curve_aft(
            model, np.asarray(inst.features, dtype=float), grid
        )
    if name == "mtlr":
        grid = make_grid(train, default_grid_size(len(train)))
        model = fit_mtlr(train, grid, cfg.mtlr_c_grid)
        return model.predict_curve
    raise ValueError(f"unknown model {name!r}")


def _run_fold(d: SurvivalDataset, cfg: ExperimentConfig,
              assignment: FoldAssignment, fold: int) -> _FoldOutput:
    raw_train, raw_val = assignment.split(d, fold)
    needs_features = cfg.model != "km" and len(d.feature_names) > 0
    if needs_features:
        train, val, _ = preprocess(raw_train, raw_val, cfg.p_cut)
    else:
        train, val = raw_train, raw_val

    train_km_ext = extend_linear(fit_km(train).curve)
    t0_km = train_km_ext.zero_time
    g_hat = fit_censoring_km(train)
    eta = default_eta(train.times)

    predict = _fit_model(cfg.model, train, cfg)
    preds = []
    for inst in val.instances:
        curve = extend_linear(predict(inst), t0_km)
        med = median_survival(curve, t0_km)
        score = -med if cfg.risk == "median" else -mean_survival(curve)
        preds.append(Prediction(score, med, curve))
    return _FoldOutput(
        raw_val, PredictionSet(preds), train_km_ext, g_hat, t0_km, eta,
        assignment.fold(fold),
    )


def run_experiment(d: SurvivalDataset, cfg: ExperimentConfig) -> MetricReport:
    """Cross-validated evaluation of one model on one dataset.

    Per fold: preprocess, fit (internal CV for hyperparameters where the
    model has them), predict and extend validation curves, score the
    discrimination metrics.  Calibration percentiles and D-calibration run
    once on the pooled curves of all folds.  Fit failures propagate with
    the fold index attached.
    """
    assignment = make_folds(d, cfg.folds, cfg.seed)
    tau = float(d.times.max())
    times_basis = d.times if cfg.percentile_basis == "all" else d.times[d.events]
    if times_basis.size == 0:
        raise ValueError("no times available for the calibration percentiles")
    tstars = tuple(float(np.percentile(times_basis, p)) for p in cfg.percentiles)

    def run(fold):
        try:
            return _run_fold(d, cfg, assignment, fold)
        except FitError as exc:
            raise FitError(f"fold {fold}: {exc}") from exc
        except ValueError as exc:
            raise ValueError(f"fold {fold}: {exc}") from exc
        except Exception as exc:
            raise RuntimeError(f"fold {fold}: {exc}") from exc

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            fold_results = list(pool.map(run, range(cfg.folds)))
    else:
        fold_results = [run(fold) for fold in range(cfg.folds)]

    fold_scores = {m: [] for m in _FOLD_METRICS if m in cfg.metrics}
    for out in fold_results:
        val, preds = out.raw_val, out.preds
        v_u = val.subset(val.events)
        preds_u = preds.subset(val.events)
        for metric in fold_scores:
            if metric == "concordance":
                value = concordance(val, preds)
            elif metric == "ibs":
                value = cal.integrated_brier(val, preds.curves, tau, out.g_hat)
            elif metric == "l1-uncensored":
                value = l1_uncensored(v_u, preds_u)
            elif metric == "l1-hinge":
                value = l1_hinge(val, preds)
            elif metric == "l1-margin":
                value = l1_margin(val, preds, out.train_km_ext)
            elif metric == "l1-log-uncensored":
                value = l1_log(v_u, preds_u, "uncensored", out.eta)
            else:
                value = l1_log(val, preds, "margin", out.eta, out.train_km_ext)
            fold_scores[metric].append(float(value))

    means = {m: float(np.mean(vs)) for m, vs in fold_scores.items()}
    sds = {m: float(np.std(vs)) for m, vs in fold_scores.items()}

    pooled = []  # (instance_index, fold, Prediction, raw Instance)
    for fold, out in enumerate(fold_results):
        for local_i, global_i in enumerate(out.val_indices):
            pooled.append(
                (int(global_i), fold, out.preds[local_i], out.raw_val.instances[local_i])
            )
    pooled_dataset = SurvivalDataset(
        tuple(item[3] for item in pooled), d.feature_names, d.time_unit
    )
    pooled_curves = [item[2].curve for item in pooled]

    one_cal_entries = []
    if "one-calibration" in cfg.metrics:
        for pct, tstar in zip(cfg.percentiles, tstars):
            probs = np.array([survival_at(c, tstar) for c in pooled_curves])
            try:
                result = cal.one_calibration_dn(pooled_dataset, probs, tstar, cfg.bins)
                one_cal_entries.append(OneCalEntry(pct, tstar, result))
            except ValueError as exc:
                one_cal_entries.append(OneCalEntry(pct, tstar, None, str(exc)))

    dcal_result, dcal_hist = None, None
    if "d-calibration" in cfg.metrics:
        dcal_hist = cal.dcal_histogram(pooled_dataset, pooled_curves, cfg.bins)
        dcal_result = cal.dcal_test(dcal_hist)

    return MetricReport(
        model=cfg.model,
        fold_scores=fold_scores,
        means=means,
        sds=sds,
        one_calibration=one_cal_entries,
        dcal=dcal_result,
        dcal_histogram=dcal_hist,
        tau=tau,
        tstars=tstars,
        predictions=[(idx, fold, pred) for idx, fold, pred, _ in pooled],
        fold_t0=[out.t0_km for out in fold_results],
    )


# ---------------------------------------------------------------------------
# synthetic cohorts

@dataclass(frozen=True)
class CohortConfig:
    """Generator settings for synthetic right-censored cohorts.

    Families: "exponential-ph" and "weibull-ph" draw deaths from a
    proportional-hazards model with hazard multiplier exp(beta . x);
    "individual-weibull" gives every instance its own Weibull shape via
    ``shape_beta``.  Censoring is exponential with the given rate
    (rate 0 disables censoring entirely).
    """

    family: str = "exponential-ph"
    n_features: int = 5
    beta: tuple = ()
    baseline_scale: float = 10.0
    baseline_shape: float = 1.0
    shape_beta: tuple = ()
    censor_rate: float = 0.0

    def __post_init__(self):
        if self.family not in ("exponential-ph", "weibull-ph", "individual-weibull"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.baseline_scale <= 0 or self.baseline_shape <= 0:
            raise ValueError("baseline scale and shape must be positive")
        if self.censor_rate < 0:
            raise ValueError("censor rate must be non-negative")
        if len(self.beta) > self.n_features or len(self.shape_beta) > self.n_features:
            raise ValueError("more coefficients than features")


@dataclass(frozen=True)
class SimulatedCohort:
    """A drawn cohort plus the latent truths the observation step hides."""

    dataset: SurvivalDataset
    x: np.ndarray
    latent_death: np.ndarray
    latent_censor: np.ndarray
    scales: np.ndarray
    shapes: np.ndarray

    def true_survival(self, i: int, t):
        """True S(t | x_i) of the generator for instance i."""
        t = np.asarray(t, dtype=float)
        return np.exp(-((t / self.scales[i]) ** self.shapes[i]))


def _padded(coeffs, k: int) -> np.ndarray:
    out = np.zeros(k)
    out[: len(coeffs)] = coeffs
    return out


def simulate_cohort_latent(config: CohortConfig, n: int, seed: int) -> SimulatedCohort:
    """Draw a cohort and keep the latent death/censor times and the true
    per-instance Weibull parameters for oracle tests."""
    if n < 1:
        raise ValueError(f"cohort size must be positive, got {n}")
    rng = np.random.default_rng(seed)
    k = config.n_features
    x = rng.standard_normal((n, k))
    lin = x @ _padded(config.beta, k)

    if config.family == "exponential-ph":
        shapes = np.ones(n)
        scales = config.baseline_scale * np.exp(-lin)
    elif config.family == "weibull-ph":
        shapes = np.full(n, config.baseline_shape)
        scales = config.baseline_scale * np.exp(-lin / config.baseline_shape)
    else:  # individual-weibull
        shapes = config.baseline_shape * np.exp(x @ _padded(config.shape_beta, k))
        scales = config.baseline_scale * np.exp(-lin)

    death = scales * rng.weibull(shapes, size=n)
    if config.censor_rate > 0:
        censor = rng.exponential(1.0 / config.censor_rate, size=n)
    else:
        censor = np.full(n, np.inf)
    observed = np.minimum(death, censor)
    events = death <= censor

    dataset = SurvivalDataset.from_arrays(x, observed, events)
    return SimulatedCohort(dataset, x, death, censor, scales, shapes)


def simulate_cohort(config: CohortConfig, n: int, seed: int) -> SurvivalDataset:
    """Draw a synthetic right-censored cohort; see `simulate_cohort_latent`
    to retain the latent truths."""
    return simulate_cohort_latent(config, n, seed).dataset
