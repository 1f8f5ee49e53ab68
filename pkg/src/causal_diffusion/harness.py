"""Benchmark harness: train both samplers on a built-in SCM and score them.

Protocol per seed: draw a training set, z-score the observed columns, fit
the parent-conditioned sampler (dcm) and the backdoor-adjusted sampler
(bdcm) once each, then for every intervened value generate samples from
both and compare the outcome column against fresh ground-truth draws from
the mutilated SCM (mapped into the same normalized space) via MMD.
Intervened values are drawn once per experiment from a uniform range and
shared by both methods.  They are raw values of the cause variable; the
harness converts them into the normalized space the models are trained in
(clamping the cause column) and performs the ground-truth surgery in raw
space.

All randomness is derived from ``base_seed`` through named sub-streams, so
identical configs reproduce identical output files byte for byte.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

import numpy as np

from .diffusion import (
    TrainConfig,
    TrainedCausalModel,
    make_schedule,
    sample_bdcm,
    sample_dcm,
    train_bdcm,
    train_dcm,
    with_query,
)
from .metrics import KernelSpec, mmd
from .scm import (
    DEFAULT_QUERY,
    Intervention,
    SCM_NAMES,
    builtin_scm,
    normalize,
    sample_interventional,
    sample_observational,
    to_normalized,
)

METHODS = ("dcm", "bdcm")

# sub-stream tags for seed derivation; training and generation streams are
# method-independent so the two methods run against common random numbers
_TAG_DATA, _TAG_TRAIN, _TAG_VALUES, _TAG_GEN, _TAG_TRUTH = range(5)


def derive_seed(*parts: int) -> int:
    """Deterministic sub-seed from a tuple of small integers."""
    return int(np.random.SeedSequence(tuple(int(p) for p in parts)).generate_state(1)[0])


@dataclass(frozen=True)
class ExperimentConfig:
    scm_name: str
    cause: int | None = None
    outcome: int | None = None
    n_train: int = 1000
    n_generate: int = 500
    n_values: int = 10
    value_low: float = -3.0
    value_high: float = 3.0
    n_seeds: int = 5
    base_seed: int = 0
    oracle_n: int = 500
    train: TrainConfig = field(default_factory=TrainConfig)
    kernel: KernelSpec = field(default_factory=KernelSpec)
    out_dir: str | None = None

    def __post_init__(self):
        if self.scm_name not in SCM_NAMES:
            raise ValueError(f"unknown SCM {self.scm_name!r}; choose one of {SCM_NAMES}")
        cause, outcome = DEFAULT_QUERY[self.scm_name]
        if self.cause is None:
            object.__setattr__(self, "cause", cause)
        if self.outcome is None:
            object.__setattr__(self, "outcome", outcome)
        if min(self.n_train, self.n_generate, self.n_values, self.n_seeds, self.oracle_n) < 1:
            raise ValueError("all counts must be positive")
        if not self.value_low < self.value_high:
            raise ValueError("value range must satisfy low < high")
        if self.cause == self.outcome:
            raise ValueError("cause and outcome must differ")


@dataclass(frozen=True)
class ResultRow:
    """Aggregate MMD for one (example, method); raw entries are
    (seed index, value index, intervened value, mmd)."""

    method: str
    example: str
    mmd_mean: float
    mmd_std: float
    raw: tuple[tuple[int, int, float, float], ...]


def intervened_values(config: ExperimentConfig) -> np.ndarray:
    """The experiment's intervened values (raw cause values), drawn once."""
    rng = np.random.default_rng(derive_seed(config.base_seed, _TAG_VALUES))
    return rng.uniform(config.value_low, config.value_high, config.n_values)


def train_models(config: ExperimentConfig, seed_idx: int):
    """Training data and both fitted samplers for one seed."""
    scm = builtin_scm(config.scm_name)
    sched = make_schedule(config.train.T)
    raw = sample_observational(scm, config.n_train, derive_seed(config.base_seed, _TAG_DATA, seed_idx))
    data = normalize(raw)
    train = replace(config.train, seed=derive_seed(config.base_seed, _TAG_TRAIN, seed_idx))
    dcm_model = train_dcm(data, scm.dag, sched, train)
    bdcm_model = train_bdcm(
        data, scm.dag, Intervention(config.cause, 0.0), sched, train
    )
    return data, dcm_model, bdcm_model


def generate_samples(
    config: ExperimentConfig,
    model: TrainedCausalModel,
    method: str,
    gamma: float,
    seed_idx: int,
    value_idx: int,
):
    """Outcome-column samples from one method under do(cause = gamma).

    `gamma` is a raw cause value; the models clamp its normalized image.
    """
    gamma_model = to_normalized(model.normalization, config.cause, gamma)
    seed = derive_seed(config.base_seed, _TAG_GEN, seed_idx, value_idx)
    if method == "dcm":
        matrix = sample_dcm(model, Intervention(config.cause, gamma_model), config.n_generate, seed)
    else:
        matrix = sample_bdcm(with_query(model, gamma_model), config.n_generate, seed)
    return matrix.column(config.outcome)


def ground_truth(config: ExperimentConfig, normalization, gamma: float, seed_idx: int, value_idx: int, n: int | None = None):
    """Normalized oracle draws of the outcome under do(cause = gamma).

    `gamma` is a raw cause value; the outcome draws come back in the
    normalized space recorded by `normalization`.
    """
    scm = builtin_scm(config.scm_name)
    seed = derive_seed(config.base_seed, _TAG_TRUTH, seed_idx, value_idx)
    draws = sample_interventional(
        scm, Intervention(config.cause, gamma), config.outcome,
        n if n is not None else config.oracle_n, seed,
    )
    return to_normalized(normalization, config.outcome, draws)


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Full protocol for one example; writes raw and summary files when
    ``config.out_dir`` is set."""
    values = intervened_values(config)
    raw_scores = {method: [] for method in METHODS}
    for seed_idx in range(config.n_seeds):
        try:
            data, dcm_model, bdcm_model = train_models(config, seed_idx)
        except Exception as exc:
            raise RuntimeError(
                f"{config.scm_name}: training failed at seed {seed_idx}: {exc}"
            ) from exc
        per_seed = {method: [] for method in METHODS}
        for value_idx, gamma in enumerate(values):
            truth = ground_truth(config, data.normalization, gamma, seed_idx, value_idx)
            for method, model in (("dcm", dcm_model), ("bdcm", bdcm_model)):
                try:
                    generated = generate_samples(config, model, method, gamma, seed_idx, value_idx)
                    score = mmd(generated, truth, config.kernel)
                except Exception as exc:
                    raise RuntimeError(
                        f"{config.scm_name}: {method} failed at seed {seed_idx}, "
                        f"value {value_idx} (gamma={gamma!r}): {exc}"
                    ) from exc
                raw_scores[method].append((seed_idx, value_idx, float(gamma), score))
                per_seed[method].append((value_idx, float(gamma), score))
        if config.out_dir is not None:
            seed_dir = os.path.join(config.out_dir, config.scm_name, f"seed{seed_idx}")
            os.makedirs(seed_dir, exist_ok=True)
            for method in METHODS:
                _write_csv(
                    os.path.join(seed_dir, f"mmd_{method}.csv"),
                    "value_index,gamma,mmd",
                    per_seed[method],
                )
    rows = [
        ResultRow(
            method=method,
            example=config.scm_name,
            mmd_mean=float(np.mean([s[3] for s in raw_scores[method]])),
            mmd_std=_sample_std([s[3] for s in raw_scores[method]]),
            raw=tuple(raw_scores[method]),
        )
        for method in METHODS
    ]
    if config.out_dir is not None:
        scm_dir = os.path.join(config.out_dir, config.scm_name)
        os.makedirs(scm_dir, exist_ok=True)
        _write_csv(
            os.path.join(scm_dir, "values.csv"),
            "value_index,gamma",
            list(enumerate(values)),
        )
        write_summary(rows, os.path.join(config.out_dir, "summary.csv"))
    return rows


def _sample_std(values) -> float:
    """ddof=1 standard deviation, 0.0 for a single value."""
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def write_summary(rows, path) -> None:
    """Summary table: one line per (example, method) with mean and std."""
    entries = [(r.example, r.method, r.mmd_mean, r.mmd_std, len(r.raw)) for r in rows]
    _write_csv(path, "example,method,mmd_mean,mmd_std,n", entries)


def _write_csv(path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _format_cell(v) -> str:
    # np.float64 subclasses float; route both through the plain-float repr
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_histogram(samples_method, samples_truth, bins: int, path) -> None:
    """Histogram table with shared binning over the pooled range.

    Columns: bin left edge, method count, truth count.
    """
    a = np.asarray(samples_method, dtype=np.float64).ravel()
    b = np.asarray(samples_truth, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("histogram inputs must be non-empty")
    if bins < 1:
        raise ValueError("need at least one bin")
    lo = float(min(a.min(), b.min()))
    hi = float(max(a.max(), b.max()))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    counts_a, _ = np.histogram(a, edges)
    counts_b, _ = np.histogram(b, edges)
    rows = list(zip((float(e) for e in edges[:-1]), counts_a, counts_b))
    _write_csv(path, "bin_left,method_count,truth_count", rows)


def histogram_report(config: ExperimentConfig, method: str, value: float, bins: int, path, seed_idx: int = 0) -> None:
    """Train `method` on one seed and emit generated-vs-truth histogram data."""
    _check_method(method)
    data, dcm_model, bdcm_model = train_models(config, seed_idx)
    model = dcm_model if method == "dcm" else bdcm_model
    generated = generate_samples(config, model, method, value, seed_idx, value_idx=0)
    truth = ground_truth(config, data.normalization, value, seed_idx, value_idx=0)
    emit_histogram(generated, truth, bins, path)


def ate_report(config: ExperimentConfig, method: str, x_value: float, seed_idx: int = 0, oracle_n: int = 100_000):
    """(method ATE, oracle ATE) for do(cause = x_value) vs do(cause = 0).

    Both method arms share one sampling seed, as do both oracle arms, so
    x_value = 0 returns exactly zero.  Values are raw cause values; the
    returned ATEs are in the normalized outcome space.
    """
    _check_method(method)
    data, dcm_model, bdcm_model = train_models(config, seed_idx)
    model = dcm_model if method == "dcm" else bdcm_model
    treated = generate_samples(config, model, method, x_value, seed_idx, value_idx=0)
    control = generate_samples(config, model, method, 0.0, seed_idx, value_idx=0)
    method_ate = float(np.mean(treated) - np.mean(control))
    truth_treated = ground_truth(config, data.normalization, x_value, seed_idx, 0, n=oracle_n)
    truth_control = ground_truth(config, data.normalization, 0.0, seed_idx, 0, n=oracle_n)
    oracle_ate = float(np.mean(truth_treated) - np.mean(truth_control))
    return method_ate, oracle_ate


def _check_method(method: str) -> None:
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose one of {METHODS}")
