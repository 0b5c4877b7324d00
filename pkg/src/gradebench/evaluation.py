"""Metrics, the seeded repeated-split runner, and report shaping.

Every run draws `iterations` fresh uniform train/test splits at answer
level from a portable deterministic stream, fits each requested
regressor on the training rows, scores the held-out rows with RMSE
(lower is better) and Pearson correlation (higher is better), and
aggregates arithmetic means. Fixing the seed fixes every split, so the
emitted report is byte-identical across runs and platforms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import (
    ConstantInput,
    EmptyInput,
    GradebenchError,
    LengthMismatch,
    TooFewRows,
)
from .features import FeatureRow, ScoreNormalization
from .regression import (
    REGRESSOR_KINDS,
    fit_isotonic,
    fit_linear,
    predict,
)

REPORT_SCHEMA = "experiment-report/1"

# slack for the projection-dominance check, which is exact in real arithmetic
DOMINANCE_TOLERANCE = 1e-12

_MASK64 = (1 << 64) - 1
_GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit avalanche mix."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """SplitMix64 generator (Steele, Lea & Flood, 2014).

    State advances by a fixed odd constant and each output is a
    bijective mix of the state. Pure 64-bit integer arithmetic, so the
    stream is reproducible on any platform and easy to port to other
    languages.
    """

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN_GAMMA) & _MASK64
        return _mix64(self._state)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n), unbiased via rejection sampling."""
        if n <= 0:
            raise ValueError(f"need n > 0, got {n}")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            u = self.next_u64()
            if u < limit:
                return u % n


def iteration_rng(seed: int, iteration: int) -> SplitMix64:
    """Decorrelated per-iteration stream: the index is folded through the
    mix function so consecutive iterations start far apart in state space."""
    return SplitMix64(_mix64((seed + iteration) & _MASK64))


def train_size_for(n: int, train_fraction: float) -> int:
    """floor(train_fraction * n), computed in exact decimal arithmetic so
    e.g. a fraction of 0.7 with n=10 gives 7 on every platform."""
    return int(Fraction(str(train_fraction)) * n)


def split_indices(n: int, train_size: int, rng: SplitMix64) -> tuple[list[int], list[int]]:
    """Fisher-Yates shuffle of range(n); first train_size indices train,
    the rest test. Both halves are returned sorted."""
    order = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    return sorted(order[:train_size]), sorted(order[train_size:])


@dataclass(frozen=True)
class SplitSpec:
    """Repeated-split schedule: fraction of rows trained on, iteration
    count, and the 64-bit seed that fixes every split."""

    train_fraction: float = 0.7
    iterations: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction!r}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")


@dataclass(frozen=True)
class MetricPair:
    """Held-out RMSE and Pearson correlation for one iteration; pearson
    is None (flagged) when either side was constant."""

    rmse: float
    pearson: float | None


@dataclass(frozen=True)
class IterationMetrics:
    iteration: int
    metrics: MetricPair
    train_rmse: float
    baseline_train_rmse: float


@dataclass(frozen=True)
class CellReport:
    """All iterations of one (provider, regressor) pairing."""

    provider: str
    regressor: str
    iterations: tuple[IterationMetrics, ...]
    skipped: tuple[tuple[int, str], ...]
    mean_rmse: float | None
    mean_pearson: float | None
    mean_train_rmse: float | None
    mean_baseline_train_rmse: float | None
    pearson_flagged: int
    train_dominance_ok: bool


@dataclass(frozen=True)
class ExperimentReport:
    provider: str
    spec: SplitSpec
    ridge_lambda: float
    n_rows: int
    n_flagged_rows: int
    cells: tuple[CellReport, ...]
    config: dict

    @property
    def train_dominance_ok(self) -> bool:
        """Projection property: isotonic never loses to the constant-mean
        predictor on training data, in any iteration."""
        return all(c.train_dominance_ok for c in self.cells if c.regressor == "isotonic")


def rmse(pred: Sequence[float], actual: Sequence[float]) -> float:
    """sqrt(mean((pred - actual)^2)).

    Raises:
        LengthMismatch: inputs differ in length.
        EmptyInput: inputs are empty.
    """
    if len(pred) != len(actual):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(actual)} actuals")
    if not pred:
        raise EmptyInput("rmse of empty inputs")
    return math.sqrt(math.fsum((p - a) ** 2 for p, a in zip(pred, actual)) / len(pred))


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    """Sample correlation, clamped to [-1, 1].

    Raises:
        LengthMismatch: inputs differ in length.
        EmptyInput: inputs are empty.
        ConstantInput: fewer than 2 points, or either side is constant.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} values")
    if not a:
        raise EmptyInput("pearson of empty inputs")
    if len(a) < 2 or min(a) == max(a) or min(b) == max(b):
        raise ConstantInput("pearson undefined for constant input")
    n = len(a)
    abar = math.fsum(a) / n
    bbar = math.fsum(b) / n
    num = math.fsum((x - abar) * (y - bbar) for x, y in zip(a, b))
    den = math.sqrt(math.fsum((x - abar) ** 2 for x in a)) * math.sqrt(
        math.fsum((y - bbar) ** 2 for y in b)
    )
    if den == 0.0:
        raise ConstantInput("pearson undefined: zero variance after rounding")
    return max(-1.0, min(1.0, num / den))


def _mean(values: Sequence[float]) -> float | None:
    if not values:
        return None
    return math.fsum(values) / len(values)


def fit_regressor(kind: str, xs: Sequence[float], ys: Sequence[float], ridge_lambda: float):
    """Fit one regressor kind on (x, y) pairs; isotonic uses unit weights."""
    if kind == "isotonic":
        return fit_isotonic([(x, y, 1.0) for x, y in zip(xs, ys)])
    if kind == "linear":
        return fit_linear(list(zip(xs, ys)), penalty=0.0)
    if kind == "ridge":
        return fit_linear(list(zip(xs, ys)), penalty=ridge_lambda)
    raise ValueError(f"unknown regressor kind {kind!r}; expected one of {REGRESSOR_KINDS}")


def run_experiment(
    features: Sequence[FeatureRow],
    regressors: Sequence[str],
    spec: SplitSpec,
    ridge_lambda: float = 1.0,
    provider_name: str = "",
    config: dict | None = None,
) -> ExperimentReport:
    """Repeated-split evaluation of each regressor over the feature rows.

    Each iteration draws its split from iteration_rng(seed, i),
    normalizes raw similarities with min/max estimated on the training
    rows only (test scores clamp to [0, 1]), fits on the training rows,
    and scores the held-out rows. Per-iteration fit failures are
    recorded as skipped, never silently dropped.

    Raises:
        TooFewRows: fewer than 10 rows, or a split side would have < 2 rows.
        ValueError: unknown regressor kind.
    """
    for kind in regressors:
        if kind not in REGRESSOR_KINDS:
            raise ValueError(f"unknown regressor kind {kind!r}; expected one of {REGRESSOR_KINDS}")
    n = len(features)
    if n < 10:
        raise TooFewRows(f"need at least 10 feature rows, got {n}")
    train_size = train_size_for(n, spec.train_fraction)
    if train_size < 2 or n - train_size < 2:
        raise TooFewRows(
            f"split of {n} rows at fraction {spec.train_fraction} leaves "
            f"{train_size} train / {n - train_size} test; need >= 2 each"
        )

    raws = [row.similarity_raw for row in features]
    grades = [row.target_grade for row in features]

    per_cell: dict[str, list[IterationMetrics]] = {k: [] for k in regressors}
    skipped: dict[str, list[tuple[int, str]]] = {k: [] for k in regressors}

    for it in range(spec.iterations):
        rng = iteration_rng(spec.seed, it)
        train_idx, test_idx = split_indices(n, train_size, rng)
        norm = ScoreNormalization.from_scores([raws[i] for i in train_idx])
        x_train = [norm.apply(raws[i]) for i in train_idx]
        y_train = [grades[i] for i in train_idx]
        x_test = [norm.apply(raws[i]) for i in test_idx]
        y_test = [grades[i] for i in test_idx]
        baseline = math.fsum(y_train) / len(y_train)
        baseline_rmse = rmse([baseline] * len(y_train), y_train)

        for kind in regressors:
            try:
                model = fit_regressor(kind, x_train, y_train, ridge_lambda)
            except GradebenchError as exc:
                skipped[kind].append((it, str(exc)))
                continue
            predictions = [predict(model, x) for x in x_test]
            test_rmse = rmse(predictions, y_test)
            try:
                rho: float | None = pearson(predictions, y_test)
            except ConstantInput:
                rho = None
            train_predictions = [predict(model, x) for x in x_train]
            per_cell[kind].append(
                IterationMetrics(
                    iteration=it,
                    metrics=MetricPair(rmse=test_rmse, pearson=rho),
                    train_rmse=rmse(train_predictions, y_train),
                    baseline_train_rmse=baseline_rmse,
                )
            )

    cells = []
    for kind in regressors:
        iterations = tuple(per_cell[kind])
        pearsons = [m.metrics.pearson for m in iterations if m.metrics.pearson is not None]
        cells.append(
            CellReport(
                provider=provider_name,
                regressor=kind,
                iterations=iterations,
                skipped=tuple(skipped[kind]),
                mean_rmse=_mean([m.metrics.rmse for m in iterations]),
                mean_pearson=_mean(pearsons),
                mean_train_rmse=_mean([m.train_rmse for m in iterations]),
                mean_baseline_train_rmse=_mean([m.baseline_train_rmse for m in iterations]),
                pearson_flagged=sum(1 for m in iterations if m.metrics.pearson is None),
                train_dominance_ok=all(
                    m.train_rmse <= m.baseline_train_rmse + DOMINANCE_TOLERANCE
                    for m in iterations
                ),
            )
        )

    return ExperimentReport(
        provider=provider_name,
        spec=spec,
        ridge_lambda=ridge_lambda,
        n_rows=n,
        n_flagged_rows=sum(1 for row in features if row.flag is not None),
        cells=tuple(cells),
        config=dict(config or {}),
    )


def report_to_dict(report: ExperimentReport) -> dict:
    """JSON-ready document mirroring the one-provider-row results table."""
    return {
        "schema": REPORT_SCHEMA,
        "provider": report.provider,
        "seed": report.spec.seed,
        "iterations": report.spec.iterations,
        "train_fraction": report.spec.train_fraction,
        "ridge_lambda": report.ridge_lambda,
        "n_rows": report.n_rows,
        "n_flagged_rows": report.n_flagged_rows,
        "orientation": {"rmse": "lower is better", "pearson": "higher is better"},
        "train_dominance_ok": report.train_dominance_ok,
        "config": report.config,
        "cells": [
            {
                "provider": cell.provider,
                "regressor": cell.regressor,
                "mean_rmse": cell.mean_rmse,
                "mean_pearson": cell.mean_pearson,
                "mean_train_rmse": cell.mean_train_rmse,
                "mean_baseline_train_rmse": cell.mean_baseline_train_rmse,
                "pearson_flagged": cell.pearson_flagged,
                "train_dominance_ok": cell.train_dominance_ok,
                "skipped": [[it, reason] for it, reason in cell.skipped],
                "per_iteration": [
                    {
                        "iteration": m.iteration,
                        "rmse": m.metrics.rmse,
                        "pearson": m.metrics.pearson,
                        "train_rmse": m.train_rmse,
                        "baseline_train_rmse": m.baseline_train_rmse,
                    }
                    for m in cell.iterations
                ],
            }
            for cell in report.cells
        ],
    }


def report_to_json(report: ExperimentReport) -> str:
    """Deterministic serialization: sorted keys, fixed indentation,
    shortest round-trip float formatting."""
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def render_report_text(doc: dict) -> str:
    """Plain-text table: one provider row, regressor x {RMSE, rho} columns."""
    cells = doc.get("cells", [])
    kinds = [c["regressor"] for c in cells]
    lines = []
    lines.append(
        f"provider: {doc.get('provider', '')}   seed: {doc.get('seed')}   "
        f"iterations: {doc.get('iterations')}   train fraction: {doc.get('train_fraction')}"
    )
    lines.append(f"rows: {doc.get('n_rows')} ({doc.get('n_flagged_rows')} flagged)")
    lines.append("RMSE: lower is better; Pearson rho: higher is better")
    lines.append("")
    header = f"{'regressor':<12} {'RMSE':>10} {'rho':>10} {'skipped':>8} {'rho n/a':>8}"
    lines.append(header)
    lines.append("-" * len(header))

    def fmt(value) -> str:
        return "n/a" if value is None else f"{value:.4f}"

    for kind, cell in zip(kinds, cells):
        lines.append(
            f"{kind:<12} {fmt(cell['mean_rmse']):>10} {fmt(cell['mean_pearson']):>10} "
            f"{len(cell['skipped']):>8} {cell['pearson_flagged']:>8}"
        )
    if not doc.get("train_dominance_ok", True):
        lines.append("")
        lines.append("WARNING: isotonic training RMSE exceeded the constant-mean baseline")
    return "\n".join(lines) + "\n"
