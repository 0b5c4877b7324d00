"""Univariate regressors mapping a similarity score to a grade.

Isotonic regression is the weighted least-squares projection onto
non-decreasing sequences, computed by pool-adjacent-violators; linear
and ridge share one closed form (ridge with penalty 0 is ordinary least
squares). All predictions are clamped to the grade range [0, 5].
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable

from .errors import DegenerateDesign, EmptyInput, NonPositiveWeight

GRADE_MIN = 0.0
GRADE_MAX = 5.0

REGRESSOR_KINDS = ("isotonic", "linear", "ridge")

DEGENERATE_SXX = 1e-12


def _clamp_grade(value: float) -> float:
    return max(GRADE_MIN, min(GRADE_MAX, value))


@dataclass(frozen=True)
class IsotonicModel:
    """Monotone step fit: knots are (x, fitted value), x strictly increasing,
    fitted values non-decreasing."""

    knots: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class LinearModel:
    """slope/intercept fit; penalty > 0 marks a ridge fit, 0 is OLS."""

    slope: float
    intercept: float
    penalty: float = 0.0


RegressionModel = IsotonicModel | LinearModel


def fit_isotonic(points: Iterable[tuple[float, float, float]]) -> IsotonicModel:
    """Weighted isotonic fit of (x, y, w) points by pool-adjacent-violators.

    Points sharing an x are first merged to their weighted mean target
    with summed weight. Scanning the merged sequence in x order, each
    new value opens a pool; while the previous pool's weighted mean
    exceeds the current one's, the pools merge. Every merged x becomes a
    knot carrying its pool's weighted mean, which makes the fitted knot
    values the weighted least-squares projection of the targets onto
    non-decreasing sequences.

    Raises:
        EmptyInput: no points.
        NonPositiveWeight: some weight is not > 0.
    """
    pts = sorted(points, key=lambda p: p[0])
    if not pts:
        raise EmptyInput("cannot fit isotonic regression on no points")
    for _, _, w in pts:
        if not w > 0:
            raise NonPositiveWeight(f"weight {w!r} is not positive")

    # merge exact ties in x: weighted mean target, summed weight
    merged_x: list[float] = []
    merged_y: list[float] = []
    merged_w: list[float] = []
    i = 0
    while i < len(pts):
        j = i
        while j < len(pts) and pts[j][0] == pts[i][0]:
            j += 1
        group = pts[i:j]
        weight = math.fsum(w for _, _, w in group)
        target = math.fsum(y * w for _, y, w in group) / weight
        merged_x.append(pts[i][0])
        merged_y.append(target)
        merged_w.append(weight)
        i = j

    # pools as (weighted sum, weight, member count)
    pool_wy: list[float] = []
    pool_w: list[float] = []
    pool_n: list[int] = []
    for y, w in zip(merged_y, merged_w):
        pool_wy.append(y * w)
        pool_w.append(w)
        pool_n.append(1)
        while len(pool_wy) > 1 and pool_wy[-2] / pool_w[-2] > pool_wy[-1] / pool_w[-1]:
            wy_top, w_top, n_top = pool_wy.pop(), pool_w.pop(), pool_n.pop()
            pool_wy[-1] += wy_top
            pool_w[-1] += w_top
            pool_n[-1] += n_top

    knots: list[tuple[float, float]] = []
    position = 0
    for wy, w, n in zip(pool_wy, pool_w, pool_n):
        level = wy / w
        for x in merged_x[position : position + n]:
            knots.append((x, level))
        position += n
    return IsotonicModel(knots=tuple(knots))


def predict_isotonic(model: IsotonicModel, x: float) -> float:
    """Evaluate the fit at x: boundary values outside the knot range,
    exact values at knots, linear interpolation between them. Clamped
    to [0, 5]."""
    knots = model.knots
    if not knots:
        raise EmptyInput("isotonic model has no knots")
    xs = [k[0] for k in knots]
    if x <= xs[0]:
        return _clamp_grade(knots[0][1])
    if x >= xs[-1]:
        return _clamp_grade(knots[-1][1])
    hi = bisect_left(xs, x)
    if xs[hi] == x:
        return _clamp_grade(knots[hi][1])
    x0, y0 = knots[hi - 1]
    x1, y1 = knots[hi]
    fraction = (x - x0) / (x1 - x0)
    return _clamp_grade(y0 + (y1 - y0) * fraction)


def fit_linear(points: Iterable[tuple[float, float]], penalty: float = 0.0) -> LinearModel:
    """Closed-form centered fit: slope = Sxy / (Sxx + penalty), intercept
    unpenalized (ybar - slope * xbar). penalty 0 is ordinary least squares.

    Raises:
        EmptyInput: no points.
        DegenerateDesign: penalty is 0 and x carries (almost) no variance.
        ValueError: penalty < 0.
    """
    if penalty < 0:
        raise ValueError(f"penalty must be >= 0, got {penalty!r}")
    pts = list(points)
    if not pts:
        raise EmptyInput("cannot fit linear regression on no points")
    n = len(pts)
    xbar = math.fsum(x for x, _ in pts) / n
    ybar = math.fsum(y for _, y in pts) / n
    sxx = math.fsum((x - xbar) ** 2 for x, _ in pts)
    sxy = math.fsum((x - xbar) * (y - ybar) for x, y in pts)
    if penalty == 0 and sxx < DEGENERATE_SXX:
        raise DegenerateDesign(f"Sxx = {sxx!r}; unpenalized fit needs non-identical x values")
    slope = sxy / (sxx + penalty)
    return LinearModel(slope=slope, intercept=ybar - slope * xbar, penalty=penalty)


def predict_linear(model: LinearModel, x: float) -> float:
    """slope * x + intercept, clamped to [0, 5]."""
    return _clamp_grade(model.slope * x + model.intercept)


def predict(model: RegressionModel, x: float) -> float:
    """Evaluate either model kind at x, clamped to [0, 5]."""
    if isinstance(model, IsotonicModel):
        return predict_isotonic(model, x)
    return predict_linear(model, x)


def model_to_dict(model: RegressionModel) -> dict:
    """JSON-ready audit dump: kind, penalty, and coefficients or knots."""
    if isinstance(model, IsotonicModel):
        return {"kind": "isotonic", "knots": [[x, y] for x, y in model.knots]}
    kind = "ridge" if model.penalty > 0 else "linear"
    return {
        "kind": kind,
        "lambda": model.penalty,
        "slope": model.slope,
        "intercept": model.intercept,
    }


def model_from_dict(payload: dict) -> RegressionModel:
    kind = payload.get("kind")
    if kind == "isotonic":
        return IsotonicModel(knots=tuple((float(x), float(y)) for x, y in payload["knots"]))
    if kind in ("linear", "ridge"):
        return LinearModel(
            slope=float(payload["slope"]),
            intercept=float(payload["intercept"]),
            penalty=float(payload.get("lambda", 0.0)),
        )
    raise ValueError(f"unknown model kind {kind!r}")
