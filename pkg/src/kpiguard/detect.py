"""Outlier scoring of residuals and candidate-threshold extraction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ScoreSeries, Tail, TimeSeries, linear_quantile


class DegenerateWindowError(ValueError):
    """The fitting window has zero spread, so scores are undefined."""


@dataclass(frozen=True)
class ZScoreModel:
    """Window mean and population standard deviation for standardization."""

    mu: float
    sigma: float


def fit_zscore(residuals: TimeSeries) -> ZScoreModel:
    """Fit mean and population standard deviation over a residual window.

    Population (not sample) deviation keeps the model a pure function of the
    window contents.
    """
    if len(residuals) < 2:
        raise ValueError(f"need at least 2 residuals, got {len(residuals)}")
    values = residuals.values
    mu = float(np.mean(values))
    sigma = float(np.sqrt(np.mean((values - mu) ** 2)))
    return ZScoreModel(mu=mu, sigma=sigma)


def score_zscore(model: ZScoreModel, residuals: TimeSeries) -> ScoreSeries:
    """Standardize residuals: (value - mu) / sigma, sign preserved.

    Left-tail anomalies come out as large negative scores. A zero-sigma
    model cannot score; callers that want to keep streaming should catch
    DegenerateWindowError and substitute zero scores with a warning.
    """
    if model.sigma <= 0.0:
        raise DegenerateWindowError(
            "degenerate window: zero spread, scores undefined"
        )
    scores = (residuals.values - model.mu) / model.sigma
    return ScoreSeries(residuals.start, residuals.interval, scores)


def pot_candidates(
    scores: ScoreSeries, initial_quantile: float, tail: Tail
) -> list[float]:
    """Peak values beyond an initial quantile, as threshold candidates.

    For the right tail this returns the distinct score values strictly above
    the ``initial_quantile`` empirical quantile, sorted descending, with the
    quantile value itself appended as the loosest candidate. The left tail
    mirrors below the ``1 - initial_quantile`` quantile, ascending. With no
    exceedances the list is just the quantile value.

    Output is strictly tail-sorted and duplicate-free, ready for
    :func:`kpiguard.thresholding.select_threshold_from_candidates`.
    """
    if len(scores) < 10:
        raise ValueError(f"need at least 10 scores, got {len(scores)}")
    if not 0.0 < initial_quantile < 1.0:
        raise ValueError(f"initial_quantile must be in (0, 1), got {initial_quantile}")
    s = scores.scores
    if tail is Tail.RIGHT:
        q = linear_quantile(s, initial_quantile)
        peaks = np.unique(s[s > q])[::-1]
    else:
        q = linear_quantile(s, 1.0 - initial_quantile)
        peaks = np.unique(s[s < q])
    return [float(p) for p in peaks] + [q]
