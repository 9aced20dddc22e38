"""Risk landscapes, volumetric bias curves and the under/over-estimation switch."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterable, Sequence

import numpy as np

from .exceptions import DiceBiasContractError, DiceBiasDomainError
from .models import (
    BiasCurvePoint,
    LandscapePoint,
    OptimOptions,
    OptimResult,
    RegionModel,
    RiskMethod,
    SweepEstimator,
    ThresholdSummary,
)
from .optim import optimal_ce, optimal_sd
from .region_model import beta_group, canonical_abc, grouped_prediction
from .risk import BinomialRisk, risk_function

_LOGGER = logging.getLogger(__name__)

DEFAULT_P_TRUE_SET = (0.0, 0.25, 0.5, 0.75, 1.0)
DEFAULT_MUS = (0.25, 1.0, 4.0)
DEFAULT_N_SUBS = (1, 4, 16)
DEFAULT_P_POINTS = 201
DEFAULT_P_HAT_POINTS = 101
DEFAULT_THRESHOLD_TOL = 1e-6

NO_SIGN_CHANGE = "delta_v never changes sign from negative to positive on [0, 1]"


def uniform_grid(points: int) -> tuple[float, ...]:
    """Return ``points`` equally spaced values covering [0, 1]."""
    if points < 2:
        msg = f"A probability grid needs at least two points, got {points}."
        raise DiceBiasDomainError(msg)
    return tuple(float(x) for x in np.linspace(0.0, 1.0, points))


def _check_grid(values: Sequence[float], name: str) -> None:
    if not values:
        msg = f"{name} must not be empty."
        raise DiceBiasDomainError(msg)
    if not all(math.isfinite(v) and 0.0 <= v <= 1.0 for v in values):
        msg = f"{name} values must lie in [0, 1]."
        raise DiceBiasDomainError(msg)


def _sd_method(estimator: SweepEstimator) -> RiskMethod:
    method = estimator.risk_method
    if method is None:
        msg = f"Estimator {estimator} has no soft Dice risk; use exact or plugin."
        raise DiceBiasContractError(msg)
    return method


def _shared_risk(
    model: RegionModel, estimator: SweepEstimator
) -> Callable[[float], float]:
    """Return the risk as a function of one prediction shared by all β regions."""
    group = beta_group(model)
    if estimator is SweepEstimator.EXACT:
        return BinomialRisk(group)
    plugin = risk_function(model, _sd_method(estimator))
    return lambda q: plugin(grouped_prediction(group, q).as_array())


def landscape(
    mu: float,
    n_sub: int,
    p_true_set: Sequence[float] = DEFAULT_P_TRUE_SET,
    p_hat_grid: Sequence[float] | None = None,
    estimator: SweepEstimator = SweepEstimator.EXACT,
) -> list[LandscapePoint]:
    """Return the soft Dice risk over a grid of shared β predictions.

    Every β sub-region is predicted at the same value p_hat while α and γ stay
    pinned at 0 and 1. Rows are ordered by p_true, then p_hat.
    """
    _sd_method(estimator)
    p_hat_grid = (
        uniform_grid(DEFAULT_P_HAT_POINTS) if p_hat_grid is None else p_hat_grid
    )
    _check_grid(p_true_set, "p_true_set")
    _check_grid(p_hat_grid, "p_hat_grid")

    points = []
    for p_true in p_true_set:
        risk = _shared_risk(canonical_abc(mu, p_true, n_sub), estimator)
        points.extend(
            LandscapePoint(
                estimator=estimator,
                n_sub=n_sub,
                mu=mu,
                p_true=float(p_true),
                p_hat=float(p_hat),
                sd_risk=min(1.0, risk(float(p_hat))),
            )
            for p_hat in p_hat_grid
        )
    return points


def _bias_point(
    estimator: SweepEstimator,
    n_sub: int,
    mu: float,
    p_true: float,
    result: OptimResult,
) -> BiasCurvePoint:
    model = canonical_abc(mu, p_true, n_sub)
    pred = result.pred.as_array()
    p_hat_opt = float(np.mean(pred[1:-1]))
    return BiasCurvePoint(
        estimator=estimator,
        n_sub=n_sub,
        mu=mu,
        p_true=float(p_true),
        p_hat_opt=p_hat_opt,
        risk_opt=result.risk.value,
        delta_v=float(np.dot(model.volumes, pred - model.true_probs)),
        delta_p=p_hat_opt - p_true,
        converged=result.converged,
    )


def ce_bias_curve(
    mu: float, n_sub: int, p_true_grid: Sequence[float]
) -> list[BiasCurvePoint]:
    """Return the cross-entropy bias curve, which is zero everywhere."""
    _check_grid(p_true_grid, "p_true_grid")
    return [
        _bias_point(
            SweepEstimator.CROSS_ENTROPY,
            n_sub,
            mu,
            p_true,
            optimal_ce(canonical_abc(mu, p_true, n_sub)),
        )
        for p_true in p_true_grid
    ]


def bias_curve(
    mu: float,
    n_sub: int,
    p_true_grid: Sequence[float] | None = None,
    estimator: SweepEstimator = SweepEstimator.EXACT,
    opts: OptimOptions | None = None,
) -> list[BiasCurvePoint]:
    """Return the optimal prediction and its bias for every p_true.

    Args:
    ----
        mu: Total β volume.
        n_sub: Number of β sub-regions.
        p_true_grid: Values of p_β, by default 201 points on [0, 1].
        estimator: Soft Dice estimator, or ``ce`` for the cross-entropy curve.
        opts: Optimizer tolerances.

    Returns:
    -------
        One point per p_true. Points whose optimization did not converge are
        kept with ``converged`` set to False.

    """
    if p_true_grid is None:
        p_true_grid = uniform_grid(DEFAULT_P_POINTS)
    if estimator is SweepEstimator.CROSS_ENTROPY:
        return ce_bias_curve(mu, n_sub, p_true_grid)
    _check_grid(p_true_grid, "p_true_grid")

    points = []
    for p_true in p_true_grid:
        result = optimal_sd(
            canonical_abc(mu, p_true, n_sub), _sd_method(estimator), opts
        )
        point = _bias_point(estimator, n_sub, mu, p_true, result)
        if not point.converged:
            _LOGGER.warning(
                "Flagged non-converged row: %s, n_sub=%d, mu=%g, p_true=%g",
                estimator,
                n_sub,
                mu,
                p_true,
            )
        points.append(point)
    return points


def sweep_grid(
    mus: Iterable[float] = DEFAULT_MUS,
    n_subs: Iterable[int] = DEFAULT_N_SUBS,
    p_true_grid: Sequence[float] | None = None,
    estimators: Iterable[SweepEstimator] = (
        SweepEstimator.EXACT,
        SweepEstimator.PLUG_IN,
    ),
    opts: OptimOptions | None = None,
) -> list[BiasCurvePoint]:
    """Return the bias curves of every (estimator, n_sub, mu) combination.

    Rows are sorted by (estimator, n_sub, mu, p_true), so the result does not
    depend on evaluation order.
    """
    rows = [
        point
        for estimator in estimators
        for n_sub in n_subs
        for mu in mus
        for point in bias_curve(mu, n_sub, p_true_grid, estimator, opts)
    ]
    return sorted(rows, key=lambda r: (r.estimator, r.n_sub, r.mu, r.p_true))


def threshold_scan(
    mu: float,
    n_sub: int,
    estimator: SweepEstimator = SweepEstimator.EXACT,
    tol: float = DEFAULT_THRESHOLD_TOL,
    *,
    scan_points: int = 101,
    opts: OptimOptions | None = None,
) -> float:
    """Locate the p_true where the volumetric bias turns positive.

    A coarse scan finds the first grid cell on which delta_v goes from
    non-positive to positive; bisection then narrows that cell to ``tol``.

    Returns
    -------
        The threshold, or NaN when no sign change exists.

    """
    _sd_method(estimator)
    if not tol > 0:
        msg = f"Bisection tolerance must be positive, got {tol!r}."
        raise DiceBiasDomainError(msg)

    def delta_v(p_true: float) -> float:
        return bias_curve(mu, n_sub, [p_true], estimator, opts)[0].delta_v

    grid = uniform_grid(scan_points)
    previous = grid[0]
    for p_true in grid:
        if delta_v(p_true) > 0:
            low, high = previous, p_true
            break
        previous = p_true
    else:
        _LOGGER.warning(
            "No threshold for %s, n_sub=%d, mu=%g: %s",
            estimator,
            n_sub,
            mu,
            NO_SIGN_CHANGE,
        )
        return math.nan

    while high - low > tol:
        middle = 0.5 * (low + high)
        if delta_v(middle) > 0:
            high = middle
        else:
            low = middle
    threshold = 0.5 * (low + high)
    _LOGGER.info(
        "Threshold for %s, n_sub=%d, mu=%g: %.7f", estimator, n_sub, mu, threshold
    )
    return threshold


def summarize_threshold(
    mu: float,
    n_sub: int,
    estimator: SweepEstimator = SweepEstimator.EXACT,
    tol: float = DEFAULT_THRESHOLD_TOL,
    *,
    opts: OptimOptions | None = None,
) -> ThresholdSummary:
    """Run threshold_scan and wrap the answer in a serializable record."""
    threshold = threshold_scan(mu, n_sub, estimator, tol, opts=opts)
    found = not math.isnan(threshold)
    return ThresholdSummary(
        estimator=estimator,
        n_sub=n_sub,
        mu=mu,
        threshold=threshold if found else None,
        tol=tol,
        diagnostic=None if found else NO_SIGN_CHANGE,
    )
