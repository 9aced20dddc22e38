"""Risk-optimal predictions for cross-entropy and soft Dice."""

from __future__ import annotations

import itertools
import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .exceptions import DiceBiasContractError, DiceBiasDomainError
from .models import (
    OptimMethod,
    OptimOptions,
    OptimResult,
    PredictionVector,
    RegionModel,
    RiskEstimate,
    RiskMethod,
)
from .region_model import beta_group, grouped_prediction, true_prediction
from .risk import BinomialRisk, expected_ce, risk_function

_LOGGER = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
ORACLE_MAX_FREE = 4


@dataclass(frozen=True)
class ScalarMinimum:
    """Outcome of a one-dimensional minimization."""

    x: float
    fx: float
    iterations: int
    converged: bool


def golden_section(
    func: Callable[[float], float],
    lower: float,
    upper: float,
    *,
    tol: float = 1e-7,
    max_iter: int = 200,
) -> ScalarMinimum:
    """Minimize func on [lower, upper] by golden-section search.

    The bracket endpoints are compared with the interior result at the end,
    so a minimum sitting on the boundary is returned exactly.
    """
    a, b = lower, upper
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = func(c), func(d)
    iterations = 0
    while b - a > tol and iterations < max_iter:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = func(d)
        iterations += 1

    x, fx = (c, fc) if fc <= fd else (d, fd)
    for edge in (lower, upper):
        f_edge = func(edge)
        if f_edge < fx or (f_edge == fx and edge < x):
            x, fx = edge, f_edge
    converged = b - a <= tol and math.isfinite(fx)
    return ScalarMinimum(x=x, fx=fx, iterations=iterations, converged=converged)


def minimize_unit_interval(
    func: Callable[[float], float], options: OptimOptions
) -> ScalarMinimum:
    """Minimize func on [0, 1]: grid scan, then golden refinement of the best cell.

    Among grid points within ``risk_tol`` of the best value the smallest
    wins, so equal-risk endpoints resolve toward 0.
    """
    grid = np.linspace(0.0, 1.0, options.grid_points)
    values = np.array([func(float(x)) for x in grid])
    best = float(np.min(values))
    index = int(np.flatnonzero(values <= best + options.risk_tol)[0])
    x_grid, f_grid = float(grid[index]), float(values[index])

    refined = golden_section(
        func,
        float(grid[max(index - 1, 0)]),
        float(grid[min(index + 1, options.grid_points - 1)]),
        tol=options.x_tol,
        max_iter=options.max_golden_iter,
    )
    if refined.fx < f_grid - options.risk_tol:
        return refined
    return ScalarMinimum(
        x=x_grid, fx=f_grid, iterations=refined.iterations, converged=refined.converged
    )


def optimal_ce(model: RegionModel) -> OptimResult:
    """Return the cross-entropy optimum, which is the true probabilities."""
    pred = true_prediction(model)
    return OptimResult(
        pred=pred,
        risk=expected_ce(model, pred),
        iterations=0,
        converged=True,
        method=OptimMethod.CLOSED_FORM,
    )


def _optimal_sd_grouped(model: RegionModel, options: OptimOptions) -> OptimResult:
    group = beta_group(model)
    risk = BinomialRisk(group)
    if group.prob in {0.0, 1.0}:
        best = ScalarMinimum(
            x=group.prob, fx=risk(group.prob), iterations=0, converged=True
        )
    else:
        best = minimize_unit_interval(risk, options)
    return OptimResult(
        pred=grouped_prediction(group, best.x),
        risk=RiskEstimate(value=best.fx, method=RiskMethod.EXACT_BINOMIAL),
        iterations=best.iterations,
        converged=best.converged,
        method=OptimMethod.COORDINATE_GOLDEN,
    )


def _coordinate_descent(
    risk: Callable[[NDArray[np.float64]], float],
    start: NDArray[np.float64],
    free: list[int],
    options: OptimOptions,
) -> tuple[NDArray[np.float64], float, int, bool]:
    x = start.copy()
    current = risk(x)
    if not free:
        return x, current, 0, True

    for sweep in range(1, options.max_sweeps + 1):
        max_change = 0.0
        for j in free:

            def along(value: float, j: int = j) -> float:
                trial = x.copy()
                trial[j] = value
                return risk(trial)

            best = minimize_unit_interval(along, options)
            improves = best.fx < current - options.risk_tol
            ties_lower = abs(best.fx - current) <= options.risk_tol and best.x < x[j]
            if improves or ties_lower:
                max_change = max(max_change, abs(best.x - x[j]))
                x[j] = best.x
                current = risk(x)
        _LOGGER.debug(
            "Sweep %d: risk %.12g, max change %.3g", sweep, current, max_change
        )
        if max_change < options.x_tol:
            return x, current, sweep, True
    return x, current, options.max_sweeps, False


def optimal_sd(
    model: RegionModel,
    estimator: RiskMethod = RiskMethod.EXACT_ENUM,
    opts: OptimOptions | None = None,
) -> OptimResult:
    """Return the prediction minimizing the soft Dice risk.

    Regions with p in {0, 1} are pinned to p. With the binomial estimator the
    β sub-regions of a grouped model share one predicted value; otherwise every
    uncertain region is a coordinate of a descent in which each coordinate is
    minimized by grid scan plus golden section. Non-convergence is reported on
    the result, never raised.
    """
    options = opts or OptimOptions()
    if estimator is RiskMethod.MONTE_CARLO:
        msg = "optimal_sd needs a deterministic estimator, not Monte Carlo."
        raise DiceBiasContractError(msg)

    if estimator is RiskMethod.EXACT_BINOMIAL:
        result = _optimal_sd_grouped(model, options)
    else:
        probs = model.true_probs
        free = [j for j, p in enumerate(probs) if 0.0 < p < 1.0]
        x, fx, sweeps, converged = _coordinate_descent(
            risk_function(model, estimator), probs, free, options
        )
        result = OptimResult(
            pred=PredictionVector(tuple(float(q) for q in x)),
            risk=RiskEstimate(value=fx, method=estimator),
            iterations=sweeps,
            converged=converged,
            method=OptimMethod.COORDINATE_GOLDEN,
        )

    if not result.converged:
        _LOGGER.warning(
            "Soft Dice optimization (%s) did not converge; returning best point",
            estimator,
        )
    return result


def grid_oracle(
    model: RegionModel,
    estimator: RiskMethod,
    resolution: int,
    *,
    pin_certain: bool = True,
) -> OptimResult:
    """Return the best point of the uniform grid {0, 1/(r-1), .., 1}^free.

    Grouped models under the binomial estimator have a single free coordinate.
    Otherwise the free coordinates are the uncertain regions, or all regions
    when ``pin_certain`` is False; at most four are searched.
    """
    if resolution < 2:
        msg = f"Grid resolution must be at least 2, got {resolution}."
        raise DiceBiasDomainError(msg)
    grid = np.linspace(0.0, 1.0, resolution)

    if estimator is RiskMethod.EXACT_BINOMIAL:
        group = beta_group(model)
        risk_beta = BinomialRisk(group)
        values = np.array([risk_beta(float(q)) for q in grid])
        index = int(np.argmin(values))
        return OptimResult(
            pred=grouped_prediction(group, float(grid[index])),
            risk=RiskEstimate(value=float(values[index]), method=estimator),
            iterations=resolution,
            converged=True,
            method=OptimMethod.GRID_ORACLE,
        )

    probs = model.true_probs
    free = [j for j, p in enumerate(probs) if not pin_certain or 0.0 < p < 1.0]
    if len(free) > ORACLE_MAX_FREE:
        msg = (
            f"Grid oracle over {len(free)} free coordinates exceeds the limit of "
            f"{ORACLE_MAX_FREE}."
        )
        raise DiceBiasContractError(msg)

    risk = risk_function(model, estimator)
    best_x, best_f = probs.copy(), math.inf
    evaluations = 0
    for point in itertools.product(grid, repeat=len(free)):
        x = probs.copy()
        if free:
            x[free] = point
        value = risk(x)
        evaluations += 1
        if value < best_f:
            best_x, best_f = x, value
    return OptimResult(
        pred=PredictionVector(tuple(float(q) for q in best_x)),
        risk=RiskEstimate(value=best_f, method=estimator),
        iterations=evaluations,
        converged=True,
        method=OptimMethod.GRID_ORACLE,
    )
