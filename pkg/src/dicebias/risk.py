"""Expected loss of a prediction under independent Bernoulli region labels."""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Iterator

import numpy as np
from numpy.typing import NDArray
from scipy.stats import binom

from .exceptions import DiceBiasContractError, DiceBiasDomainError
from .losses import cross_entropy_loss
from .models import PredictionVector, RegionModel, RiskEstimate, RiskMethod
from .region_model import (
    BetaGroup,
    beta_group,
    prediction_array,
    shared_beta_prediction,
)

_LOGGER = logging.getLogger(__name__)

ENUMERATION_CAP = 20
_BLOCK = 1 << 16
_CACHE_LIMIT = 16

RiskFunction = Callable[[NDArray[np.float64]], float]


def _region_soft_dice(
    intersection: NDArray[np.float64],
    pred_sum: float | NDArray[np.float64],
    label_sum: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Soft Dice on region sums; an empty prediction of an empty label costs 0."""
    denominator = pred_sum + label_sum
    safe = np.where(denominator > 0, denominator, 1.0)
    return np.where(denominator > 0, 1.0 - 2.0 * intersection / safe, 0.0)


def _outcome_blocks(n_uncertain: int) -> Iterator[NDArray[np.bool_]]:
    """Yield all 2^n label realizations of the uncertain regions, in blocks."""
    bits = np.arange(n_uncertain)
    total = 1 << n_uncertain
    for start in range(0, total, _BLOCK):
        index = np.arange(start, min(start + _BLOCK, total))
        yield ((index[:, None] >> bits) & 1).astype(bool)


def _exact_risk_function(model: RegionModel, cap: int) -> RiskFunction:
    """Return pred -> E[SD] by enumerating the regions with 0 < p < 1."""
    volumes = model.volumes
    probs = model.true_probs
    uncertain = (probs > 0.0) & (probs < 1.0)
    certain_on = probs >= 1.0
    n_uncertain = int(np.count_nonzero(uncertain))
    if n_uncertain > cap:
        msg = (
            f"Exact enumeration over {n_uncertain} uncertain regions exceeds the cap "
            f"of {cap}; use expected_sd_binomial or expected_sd_mc instead."
        )
        raise DiceBiasContractError(msg)

    p_u = probs[uncertain]
    s_u = volumes[uncertain]
    base_label = float(np.sum(volumes[certain_on]))

    def weighted_outcomes() -> Iterator[tuple[NDArray[np.float64], NDArray]]:
        for outcomes in _outcome_blocks(n_uncertain):
            weights = np.prod(np.where(outcomes, p_u, 1.0 - p_u), axis=1)
            yield outcomes.astype(np.float64), weights

    cached = list(weighted_outcomes()) if n_uncertain <= _CACHE_LIMIT else None

    def risk(pred: NDArray[np.float64]) -> float:
        weighted = volumes * pred
        pred_sum = float(np.sum(weighted))
        base_intersection = float(np.sum(weighted[certain_on]))
        w_u = weighted[uncertain]
        partials = [
            float(
                weights
                @ _region_soft_dice(
                    base_intersection + outcomes @ w_u,
                    pred_sum,
                    base_label + outcomes @ s_u,
                )
            )
            for outcomes, weights in (cached or weighted_outcomes())
        ]
        return max(0.0, math.fsum(partials))

    return risk


def _plugin_risk_function(model: RegionModel) -> RiskFunction:
    """Return pred -> SD evaluated at the mean labels."""
    volumes = model.volumes
    probs = model.true_probs
    label_sum = float(np.dot(volumes, probs))

    def risk(pred: NDArray[np.float64]) -> float:
        weighted = volumes * pred
        denominator = float(np.sum(weighted)) + label_sum
        if denominator <= 0:
            msg = "Plug-in soft Dice is undefined: prediction and labels are empty."
            raise DiceBiasContractError(msg)
        return max(0.0, 1.0 - 2.0 * float(np.dot(weighted, probs)) / denominator)

    return risk


class BinomialRisk:
    """E[SD] of a grouped model as a function of the shared β prediction.

    The number of active β sub-regions is Binomial(N, p_β); α and γ are
    predicted at 0 and 1.
    """

    def __init__(self, group: BetaGroup) -> None:
        """Precompute the binomial weights of the group."""
        self.group = group
        self._active = np.arange(group.n_sub + 1, dtype=np.float64)
        self._weights = binom.pmf(self._active, group.n_sub, group.prob)

    def __call__(self, pred_beta: float) -> float:
        """Return the risk for the shared prediction pred_beta."""
        group = self.group
        s_b = group.sub_volume
        s_g = group.gamma_volume
        intersection = s_b * pred_beta * self._active + s_g
        pred_sum = s_b * pred_beta * group.n_sub + s_g
        label_sum = s_b * self._active + s_g
        values = self._weights * _region_soft_dice(intersection, pred_sum, label_sum)
        return max(0.0, math.fsum(values))


def risk_function(
    model: RegionModel, method: RiskMethod, *, cap: int = ENUMERATION_CAP
) -> RiskFunction:
    """Return a fast, unchecked pred-array -> soft Dice risk closure."""
    match method:
        case RiskMethod.EXACT_ENUM:
            return _exact_risk_function(model, cap)
        case RiskMethod.PLUG_IN:
            return _plugin_risk_function(model)
        case _:
            msg = (
                f"No per-region soft Dice risk function for {method}; the binomial "
                "estimator takes one shared β value through BinomialRisk."
            )
            raise DiceBiasContractError(msg)


def expected_ce(model: RegionModel, pred: PredictionVector) -> RiskEstimate:
    """Return Σ_j s_j CE(p̂_j, p_j), the exact cross-entropy risk."""
    q = prediction_array(model, pred)
    per_region = cross_entropy_loss(q[:, None], model.true_probs[:, None])
    value = float(np.dot(model.volumes, per_region))
    return RiskEstimate(value=max(0.0, value), method=RiskMethod.EXACT_ENUM)


def expected_sd_exact(
    model: RegionModel, pred: PredictionVector, *, cap: int = ENUMERATION_CAP
) -> RiskEstimate:
    """Return E[SD] summed over every label realization.

    Regions with p in {0, 1} have a single outcome, so 2^J terms are summed
    with J the number of uncertain regions; J above ``cap`` is refused.
    """
    q = prediction_array(model, pred)
    value = _exact_risk_function(model, cap)(q)
    return RiskEstimate(value=value, method=RiskMethod.EXACT_ENUM)


def expected_sd_binomial(model_grouped: RegionModel, pred_beta: float) -> RiskEstimate:
    """Return E[SD] of a grouped model by summing over the active-count binomial."""
    if not math.isfinite(pred_beta) or not 0.0 <= pred_beta <= 1.0:
        msg = f"pred_beta must lie in [0, 1], got {pred_beta!r}."
        raise DiceBiasDomainError(msg)
    value = BinomialRisk(beta_group(model_grouped))(pred_beta)
    return RiskEstimate(value=value, method=RiskMethod.EXACT_BINOMIAL)


def expected_sd_plugin(model: RegionModel, pred: PredictionVector) -> RiskEstimate:
    """Return SD evaluated at the mean labels p_j instead of its expectation."""
    q = prediction_array(model, pred)
    value = _plugin_risk_function(model)(q)
    return RiskEstimate(value=value, method=RiskMethod.PLUG_IN)


def expected_sd_mc(
    model: RegionModel, pred: PredictionVector, n_samples: int, seed: int
) -> RiskEstimate:
    """Return a Monte Carlo estimate of E[SD] with its standard error."""
    if n_samples < 1:
        msg = f"n_samples must be positive, got {n_samples}."
        raise DiceBiasDomainError(msg)
    q = prediction_array(model, pred)
    volumes = model.volumes
    probs = model.true_probs
    weighted = volumes * q
    pred_sum = float(np.sum(weighted))

    rng = np.random.default_rng(seed)
    chunks = []
    for start in range(0, n_samples, _BLOCK):
        size = min(_BLOCK, n_samples - start)
        labels = (rng.random((size, model.n_regions)) < probs).astype(np.float64)
        chunks.append(
            _region_soft_dice(labels @ weighted, pred_sum, labels @ volumes)
        )
    samples = np.concatenate(chunks)
    std_error = (
        float(np.std(samples, ddof=1)) / math.sqrt(n_samples) if n_samples > 1 else 0.0
    )
    _LOGGER.debug("Monte Carlo soft Dice risk from %d samples", n_samples)
    return RiskEstimate(
        value=max(0.0, float(np.mean(samples))),
        method=RiskMethod.MONTE_CARLO,
        std_error=std_error,
        n_samples=n_samples,
    )


def expected_sd(
    model: RegionModel,
    pred: PredictionVector,
    method: RiskMethod,
    *,
    n_samples: int = 100_000,
    seed: int = 0,
) -> RiskEstimate:
    """Dispatch to the soft Dice risk estimator named by method.

    The binomial estimator accepts only predictions of the form
    [0, q x N, 1] on a grouped model.
    """
    match method:
        case RiskMethod.EXACT_ENUM:
            return expected_sd_exact(model, pred)
        case RiskMethod.EXACT_BINOMIAL:
            return expected_sd_binomial(model, shared_beta_prediction(model, pred))
        case RiskMethod.PLUG_IN:
            return expected_sd_plugin(model, pred)
        case RiskMethod.MONTE_CARLO:
            return expected_sd_mc(model, pred, n_samples, seed)
