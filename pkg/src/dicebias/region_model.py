"""Independent-region model and the canonical α/β/γ construction."""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .exceptions import DiceBiasContractError, DiceBiasDomainError
from .models import PredictionVector, RegionModel, RegionSpec

ALPHA_VOLUME = 100.0
GAMMA_VOLUME = 1.0


def canonical_abc(
    mu: float,
    p_beta: float,
    n_sub: int = 1,
    *,
    alpha_volume: float = ALPHA_VOLUME,
    gamma_volume: float = GAMMA_VOLUME,
) -> RegionModel:
    """Build the background / uncertain / foreground model.

    Region order is [α, β_0 .. β_{n_sub-1}, γ]: α is certain background,
    the β sub-regions share volume mu / n_sub and probability p_beta, γ is
    certain foreground.

    Args:
    ----
        mu: Total volume of the uncertain part.
        p_beta: Inherent uncertainty of every β sub-region.
        n_sub: Number of independent β sub-regions.
        alpha_volume: Volume of the background region.
        gamma_volume: Volume of the foreground region.

    Returns:
    -------
        The region model.

    Raises:
    ------
        DiceBiasDomainError: mu is not positive, p_beta lies outside [0, 1]
            or n_sub is smaller than one.

    """
    if not math.isfinite(mu) or mu <= 0:
        msg = f"Volume ratio mu must be positive, got {mu!r}."
        raise DiceBiasDomainError(msg)
    if not math.isfinite(p_beta) or not 0.0 <= p_beta <= 1.0:
        msg = f"p_beta must lie in [0, 1], got {p_beta!r}."
        raise DiceBiasDomainError(msg)
    try:
        n_sub = operator.index(n_sub)
    except TypeError as err:
        msg = f"n_sub must be an integer, got {n_sub!r}."
        raise DiceBiasDomainError(msg) from err
    if n_sub < 1:
        msg = f"n_sub must be at least 1, got {n_sub}."
        raise DiceBiasDomainError(msg)

    beta = RegionSpec(volume=mu / n_sub, true_prob=p_beta)
    return RegionModel(
        (
            RegionSpec(volume=alpha_volume, true_prob=0.0),
            *([beta] * n_sub),
            RegionSpec(volume=gamma_volume, true_prob=1.0),
        )
    )


def true_prediction(model: RegionModel) -> PredictionVector:
    """Return the model's own probabilities as a prediction."""
    return PredictionVector(tuple(region.true_prob for region in model.regions))


def prediction_array(model: RegionModel, pred: PredictionVector) -> NDArray[np.float64]:
    """Return pred as an array after checking it targets model."""
    if len(pred.probs) != model.n_regions:
        msg = (
            f"Prediction has {len(pred.probs)} entries but the model has "
            f"{model.n_regions} regions."
        )
        raise DiceBiasContractError(msg)
    return pred.as_array()


def expected_volume(model: RegionModel, probs: PredictionVector | None = None) -> float:
    """Return Σ s_j q_j for the given probabilities, or the model's own."""
    q = model.true_probs if probs is None else prediction_array(model, probs)
    return float(np.dot(model.volumes, q))


@dataclass(frozen=True)
class BetaGroup:
    """Shape of a grouped model: α, n_sub identical β sub-regions, γ."""

    n_sub: int
    sub_volume: float
    prob: float
    alpha_volume: float
    gamma_volume: float

    @property
    def mu(self) -> float:
        """Return the total β volume."""
        return self.sub_volume * self.n_sub


def beta_group(model: RegionModel) -> BetaGroup:
    """Describe a grouped model, raising if model is not one.

    A grouped model starts with a background region (p = 0), ends with a
    foreground region (p = 1) and has at least one identical region between.
    """
    regions = model.regions
    if len(regions) < 3 or regions[0].true_prob != 0.0 or regions[-1].true_prob != 1.0:
        msg = (
            "Expected a grouped model [α (p=0), β_0..β_{N-1}, γ (p=1)] as built "
            "by canonical_abc."
        )
        raise DiceBiasContractError(msg)
    middle = regions[1:-1]
    if any(region != middle[0] for region in middle):
        msg = "β sub-regions must share volume and probability."
        raise DiceBiasContractError(msg)
    return BetaGroup(
        n_sub=len(middle),
        sub_volume=middle[0].volume,
        prob=middle[0].true_prob,
        alpha_volume=regions[0].volume,
        gamma_volume=regions[-1].volume,
    )


def grouped_prediction(group: BetaGroup, pred_beta: float) -> PredictionVector:
    """Return [0, pred_beta x n_sub, 1] for a grouped model."""
    return PredictionVector((0.0, *([pred_beta] * group.n_sub), 1.0))


def shared_beta_prediction(model: RegionModel, pred: PredictionVector) -> float:
    """Return q for a prediction [0, q x n_sub, 1] of a grouped model.

    Raises:
    ------
        DiceBiasContractError: model is not grouped, or pred does not pin α
            to 0 and γ to 1 with one value shared by every β sub-region.

    """
    group = beta_group(model)
    q = prediction_array(model, pred)
    shared = float(q[1])
    if pred != grouped_prediction(group, shared):
        msg = (
            "The binomial estimator needs a prediction [0, q x N, 1] with one "
            f"shared β value, got {pred.probs!r}."
        )
        raise DiceBiasContractError(msg)
    return shared
