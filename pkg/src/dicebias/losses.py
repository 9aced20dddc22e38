"""Element-level segmentation losses and their analytic gradients.

All kernels take flat maps, or stacks of maps, and reduce along the last
axis; a 2-D input yields one value per row (one per image).
"""

from __future__ import annotations

from typing import TypeAlias

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .exceptions import DiceBiasContractError, DiceBiasDomainError

ProbLabelMap: TypeAlias = NDArray[np.float64]
BinaryLabelMap: TypeAlias = NDArray[np.int_]
LossValue: TypeAlias = float | NDArray[np.float64]

CE_CLAMP = 1e-12


def _as_prob_map(values: ArrayLike, name: str) -> ProbLabelMap:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim == 0 or array.shape[-1] == 0:
        msg = f"{name} must contain at least one element."
        raise DiceBiasDomainError(msg)
    if not np.all((array >= 0.0) & (array <= 1.0)):
        msg = f"{name} entries must lie in [0, 1]."
        raise DiceBiasDomainError(msg)
    return array


def _as_binary_map(values: ArrayLike, name: str) -> BinaryLabelMap:
    array = np.asarray(values)
    if array.ndim == 0 or array.shape[-1] == 0:
        msg = f"{name} must contain at least one element."
        raise DiceBiasDomainError(msg)
    if not np.all((array == 0) | (array == 1)):
        msg = f"{name} entries must be exactly 0 or 1."
        raise DiceBiasDomainError(msg)
    return array.astype(np.int_)


def _check_shapes(a: NDArray, b: NDArray) -> None:
    if a.shape != b.shape:
        msg = f"Label maps differ in shape: {a.shape} vs {b.shape}."
        raise DiceBiasContractError(msg)


def _scalar_or_array(value: NDArray[np.float64]) -> LossValue:
    return float(value) if value.ndim == 0 else value


def dice_score(a: ArrayLike, b: ArrayLike) -> LossValue:
    """Return the Dice score 2|a ∩ b| / (|a| + |b|) of two binary maps.

    Two empty maps match perfectly and score 1.
    """
    first = _as_binary_map(a, "a")
    second = _as_binary_map(b, "b")
    _check_shapes(first, second)
    overlap = 2.0 * np.sum(first * second, axis=-1)
    total = np.sum(first, axis=-1) + np.sum(second, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(total > 0, overlap / np.where(total > 0, total, 1), 1.0)
    return _scalar_or_array(np.asarray(score, dtype=np.float64))


def soft_dice_loss(
    pred: ArrayLike, target: ArrayLike, *, smooth: float = 0.0
) -> LossValue:
    """Return the soft Dice loss 1 - 2Σŷy / (Σŷ + Σy).

    With ``smooth`` > 0 the term is added to both numerator and denominator.
    Two all-zero maps without smoothing give loss 0.
    """
    y_hat = _as_prob_map(pred, "pred")
    y = _as_prob_map(target, "target")
    _check_shapes(y_hat, y)
    numerator = 2.0 * np.sum(y_hat * y, axis=-1) + smooth
    denominator = np.sum(y_hat, axis=-1) + np.sum(y, axis=-1) + smooth
    safe = np.where(denominator > 0, denominator, 1.0)
    loss = np.where(denominator > 0, 1.0 - numerator / safe, 0.0)
    return _scalar_or_array(np.asarray(loss, dtype=np.float64))


def soft_dice_grad(
    pred: ArrayLike, target: ArrayLike, *, smooth: float = 0.0
) -> NDArray[np.float64]:
    """Return ∂SD/∂ŷ_k = -(2 y_k D - N) / D² for every element.

    N = 2Σŷy + smooth and D = Σŷ + Σy + smooth, taken per map.

    Raises
    ------
        DiceBiasContractError: D is zero for some map.

    """
    y_hat = _as_prob_map(pred, "pred")
    y = _as_prob_map(target, "target")
    _check_shapes(y_hat, y)
    numerator = 2.0 * np.sum(y_hat * y, axis=-1, keepdims=True) + smooth
    denominator = (
        np.sum(y_hat, axis=-1, keepdims=True)
        + np.sum(y, axis=-1, keepdims=True)
        + smooth
    )
    if np.any(denominator <= 0):
        msg = "Soft Dice gradient is undefined for two all-zero maps without smoothing."
        raise DiceBiasContractError(msg)
    return -(2.0 * y * denominator - numerator) / denominator**2


def cross_entropy_loss(pred: ArrayLike, target: ArrayLike) -> LossValue:
    """Return the summed binary cross-entropy with ŷ clamped to [1e-12, 1 - 1e-12]."""
    y_hat = np.clip(_as_prob_map(pred, "pred"), CE_CLAMP, 1.0 - CE_CLAMP)
    y = _as_prob_map(target, "target")
    _check_shapes(y_hat, y)
    loss = -np.sum(y * np.log(y_hat) + (1.0 - y) * np.log1p(-y_hat), axis=-1)
    return _scalar_or_array(np.asarray(loss, dtype=np.float64))


def cross_entropy_grad(pred: ArrayLike, target: ArrayLike) -> NDArray[np.float64]:
    """Return ∂CE/∂ŷ_i = -y_i/ŷ_i + (1 - y_i)/(1 - ŷ_i) under the same clamp."""
    y_hat = np.clip(_as_prob_map(pred, "pred"), CE_CLAMP, 1.0 - CE_CLAMP)
    y = _as_prob_map(target, "target")
    _check_shapes(y_hat, y)
    return -y / y_hat + (1.0 - y) / (1.0 - y_hat)


def map_volume(values: ArrayLike, voxel_volume: float = 1.0) -> LossValue:
    """Return v Σ values, the (expected) volume of a map."""
    if not voxel_volume > 0:
        msg = f"Voxel volume must be positive, got {voxel_volume!r}."
        raise DiceBiasDomainError(msg)
    array = _as_prob_map(values, "map")
    return _scalar_or_array(np.asarray(voxel_volume * np.sum(array, axis=-1)))
