"""Synthetic region-structured images and a per-pixel logistic model trained on them."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray
from scipy.special import expit

from .exceptions import (
    DiceBiasContractError,
    DiceBiasDomainError,
    DiceBiasNumericalError,
)
from .losses import cross_entropy_loss, soft_dice_grad, soft_dice_loss
from .models import (
    EpochRecord,
    FeatureMode,
    RegionModel,
    ToyDatasetSpec,
    ToyModel,
    TrainConfig,
    TrainLoss,
    TrainOptimizer,
    TrainReport,
)

_LOGGER = logging.getLogger(__name__)

GENERATE_STREAM = 0
SPLIT_STREAM = 1
BOOTSTRAP_STREAM = 2
FOLD_STREAM = 3

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_BOOTSTRAP_BLOCK = 512


def stream(seed: int, key: int) -> np.random.Generator:
    """Return the random generator of one named stream of a master seed."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(key,)))


@dataclass(frozen=True)
class ToyDataset:
    """Generated images: per-pixel features, binary labels and region membership."""

    spec: ToyDatasetSpec
    features: NDArray[np.float64]
    labels: NDArray[np.int8]
    region_of_pixel: NDArray[np.int_]

    @property
    def n_images(self) -> int:
        """Return the number of images."""
        return int(self.labels.shape[0])

    @property
    def n_pixels(self) -> int:
        """Return the number of pixels per image."""
        return int(self.labels.shape[1])

    @property
    def n_features(self) -> int:
        """Return the feature width, bias column included."""
        return int(self.features.shape[2])

    def select(self, images: NDArray[np.int_] | None) -> ToyDataset:
        """Return the dataset restricted to the given image indices."""
        if images is None:
            return self
        return dataclasses.replace(
            self, features=self.features[images], labels=self.labels[images]
        )


class TrainResult(NamedTuple):
    """Fitted model, its report on the held-out images and the epoch trace."""

    model: ToyModel
    report: TrainReport
    trace: list[EpochRecord]


def generate(spec: ToyDatasetSpec) -> ToyDataset:
    """Draw a dataset from the independent-region label distribution.

    Every image draws one label per region, shared by all pixels of the region.
    In ``region_onehot`` mode the features are the region indicators, so the
    best per-pixel posterior is the region probability itself. In
    ``gaussian_overlap`` mode each pixel gets one feature drawn from a unit
    normal centred at ±separation/2 according to its label. A constant bias
    feature is appended in both modes.
    """
    rng = stream(spec.seed, GENERATE_STREAM)
    counts = spec.pixel_counts
    n_regions = len(counts)
    region_of_pixel = np.repeat(np.arange(n_regions), counts)

    active = rng.random((spec.n_images, n_regions)) < np.array(spec.region_probs)
    labels = active[:, region_of_pixel].astype(np.int8)
    shape = labels.shape

    if spec.feature_mode is FeatureMode.REGION_ONEHOT:
        onehot = np.eye(n_regions)[region_of_pixel]
        columns = np.broadcast_to(onehot, (*shape, n_regions))
    else:
        centre = (labels - 0.5) * spec.separation
        columns = (centre + rng.standard_normal(shape))[..., None]
    features = np.concatenate([columns, np.ones((*shape, 1))], axis=-1)

    _LOGGER.debug(
        "Generated %d images of %d pixels (%s)",
        spec.n_images,
        shape[1],
        spec.feature_mode,
    )
    return ToyDataset(
        spec=spec,
        features=np.ascontiguousarray(features),
        labels=labels,
        region_of_pixel=region_of_pixel,
    )


def _loss_and_grad(
    weights: NDArray[np.float64],
    dataset: ToyDataset,
    loss: TrainLoss,
) -> tuple[float, NDArray[np.float64]]:
    """Return the training loss averaged over images and its weight gradient.

    CE is summed over the pixels of an image, soft Dice is taken over all of
    them at once.
    """
    x = dataset.features
    y = dataset.labels.astype(np.float64)
    y_hat = expit(x @ weights)
    n_images = y.shape[0]

    if loss is TrainLoss.CE:
        value = float(np.mean(cross_entropy_loss(y_hat, y)))
        logit_grad = (y_hat - y) / n_images
    else:
        value = float(np.mean(soft_dice_loss(y_hat, y)))
        try:
            output_grad = soft_dice_grad(y_hat, y)
        except DiceBiasContractError as err:
            msg = "Soft Dice gradient vanished: an image has empty labels and output."
            raise DiceBiasNumericalError(msg) from err
        logit_grad = output_grad * y_hat * (1.0 - y_hat) / n_images

    return value, np.einsum("ik,ikf->f", logit_grad, x)


def _loss(weights: NDArray[np.float64], dataset: ToyDataset, loss: TrainLoss) -> float:
    y = dataset.labels.astype(np.float64)
    y_hat = expit(dataset.features @ weights)
    if loss is TrainLoss.CE:
        return float(np.mean(cross_entropy_loss(y_hat, y)))
    return float(np.mean(soft_dice_loss(y_hat, y)))


def _split(
    images: NDArray[np.int_], config: TrainConfig
) -> tuple[NDArray[np.int_], NDArray[np.int_]]:
    """Split image indices into training and validation parts."""
    shuffled = stream(config.seed, SPLIT_STREAM).permutation(images)
    n_val = math.floor(len(images) * config.validation_fraction)
    if n_val == 0:
        return shuffled, shuffled
    return shuffled[n_val:], shuffled[:n_val]


def train(
    dataset: ToyDataset,
    model_init: ToyModel | None,
    config: TrainConfig,
    *,
    images: NDArray[np.int_] | None = None,
) -> TrainResult:
    """Fit the logistic model with the plateau learning-rate schedule.

    The images (all of them unless ``images`` is given) are split by
    ``config.validation_fraction``; when the split leaves no validation image
    the training images are used. The learning rate is multiplied by
    ``lr_drop_factor`` after ``patience_lr`` epochs without a validation
    improvement larger than ``min_delta`` and training stops after
    ``patience_stop`` such epochs. The final weights are returned together with
    a report on the validation images.

    Raises
    ------
        DiceBiasContractError: model_init does not match the feature width.
        DiceBiasNumericalError: the loss or the weights stop being finite.

    """
    if images is None:
        images = np.arange(dataset.n_images)
    train_idx, val_idx = _split(images, config)
    train_set, val_set = dataset.select(train_idx), dataset.select(val_idx)

    if model_init is None:
        model_init = ToyModel((0.0,) * dataset.n_features)
    if len(model_init.weights) != dataset.n_features:
        msg = (
            f"Model has {len(model_init.weights)} weights but the dataset has "
            f"{dataset.n_features} features."
        )
        raise DiceBiasContractError(msg)

    weights = np.array(model_init.weights)
    first_moment = np.zeros_like(weights)
    second_moment = np.zeros_like(weights)
    learning_rate = config.learning_rate
    best_val = math.inf
    since_improvement = since_drop = 0
    trace: list[EpochRecord] = []

    for epoch in range(1, config.max_epochs + 1):
        train_loss, grad = _loss_and_grad(weights, train_set, config.loss)
        with np.errstate(over="ignore", invalid="ignore"):
            if config.optimizer is TrainOptimizer.ADAM:
                first_moment = ADAM_BETA1 * first_moment + (1 - ADAM_BETA1) * grad
                second_moment = (
                    ADAM_BETA2 * second_moment + (1 - ADAM_BETA2) * grad**2
                )
                m_hat = first_moment / (1 - ADAM_BETA1**epoch)
                v_hat = second_moment / (1 - ADAM_BETA2**epoch)
                step = m_hat / (np.sqrt(v_hat) + ADAM_EPS)
            else:
                step = grad
            weights = weights - learning_rate * step

        if not (math.isfinite(train_loss) and np.all(np.isfinite(weights))):
            msg = (
                f"Training diverged at epoch {epoch} (learning rate "
                f"{learning_rate:g}): train loss {train_loss}, weights {weights}."
            )
            raise DiceBiasNumericalError(msg)
        val_loss = _loss(weights, val_set, config.loss)
        trace.append(
            EpochRecord(
                epoch=epoch,
                learning_rate=learning_rate,
                train_loss=train_loss,
                val_loss=val_loss,
            )
        )

        if val_loss < best_val - config.min_delta:
            best_val = val_loss
            since_improvement = since_drop = 0
        else:
            since_improvement += 1
            since_drop += 1
        if since_improvement >= config.patience_stop:
            _LOGGER.debug("Early stop at epoch %d", epoch)
            break
        if since_drop >= config.patience_lr:
            learning_rate *= config.lr_drop_factor
            since_drop = 0
            _LOGGER.debug("Epoch %d: learning rate now %g", epoch, learning_rate)
    else:
        _LOGGER.warning(
            "Training hit max_epochs=%d before the validation loss settled; "
            "the model may not have converged",
            config.max_epochs,
        )

    model = ToyModel(tuple(float(w) for w in weights))
    report = dataclasses.replace(
        evaluate(
            model,
            dataset,
            val_idx,
            resamples=config.bootstrap_resamples,
            seed=config.seed,
        ),
        epochs_run=len(trace),
        loss=config.loss,
    )
    _LOGGER.info(
        "Trained %s model for %d epochs: CE %.6g, 1-SD %.6g, delta V %.6g",
        config.loss,
        len(trace),
        report.final_ce,
        report.final_soft_dice_score,
        report.delta_v_mean,
    )
    return TrainResult(model=model, report=report, trace=trace)


def evaluate(
    model: ToyModel,
    dataset: ToyDataset,
    images: NDArray[np.int_] | None = None,
    *,
    resamples: int = 10_000,
    seed: int = 0,
) -> TrainReport:
    """Return CE per pixel, soft Dice score and volume error averaged over images.

    The 95% interval of the mean volume error is a percentile bootstrap over
    images with ``resamples`` draws.
    """
    if resamples < 1:
        msg = f"resamples must be positive, got {resamples}."
        raise DiceBiasDomainError(msg)
    subset = dataset.select(images)
    y = subset.labels.astype(np.float64)
    y_hat = model.predict(subset.features)

    ce = np.atleast_1d(cross_entropy_loss(y_hat, y)) / subset.n_pixels
    score = 1.0 - np.atleast_1d(soft_dice_loss(y_hat, y))
    delta_v = np.sum(y_hat, axis=-1) - np.sum(y, axis=-1)

    rng = stream(seed, BOOTSTRAP_STREAM)
    means = []
    for start in range(0, resamples, _BOOTSTRAP_BLOCK):
        size = min(_BOOTSTRAP_BLOCK, resamples - start)
        draws = rng.integers(0, len(delta_v), (size, len(delta_v)))
        means.append(delta_v[draws].mean(axis=1))
    low, high = np.percentile(np.concatenate(means), [2.5, 97.5])

    region = subset.region_of_pixel
    per_region = tuple(
        float(np.mean(y_hat[:, region == j])) for j in range(int(region.max()) + 1)
    )
    return TrainReport(
        final_ce=float(np.mean(ce)),
        final_soft_dice_score=float(np.mean(score)),
        delta_v_mean=float(np.mean(delta_v)),
        delta_v_ci=(float(low), float(high)),
        epochs_run=0,
        per_region_p_hat=per_region,
        n_images=subset.n_images,
    )


def cross_validate(
    dataset: ToyDataset,
    config: TrainConfig,
    folds: int = 5,
    model_init: ToyModel | None = None,
) -> list[TrainResult]:
    """Train once per fold and report on the images of the held-out fold."""
    if not 2 <= folds <= dataset.n_images:
        msg = f"folds must lie in [2, {dataset.n_images}], got {folds}."
        raise DiceBiasDomainError(msg)
    order = stream(config.seed, FOLD_STREAM).permutation(dataset.n_images)
    parts = np.array_split(order, folds)

    results = []
    for fold, held_out in enumerate(parts):
        rest = np.concatenate([part for k, part in enumerate(parts) if k != fold])
        fitted = train(dataset, model_init, config, images=rest)
        report = dataclasses.replace(
            evaluate(
                fitted.model,
                dataset,
                held_out,
                resamples=config.bootstrap_resamples,
                seed=config.seed,
            ),
            epochs_run=fitted.report.epochs_run,
            loss=config.loss,
            fold=fold,
        )
        _LOGGER.info("Fold %d: delta V %.6g", fold, report.delta_v_mean)
        results.append(fitted._replace(report=report))
    return results


def empirical_region_model(
    dataset: ToyDataset, images: NDArray[np.int_] | None = None
) -> RegionModel:
    """Return the region model whose risk equals the empirical risk on the images.

    Volumes are the pixel counts; probabilities are the fraction of images in
    which each region is foreground.
    """
    subset = dataset.select(images)
    counts = subset.spec.pixel_counts
    first_pixel = np.cumsum((0, *counts[:-1]))
    freq = subset.labels[:, first_pixel].mean(axis=0)
    return RegionModel.from_arrays([float(c) for c in counts], freq)
