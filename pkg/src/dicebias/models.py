"""Record types for the soft Dice volumetric bias laboratory."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import StrEnum
from typing import TYPE_CHECKING, Any

import numpy as np
from mashumaro import field_options
from mashumaro.config import BaseConfig
from mashumaro.mixins.orjson import DataClassORJSONMixin
from scipy.special import expit

from .exceptions import DiceBiasDomainError

if TYPE_CHECKING:
    from numpy.typing import NDArray


def _check_probability(value: float, name: str) -> None:
    """Raise if value is not a finite probability."""
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        msg = f"{name} must lie in [0, 1], got {value!r}."
        raise DiceBiasDomainError(msg)


class RiskMethod(StrEnum):
    """How an expected loss was estimated."""

    EXACT_ENUM = "exact_enum"
    EXACT_BINOMIAL = "exact_binomial"
    PLUG_IN = "plug_in"
    MONTE_CARLO = "monte_carlo"

    @property
    def deterministic(self) -> bool:
        """Return whether the estimate carries no sampling error."""
        return self is not RiskMethod.MONTE_CARLO

    @property
    def label(self) -> str:
        """Return a human readable string for the method."""
        return {
            RiskMethod.EXACT_ENUM: "Exact (outcome enumeration)",
            RiskMethod.EXACT_BINOMIAL: "Exact (binomial grouping)",
            RiskMethod.PLUG_IN: "Plug-in (mean labels)",
            RiskMethod.MONTE_CARLO: "Monte Carlo",
        }[self]


class OptimMethod(StrEnum):
    """How a risk-optimal prediction was found."""

    CLOSED_FORM = "closed_form"
    COORDINATE_GOLDEN = "coordinate_golden"
    GRID_ORACLE = "grid_oracle"


class SweepEstimator(StrEnum):
    """Tag carried by every sweep row so estimators are never mixed."""

    CROSS_ENTROPY = "ce"
    EXACT = "exact"
    PLUG_IN = "plugin"

    @property
    def risk_method(self) -> RiskMethod | None:
        """Return the soft Dice risk estimator behind the tag."""
        return {
            SweepEstimator.EXACT: RiskMethod.EXACT_BINOMIAL,
            SweepEstimator.PLUG_IN: RiskMethod.PLUG_IN,
        }.get(self)


class FeatureMode(StrEnum):
    """Feature generator of the toy dataset."""

    REGION_ONEHOT = "region_onehot"
    GAUSSIAN_OVERLAP = "gaussian_overlap"


class TrainLoss(StrEnum):
    """Loss a toy model is trained against."""

    CE = "ce"
    SD = "sd"


class TrainOptimizer(StrEnum):
    """Update rule of the toy trainer."""

    GD = "gd"
    ADAM = "adam"


@dataclass(frozen=True)
class RegionSpec(DataClassORJSONMixin):
    """One independent region: its volume and its inherent uncertainty."""

    volume: float
    true_prob: float

    def __post_init__(self) -> None:
        """Validate the region."""
        if not math.isfinite(self.volume) or self.volume <= 0:
            msg = f"Region volume must be a positive real, got {self.volume!r}."
            raise DiceBiasDomainError(msg)
        _check_probability(self.true_prob, "Region probability")


@dataclass(frozen=True)
class RegionModel(DataClassORJSONMixin):
    """Ordered collection of independent regions."""

    regions: tuple[RegionSpec, ...]

    def __post_init__(self) -> None:
        """Validate the model."""
        object.__setattr__(self, "regions", tuple(self.regions))
        if not self.regions:
            msg = "A region model needs at least one region."
            raise DiceBiasDomainError(msg)
        total = math.fsum(region.volume for region in self.regions)
        if not math.isfinite(total):
            msg = "Total region volume must be finite."
            raise DiceBiasDomainError(msg)

    @classmethod
    def from_arrays(
        cls,
        volumes: list[float] | NDArray[np.float64],
        probs: list[float] | NDArray[np.float64],
    ) -> RegionModel:
        """Build a model from parallel volume and probability sequences."""
        if len(volumes) != len(probs):
            msg = "Volumes and probabilities must have the same length."
            raise DiceBiasDomainError(msg)
        return cls(
            tuple(
                RegionSpec(volume=float(s), true_prob=float(p))
                for s, p in zip(volumes, probs, strict=True)
            )
        )

    @property
    def n_regions(self) -> int:
        """Return J, the number of regions."""
        return len(self.regions)

    @property
    def volumes(self) -> NDArray[np.float64]:
        """Return the region volumes s_j."""
        return np.array([region.volume for region in self.regions])

    @property
    def true_probs(self) -> NDArray[np.float64]:
        """Return the inherent uncertainties p_j."""
        return np.array([region.true_prob for region in self.regions])

    @property
    def total_volume(self) -> float:
        """Return the summed volume of all regions."""
        return math.fsum(region.volume for region in self.regions)


@dataclass(frozen=True)
class PredictionVector(DataClassORJSONMixin):
    """One predicted probability per region."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        """Validate the prediction."""
        object.__setattr__(self, "probs", tuple(float(q) for q in self.probs))
        if not self.probs:
            msg = "A prediction needs at least one entry."
            raise DiceBiasDomainError(msg)
        for q in self.probs:
            _check_probability(q, "Predicted probability")

    def as_array(self) -> NDArray[np.float64]:
        """Return the predictions as a numpy array."""
        return np.array(self.probs)


@dataclass(frozen=True)
class RiskEstimate(DataClassORJSONMixin):
    """An expected loss together with how it was obtained."""

    value: float
    method: RiskMethod
    std_error: float = 0.0
    n_samples: int = 0

    def __post_init__(self) -> None:
        """Validate the estimate."""
        if not self.value >= 0:
            msg = f"Risk must be non-negative, got {self.value!r}."
            raise DiceBiasDomainError(msg)
        if self.std_error < 0 or (self.method.deterministic and self.std_error != 0):
            msg = "Standard error must be non-negative and zero for exact methods."
            raise DiceBiasDomainError(msg)


@dataclass(frozen=True)
class OptimOptions(DataClassORJSONMixin):
    """Tolerances of the soft Dice risk minimizer."""

    grid_points: int = 101
    x_tol: float = 1e-7
    risk_tol: float = 1e-12
    max_sweeps: int = 200
    max_golden_iter: int = 200

    def __post_init__(self) -> None:
        """Validate the options."""
        if self.grid_points < 2:
            msg = "The grid scan needs at least two points."
            raise DiceBiasDomainError(msg)
        if self.x_tol <= 0 or self.risk_tol <= 0:
            msg = "Optimizer tolerances must be positive."
            raise DiceBiasDomainError(msg)
        if self.max_sweeps < 1 or self.max_golden_iter < 1:
            msg = "Optimizer iteration limits must be positive."
            raise DiceBiasDomainError(msg)


@dataclass(frozen=True)
class OptimResult(DataClassORJSONMixin):
    """A risk-minimizing prediction."""

    pred: PredictionVector
    risk: RiskEstimate
    iterations: int
    converged: bool
    method: OptimMethod


@dataclass(frozen=True)
class BiasCurvePoint(DataClassORJSONMixin):
    """One sample of a volumetric bias curve."""

    estimator: SweepEstimator
    n_sub: int
    mu: float
    p_true: float
    p_hat_opt: float
    risk_opt: float
    delta_v: float
    delta_p: float
    converged: bool = True


@dataclass(frozen=True)
class LandscapePoint(DataClassORJSONMixin):
    """Soft Dice risk at one (p_true, p_hat) pair."""

    estimator: SweepEstimator
    n_sub: int
    mu: float
    p_true: float
    p_hat: float
    sd_risk: float


@dataclass(frozen=True)
class ThresholdSummary(DataClassORJSONMixin):
    """Location of the under/over-estimation switch.

    ``threshold`` is None when no sign change of the bias was found.
    """

    estimator: SweepEstimator
    n_sub: int
    mu: float
    threshold: float | None
    tol: float
    diagnostic: str | None = None


@dataclass(frozen=True)
class ToyDatasetSpec(DataClassORJSONMixin):
    """Recipe for a synthetic region-structured dataset."""

    n_images: int
    region_probs: tuple[float, ...]
    pixels_per_region: int = 1
    region_pixels: tuple[int, ...] | None = None
    feature_mode: FeatureMode = FeatureMode.REGION_ONEHOT
    separation: float = 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        """Validate the recipe."""
        object.__setattr__(self, "region_probs", tuple(self.region_probs))
        if self.region_pixels is not None:
            object.__setattr__(self, "region_pixels", tuple(self.region_pixels))
        if self.n_images < 1 or self.pixels_per_region < 1:
            msg = "A toy dataset needs at least one image and one pixel per region."
            raise DiceBiasDomainError(msg)
        if not self.region_probs:
            msg = "A toy dataset needs at least one region."
            raise DiceBiasDomainError(msg)
        for p in self.region_probs:
            _check_probability(p, "Region probability")
        if self.region_pixels is not None and (
            len(self.region_pixels) != len(self.region_probs)
            or min(self.region_pixels) < 1
        ):
            msg = "region_pixels needs one positive count per region."
            raise DiceBiasDomainError(msg)
        if not self.separation > 0:
            msg = "Gaussian class separation must be positive."
            raise DiceBiasDomainError(msg)

    @classmethod
    def canonical(  # noqa: PLR0913
        cls,
        mu: float,
        p_beta: float,
        *,
        n_images: int = 2000,
        pixel_scale: int = 1,
        feature_mode: FeatureMode = FeatureMode.REGION_ONEHOT,
        separation: float = 2.0,
        seed: int = 0,
    ) -> ToyDatasetSpec:
        """Lay out the α/β/γ geometry in pixels: 100, mu and 1 times the scale."""
        beta_pixels = round(mu * pixel_scale)
        if beta_pixels < 1:
            msg = (
                f"mu={mu} at pixel scale {pixel_scale} leaves region β without "
                "pixels; raise the pixel scale."
            )
            raise DiceBiasDomainError(msg)
        return cls(
            n_images=n_images,
            region_probs=(0.0, p_beta, 1.0),
            region_pixels=(100 * pixel_scale, beta_pixels, pixel_scale),
            feature_mode=feature_mode,
            separation=separation,
            seed=seed,
        )

    @property
    def pixel_counts(self) -> tuple[int, ...]:
        """Return the number of pixels of every region."""
        if self.region_pixels is not None:
            return self.region_pixels
        return (self.pixels_per_region,) * len(self.region_probs)


@dataclass(frozen=True)
class TrainConfig(DataClassORJSONMixin):
    """Optimization protocol of the toy trainer.

    Defaults follow the logistic-regression protocol: learning rate 1, drop by
    a factor five after 75 epochs without validation improvement, stop after 150.
    """

    loss: TrainLoss = TrainLoss.CE
    learning_rate: float = 1.0
    max_epochs: int = 1000
    patience_lr: int = 75
    patience_stop: int = 150
    lr_drop_factor: float = 0.2
    seed: int = 0
    optimizer: TrainOptimizer = TrainOptimizer.GD
    validation_fraction: float = 0.2
    min_delta: float = 0.0
    bootstrap_resamples: int = 10_000

    def __post_init__(self) -> None:
        """Validate the protocol."""
        if not self.learning_rate > 0:
            msg = "Learning rate must be positive."
            raise DiceBiasDomainError(msg)
        if min(self.max_epochs, self.patience_lr, self.patience_stop) < 1:
            msg = "Epoch counts and patiences must be positive."
            raise DiceBiasDomainError(msg)
        if not 0 < self.lr_drop_factor < 1:
            msg = "lr_drop_factor must lie in (0, 1)."
            raise DiceBiasDomainError(msg)
        if not 0 <= self.validation_fraction < 1:
            msg = "validation_fraction must lie in [0, 1)."
            raise DiceBiasDomainError(msg)
        if self.min_delta < 0 or self.bootstrap_resamples < 1:
            msg = "min_delta must be non-negative and bootstrap_resamples positive."
            raise DiceBiasDomainError(msg)


@dataclass(frozen=True)
class ToyModel(DataClassORJSONMixin):
    """Per-pixel logistic model: one weight per feature, the last one the bias."""

    weights: tuple[float, ...]
    link: str = "logistic"

    def __post_init__(self) -> None:
        """Validate the model."""
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.link != "logistic":
            msg = f"Unsupported link function {self.link!r}."
            raise DiceBiasDomainError(msg)
        if not all(math.isfinite(w) for w in self.weights):
            msg = "Model weights must be finite."
            raise DiceBiasDomainError(msg)

    def predict(self, features: NDArray[np.float64]) -> NDArray[np.float64]:
        """Return foreground probabilities for features on the last axis."""
        return expit(features @ np.array(self.weights))


@dataclass(frozen=True)
class TrainReport(DataClassORJSONMixin):
    """Metrics of a toy model: CE, soft Dice score and volume error."""

    final_ce: float
    final_soft_dice_score: float
    delta_v_mean: float
    delta_v_ci: tuple[float, float]
    epochs_run: int
    per_region_p_hat: tuple[float, ...]
    n_images: int
    loss: TrainLoss | None = None
    fold: int | None = None

    def __post_init__(self) -> None:
        """Validate the report."""
        low, high = self.delta_v_ci
        if low > high:
            msg = f"Confidence interval bounds are not ordered: {self.delta_v_ci}."
            raise DiceBiasDomainError(msg)

    @property
    def ci_excludes_zero(self) -> bool:
        """Return whether the volume error interval lies strictly on one side of 0."""
        low, high = self.delta_v_ci
        return low > 0 or high < 0


@dataclass(frozen=True)
class EpochRecord(DataClassORJSONMixin):
    """One line of the per-epoch loss trace."""

    epoch: int
    learning_rate: float
    train_loss: float
    val_loss: float


@dataclass
class RunManifest(DataClassORJSONMixin):
    """Everything needed to reproduce a CLI run."""

    command: str
    parameters: dict[str, Any]
    seed: int
    tool_version: str = field(metadata=field_options(alias="version"))
    output_paths: list[str] = field(default_factory=list)

    class Config(BaseConfig):
        """Write the version under its alias so manifests round-trip."""

        serialize_by_alias = True
