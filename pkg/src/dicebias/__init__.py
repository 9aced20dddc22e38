"""Risk-optimal predictions and volumetric bias of soft Dice versus cross-entropy."""

from .exceptions import (
    DiceBiasContractError,
    DiceBiasDomainError,
    DiceBiasError,
    DiceBiasNumericalError,
)
from .losses import (
    cross_entropy_grad,
    cross_entropy_loss,
    dice_score,
    map_volume,
    soft_dice_grad,
    soft_dice_loss,
)
from .models import (
    BiasCurvePoint,
    EpochRecord,
    FeatureMode,
    LandscapePoint,
    OptimMethod,
    OptimOptions,
    OptimResult,
    PredictionVector,
    RegionModel,
    RegionSpec,
    RiskEstimate,
    RiskMethod,
    RunManifest,
    SweepEstimator,
    ThresholdSummary,
    ToyDatasetSpec,
    ToyModel,
    TrainConfig,
    TrainLoss,
    TrainOptimizer,
    TrainReport,
)
from .optim import grid_oracle, optimal_ce, optimal_sd
from .region_model import canonical_abc, expected_volume
from .risk import (
    expected_ce,
    expected_sd,
    expected_sd_binomial,
    expected_sd_exact,
    expected_sd_mc,
    expected_sd_plugin,
)
from .sweep import (
    bias_curve,
    ce_bias_curve,
    landscape,
    summarize_threshold,
    threshold_scan,
)
from .toytrain import (
    ToyDataset,
    TrainResult,
    cross_validate,
    empirical_region_model,
    evaluate,
    generate,
    train,
)

__all__ = [
    "BiasCurvePoint",
    "DiceBiasContractError",
    "DiceBiasDomainError",
    "DiceBiasError",
    "DiceBiasNumericalError",
    "EpochRecord",
    "FeatureMode",
    "LandscapePoint",
    "OptimMethod",
    "OptimOptions",
    "OptimResult",
    "PredictionVector",
    "RegionModel",
    "RegionSpec",
    "RiskEstimate",
    "RiskMethod",
    "RunManifest",
    "SweepEstimator",
    "ThresholdSummary",
    "ToyDataset",
    "ToyDatasetSpec",
    "ToyModel",
    "TrainConfig",
    "TrainLoss",
    "TrainOptimizer",
    "TrainReport",
    "TrainResult",
    "bias_curve",
    "canonical_abc",
    "ce_bias_curve",
    "cross_entropy_grad",
    "cross_entropy_loss",
    "cross_validate",
    "dice_score",
    "empirical_region_model",
    "evaluate",
    "expected_ce",
    "expected_sd",
    "expected_sd_binomial",
    "expected_sd_exact",
    "expected_sd_mc",
    "expected_sd_plugin",
    "expected_volume",
    "generate",
    "grid_oracle",
    "landscape",
    "map_volume",
    "optimal_ce",
    "optimal_sd",
    "soft_dice_grad",
    "soft_dice_loss",
    "summarize_threshold",
    "threshold_scan",
    "train",
]
