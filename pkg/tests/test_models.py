"""Test the record types."""

import numpy as np
import pytest

from dicebias import (
    DiceBiasDomainError,
    FeatureMode,
    OptimOptions,
    PredictionVector,
    RegionModel,
    RegionSpec,
    RiskEstimate,
    RiskMethod,
    RunManifest,
    SweepEstimator,
    ToyDatasetSpec,
    ToyModel,
    TrainConfig,
    TrainReport,
)


@pytest.mark.parametrize(
    ("volume", "true_prob"),
    [(0.0, 0.5), (-1.0, 0.5), (float("nan"), 0.5), (1.0, 1.5), (1.0, -0.5)],
)
def test_region_spec_domain(volume: float, true_prob: float) -> None:
    """Test invalid regions are refused."""
    with pytest.raises(DiceBiasDomainError):
        RegionSpec(volume=volume, true_prob=true_prob)


def test_region_model_validation() -> None:
    """Test empty models and mismatched arrays."""
    with pytest.raises(DiceBiasDomainError):
        RegionModel(())
    with pytest.raises(DiceBiasDomainError):
        RegionModel.from_arrays([1.0, 2.0], [0.5])


def test_region_model_round_trip() -> None:
    """Test a region model survives JSON serialization."""
    model = RegionModel.from_arrays([100.0, 0.5, 1.0], [0.0, 0.25, 1.0])
    assert RegionModel.from_json(model.to_json()) == model


def test_prediction_vector_domain() -> None:
    """Test predictions outside [0, 1] are refused."""
    assert PredictionVector([0, 1]).probs == (0.0, 1.0)
    with pytest.raises(DiceBiasDomainError):
        PredictionVector(())
    with pytest.raises(DiceBiasDomainError):
        PredictionVector((0.5, 1.0001))


def test_risk_estimate_validation() -> None:
    """Test exact estimates carry no standard error."""
    assert RiskEstimate(0.1, RiskMethod.MONTE_CARLO, 0.01, 100).std_error == 0.01
    with pytest.raises(DiceBiasDomainError):
        RiskEstimate(0.1, RiskMethod.EXACT_ENUM, std_error=0.01)
    with pytest.raises(DiceBiasDomainError):
        RiskEstimate(-0.1, RiskMethod.PLUG_IN)


def test_risk_method_labels() -> None:
    """Test every risk method has a label and a determinism flag."""
    for method in RiskMethod:
        assert method.label
    assert not RiskMethod.MONTE_CARLO.deterministic
    assert RiskMethod.EXACT_BINOMIAL.deterministic


def test_sweep_estimator_mapping() -> None:
    """Test the sweep tags map to their soft Dice estimators."""
    assert SweepEstimator.EXACT.risk_method is RiskMethod.EXACT_BINOMIAL
    assert SweepEstimator.PLUG_IN.risk_method is RiskMethod.PLUG_IN
    assert SweepEstimator.CROSS_ENTROPY.risk_method is None


@pytest.mark.parametrize(
    "kwargs",
    [{"grid_points": 1}, {"x_tol": 0.0}, {"risk_tol": -1.0}, {"max_sweeps": 0}],
)
def test_optim_options_domain(kwargs: dict[str, float]) -> None:
    """Test invalid optimizer tolerances."""
    with pytest.raises(DiceBiasDomainError):
        OptimOptions(**kwargs)


def test_toy_dataset_spec() -> None:
    """Test the canonical pixel layout and its validation."""
    spec = ToyDatasetSpec.canonical(4.0, 0.75, n_images=10, pixel_scale=2)
    assert spec.region_probs == (0.0, 0.75, 1.0)
    assert spec.pixel_counts == (200, 8, 2)
    assert ToyDatasetSpec(3, (0.5, 0.5), pixels_per_region=4).pixel_counts == (4, 4)
    with pytest.raises(DiceBiasDomainError):
        ToyDatasetSpec.canonical(0.25, 0.5)
    with pytest.raises(DiceBiasDomainError):
        ToyDatasetSpec(0, (0.5,))
    with pytest.raises(DiceBiasDomainError):
        ToyDatasetSpec(1, (0.5, 0.5), region_pixels=(1,))
    with pytest.raises(DiceBiasDomainError):
        ToyDatasetSpec(
            1, (0.5,), feature_mode=FeatureMode.GAUSSIAN_OVERLAP, separation=0.0
        )


@pytest.mark.parametrize(
    "kwargs",
    [
        {"learning_rate": 0.0},
        {"max_epochs": 0},
        {"lr_drop_factor": 1.0},
        {"validation_fraction": 1.0},
        {"min_delta": -1.0},
        {"bootstrap_resamples": 0},
    ],
)
def test_train_config_domain(kwargs: dict[str, float]) -> None:
    """Test invalid training protocols."""
    with pytest.raises(DiceBiasDomainError):
        TrainConfig(**kwargs)


def test_toy_model() -> None:
    """Test the logistic prediction and weight validation."""
    model = ToyModel((0.0, 2.0))
    features = np.array([[1.0, 0.0], [0.0, 1.0]])
    np.testing.assert_allclose(model.predict(features), [0.5, 1 / (1 + np.exp(-2))])
    with pytest.raises(DiceBiasDomainError):
        ToyModel((float("inf"),))
    with pytest.raises(DiceBiasDomainError):
        ToyModel((1.0,), link="probit")


def test_train_report_interval() -> None:
    """Test the interval ordering and the zero-exclusion flag."""
    report = TrainReport(0.1, 0.9, 0.2, (0.1, 0.3), 5, (0.0, 1.0), 10)
    assert report.ci_excludes_zero
    assert not TrainReport(0.1, 0.9, 0.0, (-0.1, 0.1), 5, (0.5,), 10).ci_excludes_zero
    with pytest.raises(DiceBiasDomainError):
        TrainReport(0.1, 0.9, 0.0, (0.1, -0.1), 5, (0.5,), 10)


def test_run_manifest_alias() -> None:
    """Test the manifest stores its tool version under ``version``."""
    manifest = RunManifest("sweep", {"argv": ["sweep"]}, 0, "1.2.3", ["a.csv"])
    text = manifest.to_json()
    assert '"version":"1.2.3"' in text
    assert RunManifest.from_json(text) == manifest
