"""Test the region model construction."""

import numpy as np
import pytest

from dicebias import (
    DiceBiasContractError,
    DiceBiasDomainError,
    PredictionVector,
    RegionModel,
    canonical_abc,
    expected_volume,
)
from dicebias.region_model import (
    ALPHA_VOLUME,
    GAMMA_VOLUME,
    beta_group,
    grouped_prediction,
    prediction_array,
    true_prediction,
)


def test_canonical_layout() -> None:
    """Test the α / β sub-regions / γ order and volumes."""
    model = canonical_abc(2.0, 0.3, 4)
    assert model.n_regions == 6
    np.testing.assert_allclose(model.volumes, [ALPHA_VOLUME, 0.5, 0.5, 0.5, 0.5, 1])
    np.testing.assert_allclose(model.true_probs, [0, 0.3, 0.3, 0.3, 0.3, 1])
    assert model.total_volume == pytest.approx(ALPHA_VOLUME + 2.0 + GAMMA_VOLUME)


def test_canonical_custom_volumes() -> None:
    """Test overriding the certain region volumes."""
    model = canonical_abc(1.0, 0.5, alpha_volume=10.0, gamma_volume=3.0)
    np.testing.assert_allclose(model.volumes, [10.0, 1.0, 3.0])


@pytest.mark.parametrize(
    ("mu", "p_beta", "n_sub"),
    [
        (0.0, 0.5, 1),
        (-1.0, 0.5, 1),
        (float("inf"), 0.5, 1),
        (1.0, -0.1, 1),
        (1.0, 1.1, 1),
        (1.0, float("nan"), 1),
        (1.0, 0.5, 0),
        (1.0, 0.5, 1.5),
    ],
)
def test_canonical_domain(mu: float, p_beta: float, n_sub: int) -> None:
    """Test invalid canonical parameters are refused."""
    with pytest.raises(DiceBiasDomainError):
        canonical_abc(mu, p_beta, n_sub)


def test_expected_volume() -> None:
    """Test Σ s_j q_j with and without an explicit prediction."""
    model = canonical_abc(4.0, 0.25, 2)
    assert expected_volume(model) == pytest.approx(2.0)
    assert expected_volume(model, grouped_prediction(beta_group(model), 1.0)) == (
        pytest.approx(5.0)
    )


def test_true_prediction() -> None:
    """Test the model's own probabilities as prediction."""
    model = RegionModel.from_arrays([1.0, 2.0], [0.2, 0.9])
    assert true_prediction(model).probs == (0.2, 0.9)


def test_prediction_length_mismatch() -> None:
    """Test a prediction for a different number of regions."""
    model = canonical_abc(1.0, 0.5)
    with pytest.raises(DiceBiasContractError):
        prediction_array(model, PredictionVector((0.0, 1.0)))
    with pytest.raises(DiceBiasContractError):
        expected_volume(model, PredictionVector((0.0, 0.5, 0.5, 1.0)))


def test_beta_group() -> None:
    """Test the grouped description of a canonical model."""
    group = beta_group(canonical_abc(2.0, 0.7, 8))
    assert group.n_sub == 8
    assert group.sub_volume == pytest.approx(0.25)
    assert group.mu == pytest.approx(2.0)
    assert group.prob == 0.7
    assert grouped_prediction(group, 0.4).probs == (0.0, *([0.4] * 8), 1.0)


@pytest.mark.parametrize(
    ("volumes", "probs"),
    [
        ([1.0, 1.0], [0.0, 1.0]),
        ([1.0, 1.0, 1.0], [0.5, 0.5, 1.0]),
        ([1.0, 1.0, 1.0], [0.0, 0.5, 0.9]),
        ([1.0, 1.0, 2.0, 1.0], [0.0, 0.5, 0.5, 1.0]),
        ([1.0, 1.0, 1.0, 1.0], [0.0, 0.5, 0.6, 1.0]),
    ],
)
def test_beta_group_refuses_other_layouts(
    volumes: list[float], probs: list[float]
) -> None:
    """Test models that are not grouped."""
    with pytest.raises(DiceBiasContractError):
        beta_group(RegionModel.from_arrays(volumes, probs))


@pytest.mark.parametrize("mu", [0.25, 1.0, 4.0])
@pytest.mark.parametrize("n_sub", [1, 2, 3, 7, 16, 64])
def test_beta_volume_is_mu(mu: float, n_sub: int) -> None:
    """Test the β sub-regions add up to μ whatever their number."""
    model = canonical_abc(mu, 0.5, n_sub)
    assert float(np.sum(model.volumes[1:-1])) == pytest.approx(mu, abs=1e-12)
    assert model.total_volume == pytest.approx(ALPHA_VOLUME + mu + GAMMA_VOLUME)


def test_expected_volume_is_linear(rng: np.random.Generator) -> None:
    """Test the expected volume of a mixture is the mixture of the volumes."""
    for _ in range(100):
        n_regions = int(rng.integers(1, 10))
        model = RegionModel.from_arrays(
            rng.uniform(0.1, 10.0, n_regions), rng.uniform(0.0, 1.0, n_regions)
        )
        first = rng.uniform(0.0, 1.0, n_regions)
        second = rng.uniform(0.0, 1.0, n_regions)
        weight = float(rng.uniform())
        mixture = PredictionVector(tuple(weight * first + (1 - weight) * second))
        assert expected_volume(model, mixture) == pytest.approx(
            weight * expected_volume(model, PredictionVector(tuple(first)))
            + (1 - weight) * expected_volume(model, PredictionVector(tuple(second))),
            rel=1e-12,
        )
