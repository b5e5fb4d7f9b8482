# tests/test_kernel.py
import math

import numpy as np
import pytest

from common.errors import ConfigError, DataError, ShapeMismatchError
from functional.dataset import FunctionalDataset, GridSpec
from kernel.nadaraya_watson import (
    KernelConfig,
    KernelKind,
    NwFit,
    fit_nw,
    mase,
    predict_in_sample,
    predict_many,
    predict_nw,
)


def make_fit(anchors, responses, bandwidths, kernel=KernelKind.GAUSSIAN):
    anchors = np.asarray(anchors, dtype=float)
    if anchors.ndim == 1:
        anchors = anchors[:, None]
    return NwFit(
        anchors=anchors,
        responses=np.asarray(responses, dtype=float),
        bandwidths=np.asarray(bandwidths, dtype=float),
        kernel=kernel,
        indices=np.arange(anchors.shape[1]),
    )


def naive_predict(anchors, responses, bandwidths, query):
    numerator = denominator = 0.0
    for i in range(anchors.shape[0]):
        weight = 1.0
        for r in range(anchors.shape[1]):
            z = (anchors[i, r] - query[r]) / bandwidths[r]
            weight *= math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
        numerator += weight * responses[i]
        denominator += weight
    return numerator / denominator


@pytest.fixture
def kernel_dataset(rng):
    grid = GridSpec(0.0, 1.0, 11)
    X = rng.standard_normal((40, 11))
    Y = np.sin(X[:, 3]) + 0.5 * X[:, 7] + 0.1 * rng.standard_normal(40)
    return FunctionalDataset(grid, X, Y)


def test_constant_responses_are_reproduced(kernel_dataset):
    fit = fit_nw(kernel_dataset.with_responses(np.full(40, 2.5)), [0.3, 0.7])
    np.testing.assert_allclose(predict_many(fit, np.random.default_rng(0).standard_normal((6, 2))), 2.5, rtol=1e-12)


def test_tiny_bandwidth_interpolates(kernel_dataset):
    scale = kernel_dataset.X[:, 3].std()
    fit = fit_nw(kernel_dataset, [0.3], KernelConfig(bandwidths=[1e-6 * scale]))
    np.testing.assert_allclose(predict_in_sample(fit), kernel_dataset.Y, rtol=1e-12)


def test_five_point_hand_computation():
    anchors = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    responses = np.array([1.0, 2.0, 0.0, 3.0, 5.0])
    weights = np.exp(-0.5 * (anchors - 1.5) ** 2)
    expected = float(weights @ responses / weights.sum())
    assert predict_nw(make_fit(anchors, responses, [1.0]), [1.5]) == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("S", [1, 2, 3])
def test_matches_naive_double_loop(S):
    rng = np.random.default_rng(S)
    anchors = rng.standard_normal((20, S))
    responses = rng.standard_normal(20)
    bandwidths = rng.uniform(0.3, 1.0, S)
    fit = make_fit(anchors, responses, bandwidths)
    queries = rng.standard_normal((5, S))
    expected = [naive_predict(anchors, responses, bandwidths, q) for q in queries]
    np.testing.assert_allclose(predict_many(fit, queries), expected, rtol=1e-12)


def test_predictions_stay_in_the_response_range(kernel_dataset):
    fit = fit_nw(kernel_dataset, [0.3, 0.7])
    predictions = predict_many(fit, np.random.default_rng(1).standard_normal((50, 2)) * 3)
    assert np.all(predictions >= kernel_dataset.Y.min() - 1e-12)
    assert np.all(predictions <= kernel_dataset.Y.max() + 1e-12)


def test_observation_order_does_not_matter(kernel_dataset):
    permutation = np.random.default_rng(2).permutation(40)
    permuted = FunctionalDataset(kernel_dataset.grid, kernel_dataset.X[permutation], kernel_dataset.Y[permutation])
    queries = np.random.default_rng(3).standard_normal((7, 2))
    original = predict_many(fit_nw(kernel_dataset, [0.3, 0.7]), queries)
    np.testing.assert_allclose(predict_many(fit_nw(permuted, [0.3, 0.7]), queries), original, rtol=1e-12)


def test_huge_bandwidth_gives_the_sample_mean(kernel_dataset):
    fit = fit_nw(kernel_dataset, [0.3, 0.7], KernelConfig(bandwidths=[1e6, 1e6]))
    query = fit.anchors.mean(axis=0)
    assert predict_nw(fit, query) == pytest.approx(kernel_dataset.Y.mean(), abs=1e-6)


def test_rate_rule_bandwidths():
    rng = np.random.default_rng(5)
    grid = GridSpec(0.0, 1.0, 11)
    data = FunctionalDataset(grid, rng.standard_normal((100, 11)), rng.standard_normal(100))
    fit = fit_nw(data, [0.2, 0.6], KernelConfig(c_h=2.0))
    sd = data.X[:, [2, 6]].std(axis=0, ddof=1)
    np.testing.assert_allclose(fit.bandwidths, 2.0 * sd * 100 ** (-1 / 6), rtol=1e-12)
    np.testing.assert_array_equal(fit.anchors, data.X[:, [2, 6]])
    assert fit.indices.tolist() == [2, 6]


def test_explicit_bandwidths_pass_through(kernel_dataset):
    fit = fit_nw(kernel_dataset, [0.3, 0.7], KernelConfig(bandwidths=[0.4, 0.9]))
    assert fit.bandwidths.tolist() == [0.4, 0.9]


def test_bandwidth_validation(kernel_dataset):
    with pytest.raises(ShapeMismatchError):
        fit_nw(kernel_dataset, [0.3, 0.7], KernelConfig(bandwidths=[0.4]))
    with pytest.raises(ConfigError):
        fit_nw(kernel_dataset, [0.3], KernelConfig(bandwidths=[0.0]))
    with pytest.raises(ConfigError):
        KernelConfig(kernel='triangular')


@pytest.mark.parametrize("kernel", [KernelKind.GAUSSIAN, KernelKind.EPANECHNIKOV])
def test_in_sample_predictions_match_a_per_query_loop(kernel):
    rng = np.random.default_rng(9)
    anchors = rng.standard_normal((30, 3))
    responses = rng.standard_normal(30)
    fit = make_fit(anchors, responses, [0.8, 1.2, 1.5], kernel=kernel)
    expected = [predict_nw(fit, anchors[i]) for i in range(30)]
    np.testing.assert_allclose(predict_in_sample(fit), expected, rtol=1e-12)
    if kernel is KernelKind.GAUSSIAN:
        naive = [naive_predict(anchors, responses, fit.bandwidths, q) for q in anchors]
        np.testing.assert_allclose(predict_in_sample(fit), naive, rtol=1e-12)


def test_compact_kernel_falls_back_to_nearest_anchor():
    fit = make_fit([0.0, 1.0, 5.0], [10.0, 20.0, 30.0], [0.1], kernel=KernelKind.EPANECHNIKOV)
    assert predict_nw(fit, [4.2]) == 30.0
    assert predict_nw(fit, [1.02]) == pytest.approx(20.0)


def test_epanechnikov_weights():
    fit = make_fit([0.0, 1.0], [1.0, 3.0], [2.0], kernel=KernelKind.EPANECHNIKOV)
    # z = (0 - 0.5)/2 and (1 - 0.5)/2 are symmetric
    assert predict_nw(fit, [0.5]) == pytest.approx(2.0)


def test_fit_needs_impact_points_and_two_curves(kernel_dataset):
    with pytest.raises(DataError):
        fit_nw(kernel_dataset, [])
    single = FunctionalDataset(kernel_dataset.grid, kernel_dataset.X[:1], kernel_dataset.Y[:1])
    with pytest.raises(DataError):
        fit_nw(single, [0.3])


def test_mase():
    assert mase([[1.0, 2.0]], [[1.0, 2.0]]) == 0.0
    assert mase([[0.3]], [[0.0]]) == pytest.approx(0.09)
    assert mase([[0.0, 0.0], [1.0]], [[1.0, 1.0], [1.0]]) == pytest.approx(0.5)
    with pytest.raises(ShapeMismatchError):
        mase([[1.0, 2.0]], [[1.0]])
    with pytest.raises(ShapeMismatchError):
        mase([[1.0]], [[1.0], [2.0]])
