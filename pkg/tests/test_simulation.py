# tests/test_simulation.py
import math

import numpy as np
import pytest

from common.errors import ConfigError, FactorizationError, TauOutOfRangeError, UnsupportedProcessError
from functional.dataset import GridSpec
from simulation.dgp import DGP_PRESETS, get_preset
from simulation.processes import ProcessKind, ProcessSpec, ScaleLaw, covariance_function, covariance_matrix
from simulation.responses import ImpactModelSpec, ResponseKind, generate_responses
from simulation.sampling import (
    apply_elliptical_scaling,
    regularized_cholesky,
    sample_ebm_paths,
    sample_gaussian_paths,
    sample_paths,
)


def oup_variance(t, theta=5.0, sigma_u2=3.5):
    return sigma_u2 / (2 * theta) * (1 - math.exp(-2 * theta * t))


def test_oup_variance_vanishes_at_origin():
    assert covariance_function(ProcessSpec.oup(), np.array(0.0), np.array(0.0)) == 0.0


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
def test_oup_diagonal_matches_closed_form(t):
    value = covariance_function(ProcessSpec.oup(), np.array(t), np.array(t))
    assert float(value) == pytest.approx(oup_variance(t), rel=1e-14)


def test_gcm_at_lag_d():
    value = covariance_function(ProcessSpec.gcm(0.1), np.array(0.25), np.array(0.35))
    assert float(value) == pytest.approx(math.exp(-1), rel=1e-12)


def test_bm_covariance_is_min():
    grid = GridSpec(0.0, 1.0, 5)
    cov = covariance_matrix(ProcessSpec.bm(2.0), grid)
    s, t = np.meshgrid(grid.points, grid.points, indexing='ij')
    np.testing.assert_allclose(cov, 2.0 * np.minimum(s, t))


@pytest.mark.parametrize("spec", [ProcessSpec.oup(), ProcessSpec.gcm(0.1), ProcessSpec.bm()])
def test_covariance_matrix_is_symmetric(spec):
    cov = covariance_matrix(spec, GridSpec(0.0, 1.0, 40))
    np.testing.assert_array_equal(cov, cov.T)


@pytest.mark.parametrize("spec", [
    ProcessSpec.ebm(),
    ProcessSpec.elliptical(ProcessSpec.oup(), ScaleLaw('half_normal', shift=0.5)),
])
def test_non_gaussian_kinds_have_no_covariance_matrix(spec):
    with pytest.raises(UnsupportedProcessError):
        covariance_matrix(spec, GridSpec(0.0, 1.0, 10))


def test_regularized_cholesky_handles_rank_deficient_matrix():
    cov = np.ones((5, 5))
    factor = regularized_cholesky(cov)
    np.testing.assert_allclose(factor @ factor.T, cov, atol=1e-5)


def test_regularized_cholesky_gives_up_on_indefinite_matrix():
    with pytest.raises(FactorizationError, match="smallest eigenvalue"):
        regularized_cholesky(np.diag([1.0, -1.0]))


def test_gcm_on_fine_grid_factorizes():
    paths = sample_gaussian_paths(ProcessSpec.gcm(0.1), GridSpec(0.0, 1.0, 400), 3, 1)
    assert paths.shape == (3, 400)
    assert np.all(np.isfinite(paths))


def test_gaussian_sampling_is_deterministic_and_shaped():
    grid = GridSpec(0.0, 1.0, 12)
    first = sample_gaussian_paths(ProcessSpec.oup(), grid, 4, 99)
    second = sample_gaussian_paths(ProcessSpec.oup(), grid, 4, 99)
    np.testing.assert_array_equal(first, second)
    assert sample_gaussian_paths(ProcessSpec.oup(), grid, 1, 3).shape == (1, 12)


def test_oup_empirical_variance_at_midpoint():
    grid = GridSpec(0.0, 1.0, 11)
    n = 10_000
    paths = sample_gaussian_paths(ProcessSpec.oup(), grid, n, 2024)
    target = oup_variance(0.5)
    se = target * math.sqrt(2.0 / (n - 1))
    assert abs(paths[:, 5].var(ddof=1) - target) < 5 * se


@pytest.mark.parametrize("spec", [ProcessSpec.oup(), ProcessSpec.gcm(0.1), ProcessSpec.gcm(0.3), ProcessSpec.bm()])
def test_cholesky_sampling_matches_covariance(spec):
    grid = GridSpec(0.0, 1.0, 6)
    n = 20_000
    paths = sample_gaussian_paths(spec, grid, n, 29)
    cov = covariance_matrix(spec, grid)
    empirical = paths.T @ paths / n
    se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov ** 2) / n)
    # OUP and BM are pinned at 0 at t=0, where only the nugget remains
    start = 0 if spec.kind is ProcessKind.GCM else 1
    block = slice(start, None)
    assert np.all(np.abs(empirical - cov)[block, block] <= 5 * se[block, block])


@pytest.mark.parametrize("spec", [ProcessSpec.oup(), ProcessSpec.bm()])
def test_markov_recursion_matches_covariance(spec):
    grid = GridSpec(0.0, 1.0, 6)
    n = 20_000
    paths = sample_gaussian_paths(spec, grid, n, 5, method='markov')
    cov = covariance_matrix(spec, grid)
    empirical = paths.T @ paths / n
    se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov ** 2) / n)
    assert np.all(np.abs(empirical - cov) <= 5 * se + 1e-12)


def test_markov_recursion_is_not_available_for_gcm():
    with pytest.raises(UnsupportedProcessError):
        sample_gaussian_paths(ProcessSpec.gcm(), GridSpec(0.0, 1.0, 5), 2, 0, method='markov')


def test_ebm_starts_at_one():
    paths = sample_ebm_paths(GridSpec(0.0, 1.0, 21), 50, 8)
    np.testing.assert_array_equal(paths[:, 0], 1.0)
    assert np.all(paths > 0)


def test_ebm_lognormal_mean():
    n = 10_000
    paths = sample_ebm_paths(GridSpec(0.0, 1.0, 11), n, 17)
    target = math.exp(0.5)
    se = math.sqrt(math.exp(2.0) - math.exp(1.0)) / math.sqrt(n)
    assert abs(paths[:, -1].mean() - target) < 5 * se


def test_elliptical_scaling_with_degenerate_laws(rng):
    X = rng.standard_normal((6, 4))
    np.testing.assert_array_equal(apply_elliptical_scaling(X, ScaleLaw('constant', value=1.0), 0), X)
    np.testing.assert_array_equal(apply_elliptical_scaling(X, ScaleLaw('constant', value=2.0), 0), 2 * X)


def test_elliptical_second_moment_scales_covariance():
    law = ScaleLaw('half_normal', shift=0.5)
    spec = ProcessSpec.elliptical(ProcessSpec.oup(), law)
    grid = GridSpec(0.0, 1.0, 5)
    n = 40_000
    X = sample_paths(spec, grid, n, 11)
    target = law.second_moment() * oup_variance(0.5)
    assert np.mean(X[:, 2] ** 2) == pytest.approx(target, rel=0.06)


def test_scale_law_rejects_infinite_variance():
    with pytest.raises(ConfigError):
        ScaleLaw('student', nu=2.0)


def test_null_model_gives_fair_coin():
    grid = GridSpec(0.0, 1.0, 10)
    X = np.zeros((4000, 10))
    draw = generate_responses(X, grid, ImpactModelSpec(alpha=0.0), 3)
    assert set(np.unique(draw.Y)) <= {0.0, 1.0}
    assert abs(draw.Y.mean() - 0.5) < 5 * 0.5 / math.sqrt(4000)


def test_identity_response_without_noise_is_constant(rng):
    grid = GridSpec(0.0, 1.0, 10)
    model = ImpactModelSpec(alpha=2.5, betas=(0.0,), taus=(0.5,), response=ResponseKind.GAUSSIAN_IDENTITY)
    draw = generate_responses(rng.standard_normal((7, 10)), grid, model, 0)
    np.testing.assert_array_equal(draw.Y, 2.5)


def test_identity_response_noise_is_centered():
    grid = GridSpec(0.0, 1.0, 20)
    model = ImpactModelSpec(alpha=1.0, betas=(2.0,), taus=(0.4,), response='gaussian_identity', sigma_eps=0.7)
    X = sample_paths(ProcessSpec.oup(), grid, 5000, 4)
    draw = generate_responses(X, grid, model, 5)
    residual = draw.Y - draw.mean
    assert abs(residual.mean()) < 5 * 0.7 / math.sqrt(5000)


def test_responses_report_mapped_indices():
    grid = GridSpec(0.0, 1.0, 100)
    draw = generate_responses(np.zeros((3, 100)), grid, get_preset('DGP2').model, 0)
    assert draw.indices.tolist() == [33, 66]


def test_location_on_the_boundary_is_rejected():
    grid = GridSpec(0.0, 1.0, 10)
    model = ImpactModelSpec(alpha=0.0, betas=(1.0,), taus=(1.0,))
    with pytest.raises(TauOutOfRangeError):
        generate_responses(np.zeros((2, 10)), grid, model, 0)


def test_model_rejects_unsorted_locations():
    with pytest.raises(ConfigError):
        ImpactModelSpec(alpha=0.0, betas=(1.0, 1.0), taus=(0.6, 0.3))


def test_presets():
    assert sorted(DGP_PRESETS) == ['DGP1', 'DGP2', 'DGP3', 'DGP4', 'DGP5']
    dgp1 = get_preset('dgp1')
    assert dgp1.model.taus == (0.5,) and dgp1.model.betas == (4.0,) and dgp1.model.alpha == 1.0
    assert dgp1.s_known
    assert get_preset('DGP5').c_delta == 3.0
    assert get_preset('DGP3').model.S == 4
    with pytest.raises(ConfigError):
        get_preset('DGP9')


def test_process_spec_dict_round_trip():
    spec = ProcessSpec.elliptical(ProcessSpec.gcm(0.2), ScaleLaw('uniform', low=0.5, high=2.0))
    assert ProcessSpec.from_dict(spec.to_dict()) == spec
