# tests/test_experiment.py
import itertools
from types import SimpleNamespace

import numpy as np
import pytest

from common.errors import ConfigError, DataError
from experiment.matching import match_candidates, matching_intervals, unmatched_penalty
from experiment.metrics import fit_quality, mcfadden_r2, per_models, somers_d
from experiment.runner import ExperimentSpec, ReplicationRecord, _score_locations, replication_tasks, run_experiment
from functional.dataset import FunctionalDataset, GridSpec
from glm.scoring import null_log_likelihood
from helpers.formatting import to_builtin
from simulation.processes import ProcessSpec
from simulation.responses import ImpactModelSpec


def test_single_location_takes_the_nearest_candidate():
    assert match_candidates([0.5], [0.1, 0.45, 0.9]) == [0.45]


def test_matching_rule_example():
    assert match_candidates([1 / 3, 2 / 3], [0.30, 0.35, 0.70]) == [0.35, 0.70]


def test_matching_without_candidates():
    assert match_candidates([1 / 3, 2 / 3], []) == [None, None]


def test_matching_intervals_are_half_open():
    # 0.5 belongs to the second interval; 1.0 to the last, closed one
    assert match_candidates([0.25, 0.75], [0.5]) == [None, 0.5]
    assert match_candidates([0.25, 0.75], [1.0]) == [None, 1.0]
    assert matching_intervals([0.25, 0.75], 0.0, 1.0).tolist() == [0.0, 0.5, 1.0]


def test_matching_rejects_unsorted_truth():
    with pytest.raises(ConfigError):
        match_candidates([0.6, 0.2], [0.3])


def test_matches_are_distinct_and_inside_their_intervals():
    rng = np.random.default_rng(8)
    taus = [0.2, 0.45, 0.8]
    bounds = matching_intervals(taus, 0.0, 1.0)
    for _ in range(50):
        matched = match_candidates(taus, rng.uniform(0, 1, rng.integers(0, 6)))
        found = [m for m in matched if m is not None]
        assert len(found) == len(set(found))
        for j, m in enumerate(matched):
            if m is not None:
                assert bounds[j] <= m <= bounds[j + 1]


def test_unmatched_penalty_is_half_width_squared():
    assert unmatched_penalty([1 / 3, 2 / 3], 0) == pytest.approx(0.0625)
    assert unmatched_penalty([1 / 3, 2 / 3], 1) == pytest.approx(0.0625)
    assert unmatched_penalty([0.5], 0, 0.0, 2.0) == pytest.approx(1.0)


def test_per_models_on_a_monotone_curve():
    grid = GridSpec(0.0, 1.0, 5)
    data = FunctionalDataset(grid, np.array([[0.1, 0.2, 0.5, 0.9, 1.4]]), np.array([1.0]))
    designs = per_models(data)
    np.testing.assert_array_equal(designs['PER-1'], [[1.4, 1.4]])
    np.testing.assert_array_equal(designs['PER-2'], [[1.4, 0.1, 1.4]])


def test_per_models_break_ties_at_the_first_index():
    grid = GridSpec(0.0, 1.0, 5)
    data = FunctionalDataset(grid, np.array([[0.0, -1.0, 0.0, 1.0, 0.5]]), np.array([0.0]))
    assert per_models(data)['PER-1'].tolist() == [[-1.0, 0.5]]


def test_per_models_match_a_manual_scan(rng):
    grid = GridSpec(0.0, 1.0, 7)
    X = rng.standard_normal((3, 7))
    designs = per_models(FunctionalDataset(grid, X, np.zeros(3)))
    for i in range(3):
        best_abs = best_pos = best_neg = 0
        for j in range(7):
            if abs(X[i, j]) > abs(X[i, best_abs]):
                best_abs = j
            if X[i, j] > X[i, best_pos]:
                best_pos = j
            if X[i, j] < X[i, best_neg]:
                best_neg = j
        assert designs['PER-1'][i].tolist() == [X[i, best_abs], X[i, 6]]
        assert designs['PER-2'][i].tolist() == [X[i, best_pos], X[i, best_neg], X[i, 6]]


def test_somers_d_edge_cases():
    y = np.array([0.0, 1.0, 0.0, 1.0])
    assert somers_d(y, np.full(4, 0.4)) == 0.0
    assert somers_d(y, np.array([0.1, 0.9, 0.2, 0.8])) == 1.0
    assert somers_d(y, np.array([0.9, 0.1, 0.8, 0.2])) == -1.0


def test_somers_d_matches_pair_count(rng):
    y = (rng.uniform(size=25) < 0.4).astype(float)
    y[:2] = [0.0, 1.0]
    scores = np.round(rng.uniform(size=25), 1)
    concordant = discordant = 0
    for i, j in itertools.combinations(range(25), 2):
        if y[i] == y[j]:
            continue
        positive, negative = (i, j) if y[i] == 1 else (j, i)
        if scores[positive] > scores[negative]:
            concordant += 1
        elif scores[positive] < scores[negative]:
            discordant += 1
    pairs = int(y.sum()) * int((1 - y).sum())
    assert somers_d(y, scores) == pytest.approx((concordant - discordant) / pairs, abs=1e-12)


def test_somers_d_rejects_degenerate_responses():
    with pytest.raises(DataError):
        somers_d(np.ones(5), np.linspace(0, 1, 5))
    with pytest.raises(DataError):
        somers_d(np.array([0.0, 0.5, 1.0]), np.linspace(0, 1, 3))


def test_mcfadden_r2_for_a_reported_model():
    y = np.array([1.0] * 34 + [0.0] * 31)
    null = null_log_likelihood(y)
    assert null == pytest.approx(-45.0, abs=0.1)
    assert mcfadden_r2(-36.03, null) == pytest.approx(0.2, abs=0.01)
    assert mcfadden_r2(null, null) == 0.0


def test_fit_quality():
    y = np.array([0.0, 0.0, 1.0, 1.0])
    r2, d = fit_quality(y, np.array([0.2, 0.3, 0.6, 0.9]), -1.5, -2.0)
    assert r2 == pytest.approx(0.25)
    assert d == 1.0


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec(reps=0)
    with pytest.raises(ConfigError):
        ExperimentSpec(estimators=('MPDP',))
    with pytest.raises(ConfigError):
        ExperimentSpec(dgp=None)
    with pytest.raises(ConfigError):
        ExperimentSpec.from_dict({'dgp': 'DGP2', 'replications': 3})
    assert ExperimentSpec(dgp='DGP5').resolve()[2] == 3.0


def test_spec_dictionary_round_trip():
    spec = ExperimentSpec(
        dgp=None,
        process=ProcessSpec.gcm(0.2),
        model=ImpactModelSpec(alpha=0.5, betas=(2.0,), taus=(0.4,), response='gaussian_identity', sigma_eps=0.3),
        n_list=(50,),
        p_list=(20,),
        reps=2,
    )
    again = ExperimentSpec.from_dict(spec.to_dict())
    assert again == spec
    assert again.fingerprint() == spec.fingerprint()
    assert ExperimentSpec.from_dict({**spec.to_dict(), 'workers': 4}).fingerprint() == spec.fingerprint()


def test_replication_streams_are_distinct():
    spec = ExperimentSpec(dgp='DGP1', n_list=(50, 60), p_list=(20,), reps=30)
    tasks = replication_tasks(spec)
    assert len(tasks) == 60
    states = {tuple(task[4].generate_state(4)) for task in tasks}
    assert len(states) == 60


@pytest.fixture(scope='module')
def small_spec():
    return ExperimentSpec(
        dgp='DGP1', n_list=(60,), p_list=(30,), reps=3, seed=11, n_deltas=2, nonparametric=True
    )


def test_run_is_independent_of_worker_count(small_spec):
    serial = run_experiment(small_spec, workers=1)
    parallel = run_experiment(small_spec, workers=2)
    assert [to_builtin(r) for r in serial.records] == [to_builtin(r) for r in parallel.records]
    assert serial.metadata['spec_hash'] == parallel.metadata['spec_hash']


def test_report_aggregates(small_spec):
    report = run_experiment(small_spec)
    assert len(report.records) == 2 * small_spec.reps
    for estimator in ('TRH', 'POI'):
        cell = report.cell(estimator, 60, 30)
        records = [r for r in report.records if r.estimator == estimator and r.failure is None]
        assert cell['reps'] == small_spec.reps
        assert cell['mase'] == np.mean([r.mase for r in records])
        assert cell['avg_mse_penalized'] == pytest.approx(np.mean(cell['mse_penalized']))
        assert 0.0 <= cell['p_correct'] <= 1.0
    # S = 1 is known for DGP1, so every estimator reports exactly one location
    assert all(r.s_hat == 1 for r in report.records if r.failure is None)
    frame = report.to_frame()
    assert list(frame['rep'][:2]) == [0, 0]
    assert set(frame['estimator']) == {'TRH', 'POI'}


def test_failed_replications_are_recorded_not_raised():
    spec = ExperimentSpec(
        dgp=None,
        process=ProcessSpec.oup(),
        model=ImpactModelSpec(alpha=0.0, betas=(1.0,), taus=(0.5,)),
        n_list=(20,),
        p_list=(3,),
        reps=2,
        estimators=('TRH',),
    )
    report = run_experiment(spec)
    assert len(report.records) == 2
    assert all(r.failure.startswith('InadmissibleDeltaError') for r in report.records)
    cell = report.cell('TRH', 20, 3)
    assert cell['reps'] == 2 and cell['failures'] == 2
    assert cell['p_correct'] == 0.0


@pytest.fixture
def two_point_model():
    return ImpactModelSpec(alpha=1.0, betas=(-6.0, 5.0), taus=(1 / 3, 2 / 3))


def test_location_errors_use_every_candidate(two_point_model):
    record = ReplicationRecord('TRH', 100, 100, 0, 2)
    grid = GridSpec(0.0, 1.0, 100)
    _score_locations(record, np.array([0.35]), np.array([0.1, 0.35, 0.7]), None, two_point_model, grid)
    assert record.s_hat == 1
    assert record.taus_hat == [0.35]
    assert record.matched == [0.35, 0.7]
    assert record.sq_errors == pytest.approx([(0.35 - 1 / 3) ** 2, (0.7 - 2 / 3) ** 2])
    assert record.unmatched == 0
    # the second location was not selected, so it carries the interval penalty
    assert record.selected_unmatched == 1
    assert record.penalized_sq_errors == pytest.approx([(0.35 - 1 / 3) ** 2, 0.0625])
    assert record.max_abs_error == pytest.approx(0.7 - 2 / 3)


def test_coefficient_errors_need_every_location_selected(two_point_model):
    grid = GridSpec(0.0, 1.0, 100)
    fit = SimpleNamespace(converged=True, beta=np.array([1.5, -6.0, 4.0]))
    both_left = ReplicationRecord('TRH', 100, 100, 0, 2)
    _score_locations(both_left, np.array([0.30, 0.35]), np.array([0.30, 0.35, 0.7]), fit, two_point_model, grid)
    assert both_left.s_hat == 2
    assert both_left.selected_unmatched == 1
    assert both_left.beta_error == []
    assert both_left.beta_hat == [1.5, -6.0, 4.0]

    one_each = ReplicationRecord('TRH', 100, 100, 0, 2)
    _score_locations(one_each, np.array([0.35, 0.7]), np.array([0.35, 0.7]), fit, two_point_model, grid)
    assert one_each.beta_error == pytest.approx([0.5, 0.0, -1.0])


def test_single_point_estimators_side_by_side():
    spec = ExperimentSpec(dgp='DGP1', n_list=(80,), p_list=(20,), reps=2, estimators=('POI', 'LMCK'), seed=3, n_deltas=2)
    report = run_experiment(spec)
    assert [r.estimator for r in report.records] == ['POI', 'LMCK', 'POI', 'LMCK']
    lmck = [r for r in report.records if r.estimator == 'LMCK']
    assert all(r.failure is None and r.s_hat == 1 for r in lmck)
    assert all(r.taus_hat == r.candidates for r in lmck)
    locations = report.location_frame()
    assert locations[['n', 'p']].values.tolist() == [[80, 20]]
    assert {'POI_mse_tau_1', 'LMCK_mse_tau_1', 'POI_avg_mse', 'LMCK_avg_mse'} <= set(locations.columns)
    assert locations['LMCK_avg_mse'][0] == pytest.approx(report.cell('LMCK', 80, 20)['avg_mse_matched'])
    assert report.to_dict()['locations'][0]['n'] == 80


def test_single_point_estimator_needs_one_location():
    with pytest.raises(ConfigError):
        ExperimentSpec(dgp='DGP2', estimators=('LMCK',))
