# src/experiment/runner.py
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from common.errors import ConfigError, PoiError
from common.logger_utils import setup_logger
from experiment.matching import match_candidates, unmatched_penalty
from experiment.report import McReport, build_report
from functional.dataset import FunctionalDataset, GridSpec
from glm.links import LinkKind
from glm.scoring import GlmFit, fisher_scoring, with_intercept
from glm.selection import SelectionLimits, best_subset_over_delta, profile_single_location
from helpers.formatting import spec_hash, to_builtin
from impact.estimator import PoiConfig, estimate_poi
from kernel.nadaraya_watson import KernelConfig, fit_nw, mase, predict_in_sample
from simulation.dgp import get_preset
from simulation.processes import ProcessSpec
from simulation.responses import ImpactModelSpec, ResponseKind, generate_responses
from simulation.sampling import sample_paths

logger = setup_logger(__name__)

ESTIMATORS = ('TRH', 'POI', 'LMCK')
DEFAULT_ESTIMATORS = ('TRH', 'POI')


@dataclass(frozen=True)
class ExperimentSpec:
    """
    A Monte Carlo design: either a named DGP preset or a custom
    (process, model) pair, crossed with every (n, p) cell.
    """
    dgp: Optional[str] = 'DGP2'
    process: Optional[ProcessSpec] = None
    model: Optional[ImpactModelSpec] = None
    n_list: Tuple[int, ...] = (100,)
    p_list: Tuple[int, ...] = (100,)
    reps: int = 200
    estimators: Tuple[str, ...] = DEFAULT_ESTIMATORS
    c_delta: Optional[float] = None
    seed: int = 0
    nonparametric: bool = False
    c_h: float = 1.0
    max_subset_size: int = 6
    max_pool: int = 20
    n_deltas: int = 10
    s_known: Optional[bool] = None
    a: float = 0.0
    b: float = 1.0
    sampling_method: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'n_list', tuple(int(n) for n in self.n_list))
        object.__setattr__(self, 'p_list', tuple(int(p) for p in self.p_list))
        object.__setattr__(self, 'estimators', tuple(str(e).upper() for e in self.estimators))
        if self.reps < 1:
            raise ConfigError(f"reps must be at least 1, got {self.reps}.")
        if not self.n_list or min(self.n_list) < 2:
            raise ConfigError(f"Every sample size must be at least 2, got {list(self.n_list)}.")
        if not self.p_list or min(self.p_list) < 3:
            raise ConfigError(f"Every grid size must be at least 3, got {list(self.p_list)}.")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown or not self.estimators:
            raise ConfigError(f"Unknown estimators {sorted(unknown)}; use a subset of {list(ESTIMATORS)}.")
        if self.dgp is None and (self.process is None or self.model is None):
            raise ConfigError("A custom experiment needs both a process and an impact model.")
        if self.c_delta is not None and not self.c_delta > 0:
            raise ConfigError(f"c_delta must be positive, got {self.c_delta}.")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}.")
        model = self.resolve()[1]
        if 'LMCK' in self.estimators and model.S != 1:
            raise ConfigError(f"LMCK estimates a single point of impact; the model has S={model.S}.")

    def resolve(self) -> Tuple[ProcessSpec, ImpactModelSpec, float, bool]:
        """
        (process, model, c_delta, s_known) after applying preset defaults.
        """
        if self.dgp is not None:
            preset = get_preset(self.dgp)
            process = self.process or preset.process
            model = self.model or preset.model
            c_delta = self.c_delta if self.c_delta is not None else preset.c_delta
            s_known = self.s_known if self.s_known is not None else preset.s_known
        else:
            process, model = self.process, self.model
            c_delta = self.c_delta if self.c_delta is not None else 1.5
            s_known = bool(self.s_known)
        return process, model, c_delta, s_known

    @property
    def link(self) -> LinkKind:
        model = self.resolve()[1]
        return LinkKind.LOGIT if model.response is ResponseKind.BERNOULLI_LOGIT else LinkKind.IDENTITY

    def to_dict(self) -> Dict[str, Any]:
        data = to_builtin(asdict(self))
        data['process'] = self.process.to_dict() if self.process else None
        data['model'] = self.model.to_dict() if self.model else None
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentSpec':
        data = dict(data)
        if data.get('process'):
            data['process'] = ProcessSpec.from_dict(data['process'])
        if data.get('model'):
            data['model'] = ImpactModelSpec.from_dict(data['model'])
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ConfigError(f"Unknown experiment settings: {sorted(extra)}")
        return cls(**data)

    def fingerprint(self) -> str:
        data = self.to_dict()
        # the worker count never changes results
        data.pop('workers', None)
        return spec_hash(data)


@dataclass
class ReplicationRecord:
    """
    One estimator on one replication. matched, sq_errors, unmatched and
    max_abs_error pair each true location with the nearest candidate the
    estimator produced; penalized_sq_errors and selected_unmatched use the
    selected locations only.
    """
    estimator: str
    n: int
    p: int
    rep: int
    s_true: int
    s_hat: int = 0
    taus_hat: List[float] = field(default_factory=list)
    candidates: List[float] = field(default_factory=list)
    matched: List[Optional[float]] = field(default_factory=list)
    sq_errors: List[Optional[float]] = field(default_factory=list)
    penalized_sq_errors: List[float] = field(default_factory=list)
    unmatched: int = 0
    selected_unmatched: int = 0
    max_abs_error: float = math.nan
    beta_hat: List[float] = field(default_factory=list)
    beta_error: List[float] = field(default_factory=list)
    converged: bool = False
    mase: Optional[float] = None
    delta: float = math.nan
    failure: Optional[str] = None

    @property
    def sort_key(self):
        return self.n, self.p, self.rep, ESTIMATORS.index(self.estimator)


def _glm_on_locations(data: FunctionalDataset, indices: np.ndarray, link: LinkKind) -> GlmFit:
    design = with_intercept(data.X[:, indices]) if indices.size else np.ones((data.n, 1))
    return fisher_scoring(design, data.Y, link)


def _score_locations(
    record: ReplicationRecord,
    taus_hat: np.ndarray,
    candidates: np.ndarray,
    fit: Optional[GlmFit],
    model: ImpactModelSpec,
    grid: GridSpec
):
    taus_true = np.asarray(model.taus, dtype=float)
    taus_hat = np.asarray(taus_hat, dtype=float)
    candidates = np.union1d(np.asarray(candidates, dtype=float), taus_hat)
    record.taus_hat = [float(t) for t in taus_hat]
    record.candidates = [float(t) for t in candidates]
    record.s_hat = int(taus_hat.size)
    if taus_true.size:
        record.matched = match_candidates(taus_true, candidates, grid.a, grid.b)
        selected = match_candidates(taus_true, taus_hat, grid.a, grid.b)
        errors = []
        for j, (tau, match) in enumerate(zip(taus_true, record.matched)):
            penalty = unmatched_penalty(taus_true, j, grid.a, grid.b)
            if match is None:
                record.sq_errors.append(None)
                errors.append(math.sqrt(penalty))
            else:
                record.sq_errors.append((match - tau) ** 2)
                errors.append(abs(match - tau))
            own = selected[j]
            record.penalized_sq_errors.append(penalty if own is None else (own - tau) ** 2)
        record.unmatched = sum(m is None for m in record.matched)
        record.selected_unmatched = sum(m is None for m in selected)
        record.max_abs_error = max(errors)
    if fit is not None:
        record.converged = bool(fit.converged)
        record.beta_hat = [float(b) for b in fit.beta]
        if fit.converged and record.s_hat == model.S and record.selected_unmatched == 0:
            truth = np.concatenate([[model.alpha], model.betas])
            record.beta_error = [float(b) for b in fit.beta - truth]


def _estimate_locations(
    estimator: str,
    data: FunctionalDataset,
    spec: ExperimentSpec,
    model: ImpactModelSpec,
    c_delta: float,
    s_known: bool
):
    """
    (selected grid indices, candidate grid indices, delta, GLM fit) of one
    estimator.
    """
    if estimator == 'TRH':
        estimate = estimate_poi(data, PoiConfig(c_delta=c_delta))
        chosen = estimate.candidates[:model.S] if s_known else estimate.selected
        indices = np.sort(np.array([c.grid_index for c in chosen], dtype=int))
        return indices, estimate.candidate_indices, estimate.delta, _glm_on_locations(data, indices, spec.link)
    if estimator == 'LMCK':
        profile = profile_single_location(data, spec.link)
        return profile.selected_indices, profile.selected_indices, math.nan, profile.fit
    limits = SelectionLimits(
        max_subset_size=model.S if s_known else spec.max_subset_size,
        max_pool=spec.max_pool,
        min_subset_size=model.S if s_known else 0,
    )
    selection = best_subset_over_delta(data, None, spec.link, limits, n_deltas=spec.n_deltas)
    pool = np.array([c.grid_index for c in selection.candidates], dtype=int)
    return selection.selected_indices, pool, selection.best_delta, selection.fit


def _run_replication(args) -> List[ReplicationRecord]:
    """
    One replication for every estimator of the experiment. Module level so that
    ProcessPoolExecutor can pickle it.
    """
    spec, n, p, rep, seed_sequence = args
    process, model, c_delta, s_known = spec.resolve()
    grid = GridSpec(spec.a, spec.b, p)
    path_seed, response_seed = seed_sequence.spawn(2)

    try:
        X = sample_paths(process, grid, n, path_seed, spec.sampling_method)
        draw = generate_responses(X, grid, model, response_seed)
        data = FunctionalDataset(grid, X, draw.Y)
    except PoiError as e:
        logger.debug(f"n={n}, p={p}, rep={rep}: simulation failed: {e}")
        return [
            ReplicationRecord(estimator, n, p, rep, model.S, failure=f"{type(e).__name__}: {e}")
            for estimator in spec.estimators
        ]

    records = []
    for estimator in spec.estimators:
        record = ReplicationRecord(estimator, n, p, rep, model.S)
        try:
            indices, pool, record.delta, fit = _estimate_locations(estimator, data, spec, model, c_delta, s_known)
            taus_hat = grid.points[indices]
            _score_locations(record, taus_hat, grid.points[pool], fit, model, grid)

            if spec.nonparametric:
                if indices.size:
                    nw = fit_nw(data, taus_hat, KernelConfig(c_h=spec.c_h))
                    predictions = predict_in_sample(nw)
                else:
                    predictions = np.full(n, data.Y.mean())
                record.mase = mase([predictions], [draw.mean])
        except PoiError as e:
            logger.debug(f"{estimator} n={n}, p={p}, rep={rep}: {e}")
            record.failure = f"{type(e).__name__}: {e}"
        records.append(record)
    return records


def replication_tasks(spec: ExperimentSpec) -> List[tuple]:
    """
    One task per (n, p, rep). The root SeedSequence spawns a child per cell
    and each cell child spawns a stream per replication, so streams do not
    depend on the worker count or on execution order.
    """
    cells = [(n, p) for n in spec.n_list for p in spec.p_list]
    root = np.random.SeedSequence(spec.seed)
    tasks = []
    for (n, p), cell_sequence in zip(cells, root.spawn(len(cells))):
        for rep, rep_sequence in enumerate(cell_sequence.spawn(spec.reps)):
            tasks.append((spec, n, p, rep, rep_sequence))
    return tasks


def run_experiment(spec: ExperimentSpec, workers: Optional[int] = None) -> McReport:
    """
    Runs every replication of every cell and assembles the McReport.
    Failed replications are recorded, never raised.
    """
    workers = workers or spec.workers
    tasks = replication_tasks(spec)
    name = spec.dgp or 'custom'
    logger.info(
        f"Running {name}: {len(tasks)} replications over n={list(spec.n_list)}, p={list(spec.p_list)} "
        f"with {workers} worker(s)"
    )
    started = time.perf_counter()
    records: List[ReplicationRecord] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            futures = [executor.submit(_run_replication, task) for task in tasks]
            for done, future in enumerate(as_completed(futures), start=1):
                records.extend(future.result())
                if done % max(1, len(tasks) // 10) == 0:
                    logger.debug(f"{done}/{len(tasks)} replications finished")
    else:
        for task in tasks:
            records.extend(_run_replication(task))
    records.sort(key=lambda r: r.sort_key)
    runtime = time.perf_counter() - started

    failures = sum(r.failure is not None for r in records)
    if failures:
        logger.warning(f"{failures} of {len(records)} estimator runs failed; see the 'failure' column")
    logger.info(f"Finished in {runtime:.1f}s")
    return build_report(spec, records, runtime)
