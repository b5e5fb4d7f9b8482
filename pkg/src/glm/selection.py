# src/glm/selection.py
import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from common.errors import ConfigError, InadmissibleDeltaError, NumericalError
from common.logger_utils import setup_logger
from functional.dataset import FunctionalDataset, GridSpec
from glm.links import get_link
from glm.scoring import GlmFit, fisher_scoring, quasi_deviance, with_intercept
from impact.estimator import Candidate, DifferenceOrder, PoiConfig, check_k_delta, estimate_poi

logger = setup_logger(__name__)


class Criterion(str, enum.Enum):
    BIC = 'bic'
    QUASI = 'quasi'


@dataclass(frozen=True)
class SelectionLimits:
    max_subset_size: int = 6
    max_pool: int = 20
    min_subset_size: int = 0

    def __post_init__(self):
        if not 0 <= self.min_subset_size <= max(self.max_subset_size, 0):
            raise ConfigError(
                f"min_subset_size must lie in [0, max_subset_size], got {self.min_subset_size}."
            )
        if self.max_subset_size < 0:
            raise ConfigError(f"max_subset_size must be nonnegative, got {self.max_subset_size}.")
        if self.max_pool < 1:
            raise ConfigError(f"max_pool must be positive, got {self.max_pool}.")


@dataclass(frozen=True)
class TraceRecord:
    delta: float
    k_delta: int
    subset: Tuple[int, ...]
    grid_indices: Tuple[int, ...]
    K: int
    loglik: float
    score: float
    converged: bool


@dataclass
class SelectionResult:
    delta_grid: List[float]
    k_grid: List[int]
    best_delta: float
    best_k_delta: int
    best_subset: Tuple[int, ...]
    selected_indices: np.ndarray
    locations: np.ndarray
    fit: GlmFit
    trace: List[TraceRecord]
    candidates: List[Candidate] = field(default_factory=list)
    criterion: Criterion = Criterion.BIC
    warnings: List[str] = field(default_factory=list)

    @property
    def s_hat(self) -> int:
        return len(self.best_subset)

    @property
    def best_score(self) -> float:
        return min(r.score for r in self.trace if r.converged) if any(r.converged for r in self.trace) else math.nan


def default_delta_grid(grid: GridSpec, n_deltas: int = 10, order=DifferenceOrder.SECOND) -> List[int]:
    """
    About n_deltas log-spaced k_delta values with delta in [step, (b-a)/4],
    restricted to admissible values.
    """
    if n_deltas < 1:
        raise ConfigError(f"n_deltas must be positive, got {n_deltas}.")
    k_max = int(math.floor((grid.b - grid.a) / 4.0 / grid.step + 1e-9))
    reach = 1 if int(order) == 2 else 2
    k_admissible = int(math.ceil((grid.p - 1) / 2.0 / reach)) - 1
    k_max = max(1, min(k_max, k_admissible))
    ks = np.unique(np.round(np.geomspace(1, k_max, n_deltas)).astype(int))
    return [check_k_delta(int(k), grid.p, order) for k in ks]


def _candidate_pool(candidates: Sequence[Candidate], statistics: np.ndarray, max_pool: int) -> List[int]:
    """
    Positions in the candidate list kept for enumeration; beyond max_pool the
    largest standardized statistics win, extraction order is preserved.
    """
    positions = list(range(len(candidates)))
    if len(positions) <= max_pool:
        return positions
    ranked = sorted(positions, key=lambda i: (-statistics[i], i))[:max_pool]
    return sorted(ranked)


def _fit_subset(data: FunctionalDataset, grid_indices: Tuple[int, ...], link, criterion: Criterion):
    design = with_intercept(data.X[:, list(grid_indices)]) if grid_indices else np.ones((data.n, 1))
    try:
        fit = fisher_scoring(design, data.Y, link)
    except NumericalError as e:
        logger.debug(f"Subset {grid_indices} skipped: {e}")
        return None, math.inf
    if not fit.converged:
        return fit, math.inf
    if criterion is Criterion.QUASI:
        score = quasi_deviance(design, data.Y, fit.beta, link) + fit.K * math.log(data.n)
    else:
        score = fit.bic
    return fit, score


def best_subset_over_delta(
    data: FunctionalDataset,
    delta_grid: Optional[Sequence[int]] = None,
    link='logit',
    limits: Optional[SelectionLimits] = None,
    center: bool = False,
    criterion=Criterion.BIC,
    n_deltas: int = 10
) -> SelectionResult:
    """
    POI estimator. For each k_delta in delta_grid the detector's candidate
    list is the pool for an exhaustive subset search up to
    limits.max_subset_size; the global minimizer of the criterion wins,
    ties going to fewer predictors and then to the smaller delta. The
    intercept-only model is evaluated for every delta unless
    limits.min_subset_size asks for a fixed number of points.
    """
    limits = limits or SelectionLimits()
    link = get_link(link)
    criterion = Criterion(criterion)
    if center:
        data = data.centered()
    k_grid = list(delta_grid) if delta_grid is not None else default_delta_grid(data.grid, n_deltas)
    if not k_grid:
        raise InadmissibleDeltaError("The delta grid for subset selection is empty.")

    null_fit, null_score = _fit_subset(data, (), link, criterion)
    if null_fit is None:
        raise NumericalError(f"The intercept-only model cannot be fitted on n={data.n} observations.")
    cache = {(): (null_fit, null_score)}
    trace: List[TraceRecord] = []
    fits = {}
    pools = {}
    best_key = None

    for k_delta in k_grid:
        k_delta = check_k_delta(int(k_delta), data.p)
        delta = data.grid.delta_for(k_delta)
        estimate = estimate_poi(data, PoiConfig(k_delta=k_delta))
        candidates = estimate.candidates
        pools[k_delta] = candidates
        pool = _candidate_pool(candidates, estimate.statistics, limits.max_pool)
        if len(pool) < len(candidates):
            logger.debug(f"k_delta={k_delta}: {len(candidates)} candidates, enumerating the top {len(pool)}")

        for size in range(limits.min_subset_size, min(limits.max_subset_size, len(pool)) + 1):
            for subset in itertools.combinations(pool, size):
                grid_indices = tuple(sorted(candidates[i].grid_index for i in subset))
                if grid_indices not in cache:
                    cache[grid_indices] = _fit_subset(data, grid_indices, link, criterion)
                fit, score = cache[grid_indices]
                converged = fit is not None and fit.converged
                trace.append(TraceRecord(
                    delta=delta,
                    k_delta=k_delta,
                    subset=tuple(subset),
                    grid_indices=grid_indices,
                    K=size + 1,
                    loglik=fit.loglik if fit is not None else math.nan,
                    score=score,
                    converged=converged,
                ))
                if not converged:
                    continue
                key = (score, size, delta)
                if best_key is None or key < best_key:
                    best_key = key
                    fits[key] = (fit, k_delta, tuple(subset), grid_indices)

    warnings: List[str] = []
    if best_key is None:
        message = 'no candidate model converged; reporting the intercept-only model'
        logger.warning(message.capitalize())
        warnings.append(message)
        k_delta = k_grid[0]
        fit = null_fit
        subset, grid_indices = (), ()
    else:
        fit, k_delta, subset, grid_indices = fits[best_key]

    best_delta = data.grid.delta_for(k_delta)
    logger.debug(f"Best model: k_delta={k_delta} (delta={best_delta:.5g}), subset {list(subset)}")
    return SelectionResult(
        delta_grid=[data.grid.delta_for(int(k)) for k in k_grid],
        k_grid=[int(k) for k in k_grid],
        best_delta=best_delta,
        best_k_delta=int(k_delta),
        best_subset=subset,
        selected_indices=np.array(grid_indices, dtype=int),
        locations=data.grid.points[list(grid_indices)] if grid_indices else np.zeros(0),
        fit=fit,
        trace=trace,
        candidates=pools.get(k_delta, []),
        criterion=criterion,
        warnings=warnings,
    )


@dataclass
class ProfileResult:
    grid_index: int
    location: float
    fit: GlmFit
    logliks: np.ndarray

    @property
    def selected_indices(self) -> np.ndarray:
        return np.array([self.grid_index], dtype=int)


def profile_single_location(data: FunctionalDataset, link='logit') -> ProfileResult:
    """
    Single-point estimator for a known S = 1: fits alpha + beta * X(t_j) at
    every grid point and keeps the maximum (quasi-)log-likelihood, the
    smallest index on ties. Grid points whose fit fails or does not
    converge get -inf.
    """
    link = get_link(link)
    logliks = np.full(data.p, -math.inf)
    fits = {}
    for j in range(data.p):
        try:
            fit = fisher_scoring(with_intercept(data.X[:, [j]]), data.Y, link)
        except NumericalError as e:
            logger.debug(f"Grid point {j} skipped: {e}")
            continue
        if fit.converged:
            logliks[j] = fit.loglik
            fits[j] = fit
    if not fits:
        raise NumericalError(f"No single-point model converged on any of the {data.p} grid points.")
    best = int(np.argmax(logliks))
    logger.debug(f"Profile maximum at t={data.grid.points[best]:.5g} (index {best}), loglik={logliks[best]:.5g}")
    return ProfileResult(best, float(data.grid.points[best]), fits[best], logliks)
