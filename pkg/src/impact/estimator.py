# src/impact/estimator.py
import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from common.errors import ConfigError, InadmissibleDeltaError
from common.logger_utils import setup_logger
from functional.dataset import FunctionalDataset, GridSpec

logger = setup_logger(__name__)

DEFAULT_THRESHOLD_A = math.sqrt(2.0 * math.sqrt(3.0))


class DifferenceOrder(enum.IntEnum):
    SECOND = 2
    FOURTH = 4


def _order(order) -> DifferenceOrder:
    try:
        return DifferenceOrder(int(order))
    except ValueError as e:
        raise ConfigError(f"Unsupported difference order {order!r}; use 2 or 4.") from e


def check_k_delta(k_delta: int, p: int, order=DifferenceOrder.SECOND) -> int:
    """
    Second order needs 1 <= k < (p-1)/2, fourth order 1 <= 2k < (p-1)/2.
    """
    order = _order(order)
    reach = k_delta if order is DifferenceOrder.SECOND else 2 * k_delta
    if int(k_delta) != k_delta or k_delta < 1 or not reach < (p - 1) / 2:
        raise InadmissibleDeltaError(
            f"k_delta={k_delta} is not admissible for order {int(order)} on p={p} grid points."
        )
    return int(k_delta)


@dataclass(frozen=True)
class PoiConfig:
    """
    Tuning of the detector. An explicit k_delta fixes delta = k_delta * step;
    otherwise delta = c_delta * n^(-1/2) is rounded to the grid lattice.
    """
    k_delta: Optional[int] = None
    c_delta: float = 1.5
    threshold_a: float = DEFAULT_THRESHOLD_A
    difference_order: DifferenceOrder = DifferenceOrder.SECOND
    max_candidates: Optional[int] = None
    center: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'difference_order', _order(self.difference_order))
        if self.k_delta is None and not self.c_delta > 0:
            raise ConfigError(f"c_delta must be positive, got {self.c_delta}.")
        if not self.threshold_a > 0:
            raise ConfigError(f"Threshold constant A must be positive, got {self.threshold_a}.")
        if self.max_candidates is not None and self.max_candidates < 1:
            raise ConfigError(f"max_candidates must be positive, got {self.max_candidates}.")

    def resolve_k_delta(self, grid: GridSpec, n: int) -> int:
        if self.k_delta is not None:
            return check_k_delta(self.k_delta, grid.p, self.difference_order)
        delta = self.c_delta / math.sqrt(n)
        k_delta = max(1, int(round(delta / grid.step)))
        logger.debug(f"Rate rule: delta={delta:.5g} -> k_delta={k_delta} (step {grid.step:.5g})")
        return check_k_delta(k_delta, grid.p, self.difference_order)


@dataclass(frozen=True)
class Candidate:
    grid_index: int
    location: float
    score: float


@dataclass
class PoiEstimate:
    candidates: List[Candidate]
    s_hat: int
    lam: float
    f_xy: np.ndarray
    f_zy: np.ndarray
    f_zy_indices: np.ndarray
    delta: float
    k_delta: int
    statistics: np.ndarray = field(default_factory=lambda: np.zeros(0))
    difference_order: DifferenceOrder = DifferenceOrder.SECOND

    @property
    def selected(self) -> List[Candidate]:
        return self.candidates[:self.s_hat]

    @property
    def selected_locations(self) -> np.ndarray:
        return np.array([c.location for c in self.selected], dtype=float)

    @property
    def selected_indices(self) -> np.ndarray:
        return np.array([c.grid_index for c in self.selected], dtype=int)

    @property
    def candidate_indices(self) -> np.ndarray:
        return np.array([c.grid_index for c in self.candidates], dtype=int)


def cross_covariance(data: FunctionalDataset) -> np.ndarray:
    """
    f_XY(t_j) = n^-1 sum_i X_i(t_j) Y_i, without centering.
    """
    return data.X.T @ data.Y / data.n


def difference_transform(f_xy: np.ndarray, k_delta: int, order=DifferenceOrder.SECOND) -> Tuple[np.ndarray, np.ndarray]:
    """
    Second difference f(t) - (f(t-d) + f(t+d))/2, or the fourth-order stencil
    f(t) - 2/3 (f(t-d) + f(t+d)) + 1/6 (f(t-2d) + f(t+2d)), over the interior
    indices where it is defined. Returns (values, 0-based grid indices).
    """
    f_xy = np.asarray(f_xy, dtype=float)
    order = _order(order)
    k = check_k_delta(k_delta, f_xy.shape[-1], order)
    p = f_xy.shape[-1]
    if order is DifferenceOrder.SECOND:
        indices = np.arange(k, p - k)
        values = f_xy[..., indices] - 0.5 * (f_xy[..., indices - k] + f_xy[..., indices + k])
    else:
        indices = np.arange(2 * k, p - 2 * k)
        values = (
            f_xy[..., indices]
            - 2.0 / 3.0 * (f_xy[..., indices - k] + f_xy[..., indices + k])
            + 1.0 / 6.0 * (f_xy[..., indices - 2 * k] + f_xy[..., indices + 2 * k])
        )
    return values, indices


def auxiliary_process(X: np.ndarray, indices: Sequence[int], k_delta: int, order=DifferenceOrder.SECOND) -> np.ndarray:
    """
    Per-curve difference process Z_delta,i evaluated at the given grid indices.
    """
    indices = np.asarray(indices, dtype=int)
    k = int(k_delta)
    if _order(order) is DifferenceOrder.SECOND:
        return X[:, indices] - 0.5 * (X[:, indices - k] + X[:, indices + k])
    return (
        X[:, indices]
        - 2.0 / 3.0 * (X[:, indices - k] + X[:, indices + k])
        + 1.0 / 6.0 * (X[:, indices - 2 * k] + X[:, indices + 2 * k])
    )


def extract_candidates(
    f_zy: np.ndarray,
    indices: np.ndarray,
    grid: GridSpec,
    delta: float,
    max_candidates: Optional[int] = None
) -> List[Candidate]:
    """
    Repeatedly takes the arg-max of |f_ZY| over the surviving indices
    (smallest index on ties) and removes every index within sqrt(delta)/2
    of the chosen location.
    """
    scores = np.abs(np.asarray(f_zy, dtype=float))
    indices = np.asarray(indices, dtype=int)
    locations = grid.points[indices]
    half_width = math.sqrt(delta) / 2.0
    alive = np.ones(scores.shape[0], dtype=bool)

    candidates: List[Candidate] = []
    while alive.any():
        if max_candidates is not None and len(candidates) >= max_candidates:
            break
        masked = np.where(alive, scores, -np.inf)
        best = int(np.argmax(masked))
        candidates.append(Candidate(int(indices[best]), float(locations[best]), float(scores[best])))
        alive &= np.abs(locations - locations[best]) > half_width
    return candidates


def threshold_lambda(data: FunctionalDataset, delta: float, A: float = DEFAULT_THRESHOLD_A) -> float:
    """
    lambda = A * (sqrt(mean(Y^4)) * log((b-a)/delta) / n)^(1/2).
    """
    length = data.grid.b - data.grid.a
    if not 0 < delta < length:
        raise InadmissibleDeltaError(f"delta={delta} must lie in (0, {length}) for the threshold.")
    fourth_moment = float(np.mean(data.Y ** 4))
    return float(A * math.sqrt(math.sqrt(fourth_moment) * math.log(length / delta) / data.n))


def standardized_statistics(
    data: FunctionalDataset,
    grid_indices: Sequence[int],
    k_delta: int,
    order=DifferenceOrder.SECOND
) -> np.ndarray:
    """
    |n^-1 sum Z_i Y_i| / (n^-1 sum Z_i^2)^(1/2) at each grid index; a zero
    denominator yields 0.
    """
    grid_indices = np.asarray(grid_indices, dtype=int)
    if grid_indices.size == 0:
        return np.zeros(0)
    Z = auxiliary_process(data.X, grid_indices, k_delta, order)
    numerator = np.abs(Z.T @ data.Y / data.n)
    denominator = np.sqrt(np.mean(Z ** 2, axis=0))
    return np.divide(numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0)


def select_s_hat(
    data: FunctionalDataset,
    candidates: Sequence[Candidate],
    k_delta: int,
    lam: float,
    order=DifferenceOrder.SECOND
) -> Tuple[int, np.ndarray]:
    """
    S_hat = first l such that the standardized statistic of candidate l+1
    falls below lambda; all candidates surviving gives S_hat = M. A zero
    statistic is always below. Returns (S_hat, statistics in extraction order).
    """
    statistics = standardized_statistics(data, [c.grid_index for c in candidates], k_delta, order)
    below = np.flatnonzero((statistics < lam) | (statistics == 0))
    s_hat = int(below[0]) if below.size else len(candidates)
    return s_hat, statistics


def estimate_poi(data: FunctionalDataset, config: Optional[PoiConfig] = None) -> PoiEstimate:
    """
    Full detector: cross-covariance, difference transform, candidate
    extraction and the threshold estimate of S.
    """
    config = config or PoiConfig()
    if config.center:
        data = data.centered()
    k_delta = config.resolve_k_delta(data.grid, data.n)
    delta = data.grid.delta_for(k_delta)

    f_xy = cross_covariance(data)
    f_zy, f_zy_indices = difference_transform(f_xy, k_delta, config.difference_order)
    candidates = extract_candidates(f_zy, f_zy_indices, data.grid, delta, config.max_candidates)
    lam = threshold_lambda(data, delta, config.threshold_a)
    if config.difference_order is DifferenceOrder.FOURTH:
        logger.debug("Fourth-order transform: S_hat uses the second-order threshold")
    s_hat, statistics = select_s_hat(data, candidates, k_delta, lam, config.difference_order)

    logger.debug(
        f"delta={delta:.5g} (k={k_delta}), {len(candidates)} candidates, lambda={lam:.5g}, S_hat={s_hat}"
    )
    return PoiEstimate(
        candidates=candidates,
        s_hat=s_hat,
        lam=lam,
        f_xy=f_xy,
        f_zy=f_zy,
        f_zy_indices=f_zy_indices,
        delta=delta,
        k_delta=k_delta,
        statistics=statistics,
        difference_order=config.difference_order,
    )
