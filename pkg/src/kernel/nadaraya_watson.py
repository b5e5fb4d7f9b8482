# src/kernel/nadaraya_watson.py
import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from common.errors import ConfigError, DataError, ShapeMismatchError
from common.logger_utils import setup_logger
from functional.dataset import FunctionalDataset, map_to_grid

logger = setup_logger(__name__)


class KernelKind(str, enum.Enum):
    GAUSSIAN = 'gaussian'
    EPANECHNIKOV = 'epanechnikov'


def kernel_weights(kind: KernelKind, z: np.ndarray) -> np.ndarray:
    """
    One-dimensional kernel applied elementwise to the scaled differences z.
    """
    if kind is KernelKind.GAUSSIAN:
        return stats.norm.pdf(z)
    return np.where(np.abs(z) <= 1.0, 0.75 * (1.0 - z ** 2), 0.0)


@dataclass(frozen=True)
class KernelConfig:
    """
    Explicit bandwidths are used as given; otherwise the rate rule
    h_r = c_h * sd(X(tau_r)) * n^(-1/(S+4)) applies.
    """
    kernel: KernelKind = KernelKind.GAUSSIAN
    bandwidths: Optional[Sequence[float]] = None
    c_h: float = 1.0

    def __post_init__(self):
        try:
            object.__setattr__(self, 'kernel', KernelKind(str(getattr(self.kernel, 'value', self.kernel)).lower()))
        except ValueError as e:
            raise ConfigError(f"Unsupported kernel '{self.kernel}'; use 'gaussian' or 'epanechnikov'.") from e
        if self.bandwidths is not None:
            object.__setattr__(self, 'bandwidths', tuple(float(h) for h in self.bandwidths))
        if not self.c_h > 0:
            raise ConfigError(f"c_h must be positive, got {self.c_h}.")

    def resolve_bandwidths(self, anchors: np.ndarray) -> np.ndarray:
        n, S = anchors.shape
        if self.bandwidths is not None:
            h = np.asarray(self.bandwidths, dtype=float)
            if h.shape[0] != S:
                raise ShapeMismatchError(f"Got {h.shape[0]} bandwidths for {S} impact points.")
        else:
            h = self.c_h * anchors.std(axis=0, ddof=1) * n ** (-1.0 / (S + 4))
        if not np.all(h > 0):
            raise ConfigError(f"Bandwidths must be strictly positive, got {h.tolist()}.")
        return h


@dataclass
class NwFit:
    anchors: np.ndarray
    responses: np.ndarray
    bandwidths: np.ndarray
    kernel: KernelKind
    indices: np.ndarray

    @property
    def S(self) -> int:
        return self.anchors.shape[1]


def fit_nw(data: FunctionalDataset, taus_hat: Sequence[float], config: Optional[KernelConfig] = None) -> NwFit:
    """
    Stores the values of the curves at the estimated impact points (mapped
    to the grid) together with the responses and resolved bandwidths.
    """
    config = config or KernelConfig()
    taus_hat = np.atleast_1d(np.asarray(taus_hat, dtype=float))
    if taus_hat.size == 0:
        raise DataError("Kernel regression needs at least one impact point; use the sample mean for S=0.")
    if data.n < 2:
        raise DataError(f"Kernel regression needs at least two observations, got n={data.n}.")
    indices = map_to_grid(taus_hat, data.grid)
    anchors = data.X[:, indices]
    bandwidths = config.resolve_bandwidths(anchors)
    logger.debug(f"NW fit on {indices.tolist()} with bandwidths {np.round(bandwidths, 6).tolist()}")
    return NwFit(anchors=anchors, responses=data.Y.copy(), bandwidths=bandwidths, kernel=config.kernel, indices=indices)


def predict_many(fit: NwFit, queries: np.ndarray) -> np.ndarray:
    """
    Product-kernel weights are accumulated one impact point at a time, so
    memory stays at queries x anchors for any S.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    if queries.shape[1] != fit.S:
        raise ShapeMismatchError(f"Queries have {queries.shape[1]} coordinates, the fit has S={fit.S}.")
    weights = np.ones((queries.shape[0], fit.anchors.shape[0]))
    for r in range(fit.S):
        z = (fit.anchors[None, :, r] - queries[:, r, None]) / fit.bandwidths[r]
        weights *= kernel_weights(fit.kernel, z)
    totals = weights.sum(axis=1)
    predictions = np.empty(queries.shape[0])
    ok = totals > 0
    predictions[ok] = weights[ok] @ fit.responses / totals[ok]
    if not ok.all():
        # all weights underflowed: nearest anchor in Euclidean distance
        far = queries[~ok]
        distances = np.zeros((far.shape[0], fit.anchors.shape[0]))
        for r in range(fit.S):
            distances += (fit.anchors[None, :, r] - far[:, r, None]) ** 2
        predictions[~ok] = fit.responses[np.argmin(distances, axis=1)]
    return predictions


def predict_nw(fit: NwFit, query: Sequence[float]) -> float:
    return float(predict_many(fit, np.asarray(query, dtype=float).reshape(1, -1))[0])


def predict_in_sample(fit: NwFit) -> np.ndarray:
    return predict_many(fit, fit.anchors)


def mase(predictions, truths) -> float:
    """
    R^-1 sum_reps n^-1 sum_i (g(eta_i) - g_hat(X_i))^2 over aligned
    per-replication arrays.
    """
    predictions = [np.asarray(p, dtype=float).reshape(-1) for p in predictions]
    truths = [np.asarray(t, dtype=float).reshape(-1) for t in truths]
    if len(predictions) != len(truths) or not predictions:
        raise ShapeMismatchError(f"Got {len(predictions)} prediction sets for {len(truths)} truth sets.")
    contributions = []
    for rep, (p, t) in enumerate(zip(predictions, truths)):
        if p.shape != t.shape or p.size == 0:
            raise ShapeMismatchError(f"Replication {rep}: {p.size} predictions for {t.size} truths.")
        contributions.append(float(np.mean((t - p) ** 2)))
    return math.fsum(contributions) / len(contributions)
