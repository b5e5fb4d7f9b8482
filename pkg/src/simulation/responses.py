# src/simulation/responses.py
import enum
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np
from scipy.special import expit

from common.errors import ConfigError, TauOutOfRangeError
from functional.dataset import GridSpec, map_to_grid
from simulation.sampling import SeedLike, make_rng


class ResponseKind(str, enum.Enum):
    BERNOULLI_LOGIT = 'bernoulli_logit'
    GAUSSIAN_IDENTITY = 'gaussian_identity'


@dataclass(frozen=True)
class ImpactModelSpec:
    """
    Y_i = g(alpha + sum_r beta_r X_i(tau_r)) + eps_i with a Bernoulli-logit
    or Gaussian-identity response.
    """
    alpha: float = 0.0
    betas: Tuple[float, ...] = ()
    taus: Tuple[float, ...] = ()
    response: ResponseKind = ResponseKind.BERNOULLI_LOGIT
    sigma_eps: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'betas', tuple(float(b) for b in self.betas))
        object.__setattr__(self, 'taus', tuple(float(t) for t in self.taus))
        object.__setattr__(self, 'response', ResponseKind(self.response))
        if len(self.betas) != len(self.taus):
            raise ConfigError(
                f"Impact model has {len(self.betas)} coefficients but {len(self.taus)} locations."
            )
        if any(t2 <= t1 for t1, t2 in zip(self.taus, self.taus[1:])):
            raise ConfigError(f"Impact locations must be strictly increasing, got {list(self.taus)}.")
        if self.sigma_eps < 0:
            raise ConfigError(f"sigma_eps must be nonnegative, got {self.sigma_eps}.")

    @property
    def S(self) -> int:
        return len(self.taus)

    def mean_function(self, eta: np.ndarray) -> np.ndarray:
        if self.response is ResponseKind.BERNOULLI_LOGIT:
            return expit(eta)
        return np.asarray(eta, dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {'alpha': self.alpha, 'betas': list(self.betas), 'taus': list(self.taus),
                'response': self.response.value, 'sigma_eps': self.sigma_eps}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ImpactModelSpec':
        return cls(
            alpha=float(data.get('alpha', 0.0)),
            betas=tuple(data.get('betas', ())),
            taus=tuple(data.get('taus', ())),
            response=data.get('response', ResponseKind.BERNOULLI_LOGIT.value),
            sigma_eps=float(data.get('sigma_eps', 0.0)),
        )


@dataclass
class ResponseDraw:
    Y: np.ndarray
    eta: np.ndarray
    mean: np.ndarray
    indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


def generate_responses(
    X: np.ndarray,
    grid: GridSpec,
    model: ImpactModelSpec,
    rng_seed: SeedLike = None
) -> ResponseDraw:
    """
    Draws responses from the point-of-impact model. Each tau is evaluated at
    its nearest grid point (ties to the smaller index); the mapped indices
    are returned with Y.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    taus = np.asarray(model.taus, dtype=float)
    if np.any((taus <= grid.a) | (taus >= grid.b)):
        raise TauOutOfRangeError(
            f"Impact locations {taus.tolist()} must lie strictly inside ({grid.a}, {grid.b})."
        )
    indices = map_to_grid(taus, grid)
    eta = model.alpha + X[:, indices] @ np.asarray(model.betas, dtype=float)
    mean = model.mean_function(eta)

    rng = make_rng(rng_seed)
    if model.response is ResponseKind.BERNOULLI_LOGIT:
        Y = (rng.uniform(size=X.shape[0]) < mean).astype(float)
    else:
        Y = mean + model.sigma_eps * rng.standard_normal(X.shape[0])
    return ResponseDraw(Y=Y, eta=eta, mean=mean, indices=indices)
