# src/glm/links.py
import enum

import numpy as np
from scipy.special import expit, logit, xlogy

from common.errors import ConfigError

PROBABILITY_CLAMP = 1e-12


class LinkKind(str, enum.Enum):
    LOGIT = 'logit'
    IDENTITY = 'identity'


class Link:
    """
    Mean function g, its derivative, the variance function sigma^2(mu) and
    the quasi-likelihood pieces of a quasi-likelihood model.
    """
    kind: LinkKind

    def mean(self, eta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, eta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self, mu: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def variance(self, mu: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log_likelihood(self, y: np.ndarray, mu: np.ndarray) -> float:
        raise NotImplementedError

    def quasi_deviance(self, y: np.ndarray, mu: np.ndarray) -> float:
        """
        -2 Q = 2 sum_i int_{y_i}^{mu_i} (t - y_i) / sigma^2(t) dt.
        """
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class LogitLink(Link):
    kind = LinkKind.LOGIT

    def mean(self, eta):
        return expit(eta)

    def derivative(self, eta):
        mu = expit(eta)
        return mu * (1.0 - mu)

    def inverse(self, mu):
        return logit(mu)

    def variance(self, mu):
        mu = np.clip(mu, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
        return mu * (1.0 - mu)

    def log_likelihood(self, y, mu):
        mu = np.clip(mu, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
        return float(np.sum(xlogy(y, mu) + xlogy(1.0 - y, 1.0 - mu)))

    def quasi_deviance(self, y, mu):
        mu = np.clip(mu, PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)
        return float(2.0 * np.sum(xlogy(y, y / mu) + xlogy(1.0 - y, (1.0 - y) / (1.0 - mu))))


class IdentityLink(Link):
    """
    Identity mean with the unit variance function; the log-likelihood slot
    carries the quasi-likelihood Q = -RSS/2.
    """
    kind = LinkKind.IDENTITY

    def mean(self, eta):
        return np.asarray(eta, dtype=float)

    def derivative(self, eta):
        return np.ones_like(np.asarray(eta, dtype=float))

    def inverse(self, mu):
        return np.asarray(mu, dtype=float)

    def variance(self, mu):
        return np.ones_like(np.asarray(mu, dtype=float))

    def log_likelihood(self, y, mu):
        return float(-0.5 * np.sum((y - mu) ** 2))

    def quasi_deviance(self, y, mu):
        return float(np.sum((y - mu) ** 2))


def get_link(kind) -> Link:
    if isinstance(kind, Link):
        return kind
    try:
        kind = LinkKind(kind.value if isinstance(kind, LinkKind) else str(kind).lower())
    except ValueError as e:
        raise ConfigError(f"Unsupported link '{kind}'; use 'logit' or 'identity'.") from e
    return LogitLink() if kind is LinkKind.LOGIT else IdentityLink()
