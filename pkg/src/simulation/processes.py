# src/simulation/processes.py
import enum
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from common.errors import ConfigError, UnsupportedProcessError
from functional.dataset import GridSpec


class ProcessKind(str, enum.Enum):
    OUP = 'OUP'
    GCM = 'GCM'
    BM = 'BM'
    EBM = 'EBM'
    ELLIPTICAL = 'Elliptical'


GAUSSIAN_KINDS = (ProcessKind.OUP, ProcessKind.GCM, ProcessKind.BM)


class ScaleLawKind(str, enum.Enum):
    CONSTANT = 'constant'
    HALF_NORMAL = 'half_normal'     # |N(0,1)| + shift
    UNIFORM = 'uniform'             # U(low, high)
    STUDENT = 'student'             # sqrt(nu / chi2_nu), nu > 2


@dataclass(frozen=True)
class ScaleLaw:
    """
    Distribution of the positive mixing variable V of an elliptical process.
    """
    kind: ScaleLawKind = ScaleLawKind.CONSTANT
    value: float = 1.0
    shift: float = 0.5
    low: float = 0.5
    high: float = 1.5
    nu: float = 5.0

    def __post_init__(self):
        kind = ScaleLawKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        if kind is ScaleLawKind.CONSTANT and not self.value > 0:
            raise ConfigError(f"Constant scale law needs a positive value, got {self.value}.")
        if kind is ScaleLawKind.HALF_NORMAL and not self.shift > 0:
            raise ConfigError(f"Half-normal scale law needs a positive shift, got {self.shift}.")
        if kind is ScaleLawKind.UNIFORM and not (0 < self.low <= self.high):
            raise ConfigError(f"Uniform scale law needs 0 < low <= high, got ({self.low}, {self.high}).")
        if kind is ScaleLawKind.STUDENT and not self.nu > 2:
            raise ConfigError(f"Student scale law needs nu > 2 for a finite variance, got {self.nu}.")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind is ScaleLawKind.CONSTANT:
            return np.full(size, float(self.value))
        if self.kind is ScaleLawKind.HALF_NORMAL:
            return np.abs(rng.standard_normal(size)) + self.shift
        if self.kind is ScaleLawKind.UNIFORM:
            return rng.uniform(self.low, self.high, size)
        return np.sqrt(self.nu / rng.chisquare(self.nu, size))

    def second_moment(self) -> float:
        """
        E(V^2), the factor relating the elliptical covariance to the base one.
        """
        if self.kind is ScaleLawKind.CONSTANT:
            return float(self.value) ** 2
        if self.kind is ScaleLawKind.HALF_NORMAL:
            # E(|Z|) = sqrt(2/pi), E(Z^2) = 1
            return 1.0 + 2.0 * self.shift * np.sqrt(2.0 / np.pi) + self.shift ** 2
        if self.kind is ScaleLawKind.UNIFORM:
            return (self.low ** 2 + self.low * self.high + self.high ** 2) / 3.0
        return self.nu / (self.nu - 2.0)

    def to_dict(self) -> Dict[str, Any]:
        return {'kind': self.kind.value, 'value': self.value, 'shift': self.shift,
                'low': self.low, 'high': self.high, 'nu': self.nu}


@dataclass(frozen=True)
class ProcessSpec:
    """
    A process class for the functional predictor. Use the factory
    classmethods; only the parameters of the chosen kind are read.
    """
    kind: ProcessKind
    theta: float = 5.0
    sigma_u2: float = 3.5
    d: float = 0.1
    scale: float = 1.0
    base: Optional['ProcessSpec'] = None
    scale_law: Optional[ScaleLaw] = None
    kappa: Optional[float] = None

    def __post_init__(self):
        kind = ProcessKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        if kind is ProcessKind.OUP and not (self.theta > 0 and self.sigma_u2 > 0):
            raise ConfigError("OUP requires theta > 0 and sigma_u2 > 0.")
        if kind is ProcessKind.GCM and not self.d > 0:
            raise ConfigError("GCM requires d > 0.")
        if kind is ProcessKind.BM and not self.scale > 0:
            raise ConfigError("BM requires scale > 0.")
        if kind is ProcessKind.ELLIPTICAL:
            if self.base is None or self.base.kind not in GAUSSIAN_KINDS:
                raise ConfigError("An elliptical process needs a Gaussian base process.")
            if self.scale_law is None:
                object.__setattr__(self, 'scale_law', ScaleLaw())
        if self.kappa is not None and not (0 < self.kappa < 2):
            raise ConfigError(f"kappa must lie in (0, 2), got {self.kappa}.")

    @classmethod
    def oup(cls, theta: float = 5.0, sigma_u2: float = 3.5) -> 'ProcessSpec':
        return cls(ProcessKind.OUP, theta=theta, sigma_u2=sigma_u2, kappa=1.0)

    @classmethod
    def gcm(cls, d: float = 0.1) -> 'ProcessSpec':
        return cls(ProcessKind.GCM, d=d)

    @classmethod
    def bm(cls, scale: float = 1.0) -> 'ProcessSpec':
        return cls(ProcessKind.BM, scale=scale, kappa=1.0)

    @classmethod
    def ebm(cls) -> 'ProcessSpec':
        return cls(ProcessKind.EBM, kappa=1.0)

    @classmethod
    def elliptical(cls, base: 'ProcessSpec', scale_law: ScaleLaw) -> 'ProcessSpec':
        return cls(ProcessKind.ELLIPTICAL, base=base, scale_law=scale_law, kappa=base.kappa)

    @property
    def is_gaussian(self) -> bool:
        return self.kind in GAUSSIAN_KINDS

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'kind': self.kind.value}
        if self.kind is ProcessKind.OUP:
            data.update(theta=self.theta, sigma_u2=self.sigma_u2)
        elif self.kind is ProcessKind.GCM:
            data.update(d=self.d)
        elif self.kind is ProcessKind.BM:
            data.update(scale=self.scale)
        elif self.kind is ProcessKind.ELLIPTICAL:
            data.update(base=self.base.to_dict(), scale_law=self.scale_law.to_dict())
        if self.kappa is not None:
            data['kappa'] = self.kappa
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ProcessSpec':
        kind = ProcessKind(data['kind'])
        if kind is ProcessKind.ELLIPTICAL:
            law = data.get('scale_law') or {}
            return cls.elliptical(cls.from_dict(data['base']), ScaleLaw(**law))
        params = {k: v for k, v in data.items() if k in ('theta', 'sigma_u2', 'd', 'scale', 'kappa')}
        if 'kappa' not in params and kind in (ProcessKind.OUP, ProcessKind.BM, ProcessKind.EBM):
            params['kappa'] = 1.0
        return cls(kind, **params)


def _check_time_origin(spec: ProcessSpec, grid: GridSpec):
    if spec.kind in (ProcessKind.OUP, ProcessKind.BM, ProcessKind.EBM) and grid.a < 0:
        raise ConfigError(
            f"{spec.kind.value} covariance is defined from time 0; grid starts at a={grid.a}."
        )


def covariance_function(spec: ProcessSpec, s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """
    Closed-form covariance sigma(s, t) of a Gaussian process kind.
    """
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if spec.kind is ProcessKind.OUP:
        rate = spec.theta
        return spec.sigma_u2 / (2.0 * rate) * (np.exp(-rate * np.abs(s - t)) - np.exp(-rate * (s + t)))
    if spec.kind is ProcessKind.GCM:
        return np.exp(-(np.abs(s - t) / spec.d) ** 2)
    if spec.kind is ProcessKind.BM:
        return spec.scale * np.minimum(s, t)
    raise UnsupportedProcessError(
        f"No closed-form Gaussian covariance for process kind '{spec.kind.value}'."
    )


def covariance_matrix(spec: ProcessSpec, grid: GridSpec) -> np.ndarray:
    """
    p x p covariance of the process on the grid, before nugget regularization.
    """
    if not spec.is_gaussian:
        raise UnsupportedProcessError(
            f"covariance_matrix supports OUP, GCM and BM, not '{spec.kind.value}'."
        )
    _check_time_origin(spec, grid)
    points = grid.points
    cov = covariance_function(spec, points[:, None], points[None, :])
    # exact symmetry regardless of rounding in the closed form
    return 0.5 * (cov + cov.T)
