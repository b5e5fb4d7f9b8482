# src/functional/dataset.py
from dataclasses import dataclass, field
from typing import Dict, Any, Optional, Sequence

import numpy as np

from common.errors import ConfigError, DataError, ShapeMismatchError, TauOutOfRangeError


@dataclass(frozen=True)
class GridSpec:
    """
    Equidistant observation grid t_j = a + (j-1)(b-a)/(p-1), j = 1..p.
    """
    a: float = 0.0
    b: float = 1.0
    p: int = 100

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or self.a >= self.b:
            raise ConfigError(f"Invalid grid domain [{self.a}, {self.b}]: requires a < b.")
        if int(self.p) != self.p or self.p < 3:
            raise ConfigError(f"Invalid grid size p={self.p}: requires an integer p >= 3.")

    @property
    def step(self) -> float:
        return (self.b - self.a) / (self.p - 1)

    @property
    def points(self) -> np.ndarray:
        points = self.a + np.arange(self.p) * self.step
        points[-1] = self.b
        return points

    def delta_for(self, k_delta: int) -> float:
        return k_delta * self.step

    def to_dict(self) -> Dict[str, Any]:
        return {'a': float(self.a), 'b': float(self.b), 'p': int(self.p)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'GridSpec':
        return cls(a=float(data.get('a', 0.0)), b=float(data.get('b', 1.0)), p=int(data['p']))


def map_to_grid(taus: Sequence[float], grid: GridSpec) -> np.ndarray:
    """
    Maps each location to the nearest grid index (0-based); a location
    exactly halfway between two grid points goes to the smaller index.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if taus.size == 0:
        return np.zeros(0, dtype=int)
    if np.any((taus < grid.a) | (taus > grid.b)) or not np.all(np.isfinite(taus)):
        raise TauOutOfRangeError(
            f"Locations {taus.tolist()} fall outside the grid domain [{grid.a}, {grid.b}]."
        )
    position = (taus - grid.a) / grid.step
    lower = np.clip(np.floor(position).astype(int), 0, grid.p - 1)
    upper = np.clip(lower + 1, 0, grid.p - 1)
    points = grid.points
    take_upper = np.abs(points[upper] - taus) < np.abs(points[lower] - taus)
    return np.where(take_upper, upper, lower)


@dataclass
class FunctionalDataset:
    """
    n curves observed on a shared grid (rows of X) with scalar responses Y.
    """
    grid: GridSpec
    X: np.ndarray
    Y: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.Y = np.asarray(self.Y, dtype=float).reshape(-1)
        n, p = self.X.shape
        if n < 1:
            raise DataError("A functional dataset needs at least one curve.")
        if p != self.grid.p:
            raise ShapeMismatchError(f"Curves have {p} columns but the grid has p={self.grid.p} points.")
        if self.Y.shape[0] != n:
            raise ShapeMismatchError(f"Got {n} curves but {self.Y.shape[0]} responses.")
        if not np.all(np.isfinite(self.X)):
            raise DataError("Curve matrix contains non-finite values.")
        if not np.all(np.isfinite(self.Y)):
            raise DataError("Response vector contains non-finite values.")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def centered(self) -> 'FunctionalDataset':
        return FunctionalDataset(
            self.grid, self.X - self.X.mean(axis=0), self.Y, {**self.metadata, 'centered': True}
        )

    def standardized(self, scale: bool = True) -> 'FunctionalDataset':
        """
        Pointwise centering and, optionally, scaling to unit sample variance.
        Grid points with zero spread are only centered.
        """
        X = self.X - self.X.mean(axis=0)
        if scale and self.n > 1:
            sd = self.X.std(axis=0, ddof=1)
            X = np.divide(X, sd, out=X.copy(), where=sd > 0)
        return FunctionalDataset(
            self.grid, X, self.Y, {**self.metadata, 'centered': True, 'scaled': bool(scale)}
        )

    def with_responses(self, Y: np.ndarray) -> 'FunctionalDataset':
        return FunctionalDataset(self.grid, self.X, Y, dict(self.metadata))


def resolve_grid(p: int, grid: Optional[GridSpec] = None) -> GridSpec:
    return grid if grid is not None else GridSpec(0.0, 1.0, p)
