# src/simulation/sampling.py
from typing import Optional, Union

import numpy as np
from scipy import linalg

from common.errors import ConfigError, FactorizationError, UnsupportedProcessError
from common.logger_utils import setup_logger
from functional.dataset import GridSpec
from simulation.processes import ProcessKind, ProcessSpec, ScaleLaw, _check_time_origin, covariance_matrix

logger = setup_logger(__name__)

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]

NUGGET_START = 1e-10
NUGGET_MAX = 1e-6


def make_rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def regularized_cholesky(cov: np.ndarray) -> np.ndarray:
    """
    Lower Cholesky factor of cov. On failure, adds a diagonal jitter of
    1e-10 * max(diag), escalating x10 up to 1e-6 * max(diag).
    """
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        pass

    scale = float(np.max(np.diag(cov)))
    if not scale > 0:
        scale = 1.0
    relative = NUGGET_START
    identity = np.eye(cov.shape[0])
    while relative <= NUGGET_MAX * (1 + 1e-9):
        try:
            factor = linalg.cholesky(cov + relative * scale * identity, lower=True)
            logger.debug(f"Cholesky succeeded with nugget {relative:.0e} x max-diagonal ({scale:.4g})")
            return factor
        except linalg.LinAlgError:
            relative *= 10.0

    eigenvalues = linalg.eigvalsh(cov)
    raise FactorizationError(
        f"Cholesky factorization failed with nugget up to {NUGGET_MAX:.0e} x max-diagonal; "
        f"p={cov.shape[0]}, max diagonal={scale:.6g}, smallest eigenvalue={eigenvalues[0]:.6g}"
    )


def _markov_paths(spec: ProcessSpec, grid: GridSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Exact transition-density recursion for OUP and BM, both started at 0 at
    time 0.
    """
    points = grid.points
    gaps = np.diff(np.concatenate([[0.0], points]))
    paths = np.empty((n, grid.p))
    state = np.zeros(n)
    for j, gap in enumerate(gaps):
        if spec.kind is ProcessKind.OUP:
            decay = np.exp(-spec.theta * gap)
            variance = spec.sigma_u2 / (2.0 * spec.theta) * (1.0 - np.exp(-2.0 * spec.theta * gap))
        else:
            decay = 1.0
            variance = spec.scale * gap
        state = decay * state + np.sqrt(variance) * rng.standard_normal(n)
        paths[:, j] = state
    return paths


def sample_gaussian_paths(
    spec: ProcessSpec,
    grid: GridSpec,
    n: int,
    rng_seed: SeedLike = None,
    method: str = 'cholesky'
) -> np.ndarray:
    """
    n i.i.d. zero-mean Gaussian paths on the grid, one per row.

    method='cholesky' factorizes the (nugget-regularized) grid covariance;
    method='markov' uses the exact recursion, available for OUP and BM.
    """
    if n < 1:
        raise ConfigError(f"Number of paths must be positive, got {n}.")
    rng = make_rng(rng_seed)
    if method == 'markov':
        if spec.kind not in (ProcessKind.OUP, ProcessKind.BM):
            raise UnsupportedProcessError(f"No Markov recursion for process kind '{spec.kind.value}'.")
        _check_time_origin(spec, grid)
        return _markov_paths(spec, grid, n, rng)
    if method != 'cholesky':
        raise ConfigError(f"Unknown sampling method '{method}'.")

    factor = regularized_cholesky(covariance_matrix(spec, grid))
    noise = rng.standard_normal((n, grid.p))
    return noise @ factor.T


def sample_ebm_paths(grid: GridSpec, n: int, rng_seed: SeedLike = None) -> np.ndarray:
    """
    Exponential Brownian motion exp(B(t)) with B(0) = 0, uncentered.
    """
    if n < 1:
        raise ConfigError(f"Number of paths must be positive, got {n}.")
    if grid.a < 0:
        raise ConfigError(f"EBM is defined from time 0; grid starts at a={grid.a}.")
    rng = make_rng(rng_seed)
    gaps = np.diff(np.concatenate([[0.0], grid.points]))
    increments = rng.standard_normal((n, grid.p)) * np.sqrt(gaps)
    return np.exp(np.cumsum(increments, axis=1))


def apply_elliptical_scaling(X: np.ndarray, scale_law: ScaleLaw, rng_seed: SeedLike = None) -> np.ndarray:
    """
    Multiplies row i by an independent positive draw V_i.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    rng = make_rng(rng_seed)
    scales = scale_law.draw(rng, X.shape[0])
    if np.any(~(scales > 0)):
        raise ConfigError(f"Scale law '{scale_law.kind.value}' produced a nonpositive draw.")
    return X * scales[:, None]


def sample_paths(
    spec: ProcessSpec,
    grid: GridSpec,
    n: int,
    rng_seed: SeedLike = None,
    method: Optional[str] = None
) -> np.ndarray:
    """
    Dispatches to the sampler of the process kind. Elliptical processes
    draw the base paths and the scale variables from independent streams.
    """
    if spec.kind is ProcessKind.EBM:
        return sample_ebm_paths(grid, n, rng_seed)
    if spec.kind is ProcessKind.ELLIPTICAL:
        base_seed, scale_seed = _split(rng_seed)
        base = sample_gaussian_paths(spec.base, grid, n, base_seed, method or 'cholesky')
        return apply_elliptical_scaling(base, spec.scale_law, scale_seed)
    return sample_gaussian_paths(spec, grid, n, rng_seed, method or 'cholesky')


def _split(rng_seed: SeedLike):
    if isinstance(rng_seed, np.random.Generator):
        return rng_seed.spawn(2) if hasattr(rng_seed, 'spawn') else (rng_seed, rng_seed)
    sequence = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(rng_seed)
    return sequence.spawn(2)
