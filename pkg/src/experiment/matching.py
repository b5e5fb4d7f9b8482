# src/experiment/matching.py
from typing import List, Optional, Sequence

import numpy as np

from common.errors import ConfigError


def matching_intervals(taus_true: Sequence[float], a: float, b: float) -> np.ndarray:
    """
    Interval bounds [m_0, ..., m_S] with m_0 = a, m_S = b and the midpoints
    of consecutive true locations in between.
    """
    taus = np.asarray(taus_true, dtype=float)
    midpoints = (taus[:-1] + taus[1:]) / 2.0
    return np.concatenate([[a], midpoints, [b]])


def match_candidates(
    taus_true: Sequence[float],
    candidates: Sequence[float],
    a: float = 0.0,
    b: float = 1.0
) -> List[Optional[float]]:
    """
    For each true location, the candidate inside its interval
    I_j = [m_{j-1}, m_j) closest to it, or None. The last interval is
    closed on the right. Equal distances go to the earlier candidate.
    """
    taus = np.asarray(taus_true, dtype=float)
    if np.any(np.diff(taus) <= 0):
        raise ConfigError(f"True locations must be sorted and distinct, got {taus.tolist()}.")
    candidates = np.asarray(candidates, dtype=float)
    bounds = matching_intervals(taus, a, b)

    matched: List[Optional[float]] = []
    for j, tau in enumerate(taus):
        lower, upper = bounds[j], bounds[j + 1]
        last = j == len(taus) - 1
        inside = (candidates >= lower) & ((candidates <= upper) if last else (candidates < upper))
        if not inside.any():
            matched.append(None)
            continue
        pool = candidates[inside]
        matched.append(float(pool[int(np.argmin(np.abs(pool - tau)))]))
    return matched


def unmatched_penalty(taus_true: Sequence[float], j: int, a: float = 0.0, b: float = 1.0) -> float:
    """
    Squared error charged to an unmatched location: (half the width of its
    interval)^2.
    """
    bounds = matching_intervals(taus_true, a, b)
    return float(((bounds[j + 1] - bounds[j]) / 2.0) ** 2)
