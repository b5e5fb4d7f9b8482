# src/experiment/metrics.py
from typing import Dict, Tuple

import numpy as np
from scipy import stats

from common.errors import DataError
from functional.dataset import FunctionalDataset


def per_models(data: FunctionalDataset) -> Dict[str, np.ndarray]:
    """
    Peak-and-end designs without intercept column.

    PER-1: [X(p_abs), X(t_p)] with p_abs = argmax |X|.
    PER-2: [X(p_pos), X(p_neg), X(t_p)] with p_pos = argmax X, p_neg = argmin X.
    np.argmax/argmin return the first index on ties.
    """
    X = data.X
    rows = np.arange(data.n)
    p_abs = np.argmax(np.abs(X), axis=1)
    p_pos = np.argmax(X, axis=1)
    p_neg = np.argmin(X, axis=1)
    end = X[:, -1]
    return {
        'PER-1': np.column_stack([X[rows, p_abs], end]),
        'PER-2': np.column_stack([X[rows, p_pos], X[rows, p_neg], end]),
    }


def somers_d(y: np.ndarray, scores: np.ndarray) -> float:
    """
    (concordant - discordant) / pairs with y_i != y_j, ties in the scores
    counting as neither; equals 2 AUC - 1 with mid-ranks.
    """
    y = np.asarray(y, dtype=float)
    scores = np.asarray(scores, dtype=float)
    positive = y == 1
    n_pos = int(positive.sum())
    n_neg = int((y == 0).sum())
    if n_pos + n_neg != y.size:
        raise DataError("Somers' D needs a binary 0/1 response.")
    if n_pos == 0 or n_neg == 0:
        raise DataError("Somers' D is undefined when the response has a single class.")
    ranks = stats.rankdata(scores)
    auc = (ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
    return float(2.0 * auc - 1.0)


def mcfadden_r2(loglik: float, null_loglik: float) -> float:
    if null_loglik == 0:
        raise DataError("McFadden R^2 is undefined for a zero null log-likelihood.")
    return float(1.0 - loglik / null_loglik)


def fit_quality(y: np.ndarray, fitted_probs: np.ndarray, loglik: float, null_loglik: float) -> Tuple[float, float]:
    return mcfadden_r2(loglik, null_loglik), somers_d(y, fitted_probs)
