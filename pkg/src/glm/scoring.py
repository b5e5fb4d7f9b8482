# src/glm/scoring.py
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import linalg, stats

from common.errors import NotConvergedError, RankDeficientError, ShapeMismatchError
from common.logger_utils import setup_logger
from glm.links import Link, LinkKind, get_link

logger = setup_logger(__name__)

SCORE_TOL = 1e-8
MAX_ITER = 100
SEPARATION_BOUND = 1e3
STEP_TOL = 1e-6


@dataclass
class GlmFit:
    """
    Quasi-maximum-likelihood fit; beta is intercept first and vcov is the
    inverse of the estimated information F_n(beta_hat).
    """
    beta: np.ndarray
    vcov: np.ndarray
    loglik: float
    aic: float
    bic: float
    iterations: int
    converged: bool
    link: LinkKind
    n: int
    score_norm: float = float('nan')
    message: str = ''

    @property
    def K(self) -> int:
        return int(self.beta.shape[0])


def with_intercept(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return np.column_stack([np.ones(values.shape[0]), values])


def _score_and_information(design, y, beta, link: Link):
    eta = design @ beta
    mu = link.mean(eta)
    d = link.derivative(eta)
    v = link.variance(mu)
    score = design.T @ (d / v * (y - mu))
    information = (design * (d ** 2 / v)[:, None]).T @ design
    return score, information, mu


def log_likelihood(design: np.ndarray, y: np.ndarray, beta: np.ndarray, link) -> float:
    link = get_link(link)
    return link.log_likelihood(np.asarray(y, dtype=float), link.mean(np.asarray(design) @ beta))


def quasi_deviance(design: np.ndarray, y: np.ndarray, beta: np.ndarray, link) -> float:
    link = get_link(link)
    return link.quasi_deviance(np.asarray(y, dtype=float), link.mean(np.asarray(design) @ beta))


def information_criteria(loglik: float, K: int, n: int) -> Tuple[float, float]:
    """
    AIC = 2K - 2 logL and BIC = -2 logL + K log(n).
    """
    return 2.0 * K - 2.0 * loglik, -2.0 * loglik + K * math.log(n)


def fisher_scoring(
    design: np.ndarray,
    y: np.ndarray,
    link='logit',
    init: Optional[np.ndarray] = None,
    tol: float = SCORE_TOL,
    max_iter: int = MAX_ITER
) -> GlmFit:
    """
    Solves the score equations U_n(beta) = D^T V^-1 (y - mu) = 0 by
    beta_m = beta_{m-1} + F_n^-1 U_n, F_n = D^T V^-1 D. Convergence needs
    sup|U_n| <= tol after a step no larger than STEP_TOL (relative), so a
    separated sample whose coefficients keep drifting is never converged.
    Separation or divergence ends with converged=False instead of raising.
    """
    design = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    link = get_link(link)
    n, K = design.shape
    if y.shape[0] != n:
        raise ShapeMismatchError(f"Design has {n} rows but y has {y.shape[0]} entries.")
    if n <= K:
        raise RankDeficientError(f"Need more observations than parameters (n={n}, K={K}).")
    if np.linalg.matrix_rank(design) < K:
        raise RankDeficientError(f"Design matrix of shape {design.shape} is not of full column rank.")

    beta = np.zeros(K) if init is None else np.asarray(init, dtype=float).copy()
    converged = False
    message = ''
    iterations = 0
    score, information, _ = _score_and_information(design, y, beta, link)
    score_norm = float(np.max(np.abs(score)))
    step_norm = math.inf

    for iterations in range(1, max_iter + 1):
        if score_norm <= tol and step_norm <= STEP_TOL * (1.0 + float(np.max(np.abs(beta)))):
            converged = True
            iterations -= 1
            break
        try:
            step = linalg.solve(information, score, assume_a='pos')
        except (linalg.LinAlgError, ValueError):
            message = 'singular information matrix'
            break
        beta = beta + step
        step_norm = float(np.max(np.abs(step)))
        if not np.all(np.isfinite(beta)) or np.max(np.abs(beta)) > SEPARATION_BOUND:
            message = f'coefficients exceeded the separation guard {SEPARATION_BOUND:g}'
            break
        score, information, _ = _score_and_information(design, y, beta, link)
        score_norm = float(np.max(np.abs(score)))
    else:
        if score_norm <= tol and step_norm <= STEP_TOL * (1.0 + float(np.max(np.abs(beta)))):
            converged = True
        else:
            message = f'no convergence after {max_iter} iterations'

    if converged:
        vcov = linalg.inv(information)
        vcov = 0.5 * (vcov + vcov.T)
    else:
        logger.debug(f"Fisher scoring stopped: {message} (|U|={score_norm:.3g})")
        vcov = np.full((K, K), np.nan)

    loglik = log_likelihood(design, y, beta, link)
    aic, bic = information_criteria(loglik, K, n)
    return GlmFit(
        beta=beta,
        vcov=vcov,
        loglik=loglik,
        aic=aic,
        bic=bic,
        iterations=iterations,
        converged=converged,
        link=link.kind,
        n=n,
        score_norm=score_norm,
        message=message,
    )


def standard_errors(fit: GlmFit) -> np.ndarray:
    """
    Wald standard errors sqrt(diag(F_n(beta_hat)^-1)).
    """
    if not fit.converged:
        raise NotConvergedError(f"Standard errors need a converged fit ({fit.message or 'not converged'}).")
    return np.sqrt(np.diag(fit.vcov))


def wald_table(fit: GlmFit):
    """
    (coefficients, standard errors, z statistics, two-sided normal p-values).
    """
    se = standard_errors(fit)
    z = fit.beta / se
    p_values = 2.0 * stats.norm.sf(np.abs(z))
    return fit.beta, se, z, p_values


def null_log_likelihood(y: np.ndarray, link='logit') -> float:
    """
    Maximized log-likelihood of the intercept-only model.
    """
    y = np.asarray(y, dtype=float)
    link = get_link(link)
    return link.log_likelihood(y, np.full(y.shape[0], y.mean()))
