"""Population-level closed forms: strength, selection probabilities, limits and variances.

These functions take true parameters (:class:`~divw.data.PopulationParams`)
rather than data and serve as reference values for the Monte Carlo studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .data import PopulationParams
from .errors import ConfigurationError, EstimatorError

__all__ = [
    "PopulationStrength",
    "asymptotic_variance",
    "ivw_abias",
    "kappa_p_bound",
    "kappa_tilde",
    "norm_cdf",
    "population_strength",
    "q_lambda",
    "theorem31_limit",
    "unbalanced_bias",
]


def norm_cdf(x):
    """Standard normal CDF, accurate in both tails (erfc based)."""
    return ndtr(x)


def q_lambda(params: PopulationParams, lambda_: float) -> np.ndarray:
    """Probability that each SNP survives screening at ``lambda_``."""
    if not lambda_ >= 0:
        raise ConfigurationError("lambda must be nonnegative")
    if lambda_ == 0:
        return np.ones(params.p)
    d = params.gamma / params.sigma_x_star
    return norm_cdf(d - lambda_) + norm_cdf(-d - lambda_)


@dataclass(frozen=True)
class PopulationStrength:
    kappa: float
    kappa_lambda: float
    p_lambda: float
    q: np.ndarray


def population_strength(params: PopulationParams, lambda_: float = 0.0) -> PopulationStrength:
    q = q_lambda(params, lambda_)
    ratio = params.gamma**2 / params.sigma_x**2
    kappa = math.fsum(ratio) / params.p
    if lambda_ == 0:
        return PopulationStrength(kappa, kappa, float(params.p), q)
    p_lam = math.fsum(q)
    return PopulationStrength(kappa, math.fsum(ratio * q) / p_lam, p_lam, q)


def ivw_abias(params: PopulationParams) -> float:
    """Asymptotic bias of unscreened IVW: ``-beta0 * sum(v) / sum(w + v)``."""
    w, v = params.w, params.v
    return -params.beta0 * math.fsum(v) / math.fsum(w + v)


def theorem31_limit(params: PopulationParams, lambda_: float = 0.0) -> float:
    """Probability limit of screened IVW when average strength stays bounded."""
    q = q_lambda(params, lambda_)
    w, v = params.w, params.v
    return params.beta0 * math.fsum(w * q) / math.fsum((w + v) * q)


def asymptotic_variance(params: PopulationParams, lambda_: float = 0.0, estimator: str = "dIVW") -> float:
    """Asymptotic variance of the screened IVW or dIVW estimator."""
    q = q_lambda(params, lambda_)
    w, v, b2 = params.w, params.v, params.beta0**2
    est = str(estimator).lower()
    if est == "ivw":
        num = (w + v) * q + b2 * v * (w + 3 * v) * q - b2 * v**2 * q**2
        return math.fsum(num) / math.fsum((w + v) * q) ** 2
    if est == "divw":
        den = math.fsum(w * q)
        if not den > 0:
            raise EstimatorError("dIVW asymptotic variance undefined: sum(w q) = 0")
        return math.fsum(((w + v) + b2 * v * (w + 2 * v)) * q) / den**2
    raise ConfigurationError("estimator must be 'IVW' or 'dIVW'")


def unbalanced_bias(params: PopulationParams, alpha, lambda_: float = 0.0) -> float:
    """Limit bias of dIVW under fixed (directional) pleiotropic effects ``alpha``.

    A weighted mean of ``alpha_j / gamma_j`` with weights ``w_j q_j``. SNPs
    with ``gamma_j = 0`` carry no weight and are skipped unless their
    ``alpha_j`` is nonzero, which is an error.
    """
    alpha = np.broadcast_to(np.asarray(alpha, dtype=float), (params.p,))
    gamma = params.gamma
    bad = (gamma == 0) & (alpha != 0)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise ConfigurationError(f"alpha_j / gamma_j undefined at SNP index {j} (gamma = 0, alpha != 0)")
    q = q_lambda(params, lambda_)
    wq = params.w * q
    keep = wq > 0
    den = math.fsum(wq[keep])
    if not den > 0:
        raise EstimatorError("unbalanced bias undefined: all w_j q_j are 0")
    return math.fsum(alpha[keep] / gamma[keep] * wq[keep]) / den


def kappa_p_bound(params: PopulationParams, n_x: int) -> tuple[float, float]:
    """``(kappa / p, n_x / p^2)``; the first is approximately bounded by the second."""
    if n_x < 1:
        raise ConfigurationError("n_x must be at least 1")
    kappa = population_strength(params, 0.0).kappa
    return kappa / params.p, n_x / params.p**2


def kappa_tilde(delta, lambda_: float) -> float:
    """Screened strength with one-sided selection probabilities ``Phi(delta - lambda)``.

    ``delta`` holds the standardized effects ``|gamma_j| / sigma*_j``. This
    approximation is nondecreasing in ``lambda_``.
    """
    delta = np.abs(np.asarray(delta, dtype=float))
    phi = norm_cdf(delta - lambda_)
    tot = math.fsum(phi)
    if not tot > 0:
        return math.nan
    return math.fsum(delta**2 * phi) / tot
