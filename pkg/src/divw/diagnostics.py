"""Model-checking output: standardized residuals for Q-Q plots and the strength rule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import ndtri

from .data import SummaryDataset
from .estimators import ESS_THRESHOLD, divw, tau2_hat

__all__ = ["QQData", "ks_critical_value", "ks_statistic", "qq_data", "standardized_residuals"]


def standardized_residuals(dataset: SummaryDataset, beta: float, tau2: float | None = None) -> np.ndarray:
    """``(Gamma_hat - beta gamma_hat) / sqrt(se_y^2 [+ tau2] + beta^2 se_x^2)``.

    Approximately standard normal when the model holds; a negative ``tau2``
    is treated as 0.
    """
    extra = 0.0 if tau2 is None else max(float(tau2), 0.0)
    scale = np.sqrt(dataset.se_y**2 + extra + beta**2 * dataset.se_x**2)
    return (dataset.Gamma_hat - beta * dataset.gamma_hat) / scale


@dataclass(frozen=True)
class QQData:
    """Sorted residuals paired with normal quantiles ``Phi^-1((i - 0.5) / p)``."""

    theoretical: np.ndarray
    residuals: np.ndarray
    beta: float
    tau2: float | None

    def pairs(self) -> list[tuple[float, float]]:
        return list(zip(self.theoretical.tolist(), self.residuals.tolist()))


def qq_data(dataset: SummaryDataset, beta: float | None = None, pleiotropy: bool = False) -> QQData:
    """Q-Q pairs using the unscreened dIVW estimate unless ``beta`` is given."""
    if beta is None:
        beta = divw(dataset)
    tau2 = tau2_hat(dataset) if pleiotropy else None
    r = np.sort(standardized_residuals(dataset, beta, tau2))
    p = r.size
    theo = ndtri((np.arange(1, p + 1) - 0.5) / p)
    return QQData(theo, r, beta, tau2)


def ks_statistic(residuals) -> float:
    """Kolmogorov-Smirnov distance between the residuals and N(0, 1)."""
    return float(stats.kstest(np.asarray(residuals, dtype=float), "norm").statistic)


def ks_critical_value(p: int, level: float = 0.01) -> float:
    """Exact one-sample KS critical value at ``level`` for ``p`` observations."""
    return float(stats.kstwo.ppf(1.0 - level, p))


def strength_verdict(effective_sample_size: float) -> str:
    if math.isfinite(effective_sample_size) and effective_sample_size >= ESS_THRESHOLD:
        return "PASS"
    return "WARN"
