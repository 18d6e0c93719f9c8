"""Instrument screening, strength estimates and the MR-EO threshold search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .data import SummaryDataset
from .errors import ConfigurationError, EstimatorError, NoUsableInstrumentsError
from .estimators import SelectionSet, divw, divw_variance, divw_variance_pleiotropy, weight_terms

__all__ = [
    "MrEoIteration",
    "MrEoTrace",
    "StrengthEstimates",
    "kappa_hat",
    "mr_eo",
    "null_selection_bound",
    "screen",
    "sqrt_two_log_p",
    "variance_profile",
]


@dataclass(frozen=True)
class StrengthEstimates:
    kappa_hat: float
    p_hat: int
    lambda_: float

    @property
    def effective_sample_size(self) -> float:
        """``kappa_hat * sqrt(p_hat) / max(1, lambda^2)``."""
        return self.kappa_hat * math.sqrt(self.p_hat) / max(1.0, self.lambda_**2)


def screen(dataset: SummaryDataset, lambda_: float) -> SelectionSet:
    """Keep SNPs with ``|gamma_star| > lambda * se_x_star`` (strict).

    ``lambda_ = 0`` bypasses screening and needs no selection columns.
    """
    lam = float(lambda_)
    if not lam >= 0:
        raise ConfigurationError(f"lambda must be nonnegative, got {lambda_!r}")
    if lam == 0:
        return SelectionSet.all(dataset.p)
    if not dataset.has_selection:
        raise ConfigurationError(f"screening at lambda = {lam:g} needs selection-dataset columns")
    keep = np.flatnonzero(np.abs(dataset.gamma_star) > lam * dataset.se_x_star)
    return SelectionSet(keep, lam, dataset.p)


def kappa_hat(dataset: SummaryDataset, selection: SelectionSet) -> StrengthEstimates:
    """Estimated average instrument strength over the selection."""
    if selection.size == 0:
        raise NoUsableInstrumentsError("kappa_hat is undefined for an empty selection")
    idx = selection.indices
    ratio = dataset.gamma_hat[idx] ** 2 / dataset.se_x[idx] ** 2
    return StrengthEstimates(math.fsum(ratio) / idx.size - 1.0, selection.size, selection.lambda_)


def sqrt_two_log_p(p: int) -> float:
    if p < 1:
        raise ConfigurationError("p must be at least 1")
    return math.sqrt(2.0 * math.log(p))


def null_selection_bound(p: int, s: int, lambda_: float) -> float:
    """Upper bound on P(at least one null SNP passes screening at ``lambda_``)."""
    if not 0 <= s <= p:
        raise ConfigurationError("need 0 <= s <= p")
    if not lambda_ > 0:
        raise ConfigurationError("the null-selection bound needs lambda > 0")
    return 2.0 * (p - s) / (lambda_ * math.sqrt(2.0 * math.pi)) * math.exp(-(lambda_**2) / 2.0)


class MrEoIteration(NamedTuple):
    t: int
    lambda_: float
    beta: float
    variance: float


@dataclass
class MrEoTrace:
    """E-steps of one MR-EO run.

    Every E-step is recorded. When ``stop_reason`` is
    ``"variance_non_decreasing"`` the last entry is the rejected step; all
    others were accepted.
    """

    iterations: list[MrEoIteration] = field(default_factory=list)
    final_lambda: float = math.nan
    final_beta: float = math.nan
    final_variance: float = math.nan
    stop_reason: str = "t_max_reached"

    @property
    def accepted(self) -> list[MrEoIteration]:
        if self.stop_reason == "variance_non_decreasing":
            return self.iterations[:-1]
        return list(self.iterations)

    def to_dict(self) -> dict:
        return {
            "final_lambda": self.final_lambda,
            "stop_reason": self.stop_reason,
            "iterations": [it._asdict() for it in self.iterations],
        }


def _z_scores(dataset):
    return np.abs(dataset.gamma_star) / dataset.se_x_star


def candidate_lambdas(dataset: SummaryDataset, bracket_high: float) -> np.ndarray:
    """One threshold per distinct selection set reachable in ``[0, bracket_high]``.

    ``S_lambda`` only changes when ``lambda`` crosses a selection z-score, so
    the midpoint of each gap between consecutive distinct z-scores (clipped
    to the bracket) stands for the whole gap. ``0`` is always first.
    """
    z = np.unique(_z_scores(dataset))
    lo = np.concatenate(([0.0], z[z > 0]))
    lo = lo[lo <= bracket_high]
    hi = np.minimum(np.append(lo[1:], np.inf), bracket_high)
    mids = 0.5 * (lo + hi)
    return np.concatenate(([0.0], mids))


def variance_profile(
    dataset: SummaryDataset, beta: float, lambdas, tau2: float | None = None
) -> np.ndarray:
    """Estimated dIVW variance at each threshold, holding ``beta`` fixed.

    Thresholds giving an empty selection or a non-positive debiased
    denominator get ``+inf``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    wt = weight_terms(dataset)
    w, v = wt.w_hat, wt.v_hat
    num = w + beta**2 * v * (w + v)
    if tau2 is not None and tau2 > 0:
        num = num + w * tau2 * dataset.se_y**-2
    den = w - v
    z = _z_scores(dataset)
    order = np.argsort(-z, kind="stable")
    num_c = np.concatenate(([0.0], np.cumsum(num[order])))
    den_c = np.concatenate(([0.0], np.cumsum(den[order])))
    z_sorted_asc = np.sort(z)
    # count of z > lam; lam == 0 keeps everything
    counts = z.size - np.searchsorted(z_sorted_asc, lambdas, side="right")
    counts = np.where(lambdas == 0, z.size, counts)
    d = den_c[counts]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num_c[counts] / d**2
    out[(counts == 0) | ~(d > 0)] = np.inf
    return out


def _variance(dataset, selection, beta, tau2):
    if tau2 is None:
        return divw_variance(dataset, selection, beta)
    return divw_variance_pleiotropy(dataset, selection, beta, tau2)


def mr_eo(
    dataset: SummaryDataset,
    t_max: int = 5,
    bracket_high: float | None = None,
    tau2: float | None = None,
) -> tuple[SelectionSet, MrEoTrace]:
    """Choose the screening threshold by alternating estimation and variance minimisation.

    Starting from ``lambda_0 = sqrt(2 log p)`` each E-step computes the dIVW
    estimate at the current threshold; the loop stops as soon as its
    estimated variance fails to improve on the last accepted one. Otherwise
    the O-step picks the threshold in ``[0, bracket_high]`` minimising the
    estimated variance with the E-step estimate plugged in. Ties go to the
    smallest threshold.

    Parameters
    ----------
    dataset : SummaryDataset
        Must carry selection columns.
    t_max : int
        Largest iteration index; at most ``t_max + 1`` E-steps run.
    bracket_high : float, optional
        Upper end of the search interval, ``sqrt(2 log p)`` by default.
    tau2 : float, optional
        When given, the balanced-pleiotropy variance is minimised instead.

    Returns
    -------
    selection : SelectionSet
        Selection at the last accepted threshold.
    trace : MrEoTrace
    """
    if not dataset.has_selection:
        raise ConfigurationError("MR-EO needs selection-dataset columns")
    if t_max < 1:
        raise ConfigurationError("t_max must be at least 1")
    lam0 = sqrt_two_log_p(dataset.p)
    if bracket_high is None:
        bracket_high = lam0
    if not bracket_high >= 0:
        raise ConfigurationError("bracket_high must be nonnegative")
    cands = candidate_lambdas(dataset, bracket_high)

    lam = lam0
    try:
        divw(dataset, screen(dataset, lam))
    except EstimatorError:
        # fall back to the largest candidate at or below lambda_0 with a defined estimate
        lam = None
        for c in cands[::-1]:
            if c > lam0:
                continue
            try:
                divw(dataset, screen(dataset, c))
            except EstimatorError:
                continue
            lam = float(c)
            break
        if lam is None:
            raise NoUsableInstrumentsError("MR-EO: dIVW is undefined for every threshold in the bracket")

    trace = MrEoTrace()
    best = None
    v_best = math.inf
    t = 0
    while t <= t_max:
        selection = screen(dataset, lam)
        beta = divw(dataset, selection)
        var = _variance(dataset, selection, beta, tau2)
        trace.iterations.append(MrEoIteration(t, lam, beta, var))
        if v_best <= var:
            trace.stop_reason = "variance_non_decreasing"
            break
        v_best = var
        best = (lam, selection, beta, var)
        profile = variance_profile(dataset, beta, cands, tau2)
        k = int(np.argmin(profile))
        if not np.isfinite(profile[k]):
            trace.stop_reason = "variance_non_decreasing"
            break
        lam = float(cands[k])
        t += 1

    trace.final_lambda, selection, trace.final_beta, trace.final_variance = best
    return selection, trace
