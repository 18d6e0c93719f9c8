"""IVW and debiased IVW point and variance estimators.

Every estimator is a pure function of a :class:`~divw.data.SummaryDataset`
and a :class:`SelectionSet`; passing ``selection=None`` uses every SNP
(no screening). Sums go through :func:`math.fsum`, so results do not depend
on record order or on how work was split across processes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import EstimateReport, SummaryDataset
from .errors import ConfigurationError, DegenerateDenominatorError, NoUsableInstrumentsError

__all__ = [
    "ESS_THRESHOLD",
    "GENOME_WIDE_LAMBDA",
    "Z_95",
    "LambdaPolicy",
    "SelectionSet",
    "WeightTerms",
    "analyze",
    "divw",
    "divw_variance",
    "divw_variance_pleiotropy",
    "ivw",
    "ivw_variance",
    "tau2_hat",
    "weight_terms",
]

Z_95 = 1.96
GENOME_WIDE_LAMBDA = 5.45
ESS_THRESHOLD = 20.0


@dataclass(frozen=True)
class SelectionSet:
    """Sorted positions of the SNPs kept by screening at threshold ``lambda_``."""

    indices: np.ndarray
    lambda_: float
    p: int

    def __post_init__(self):
        idx = np.unique(np.asarray(self.indices, dtype=np.intp))
        if idx.size and (idx[0] < 0 or idx[-1] >= self.p):
            raise ConfigurationError(f"selection indices out of range 0..{self.p - 1}")
        if not self.lambda_ >= 0:
            raise ConfigurationError(f"lambda must be nonnegative, got {self.lambda_!r}")
        if self.lambda_ == 0 and idx.size != self.p:
            raise ConfigurationError("lambda = 0 selects every SNP")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "lambda_", float(self.lambda_))

    @classmethod
    def all(cls, p: int) -> "SelectionSet":
        return cls(np.arange(p), 0.0, p)

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def __len__(self) -> int:
        return self.size


@dataclass(frozen=True)
class WeightTerms:
    """Per-SNP ``w_hat = gamma_hat^2 / se_y^2`` and ``v_hat = se_x^2 / se_y^2``."""

    w_hat: np.ndarray
    v_hat: np.ndarray


def weight_terms(dataset: SummaryDataset) -> WeightTerms:
    inv = dataset.se_y**-2
    return WeightTerms(dataset.gamma_hat**2 * inv, dataset.se_x**2 * inv)


def _idx(dataset, selection):
    if selection is None:
        return slice(None)
    if selection.p != dataset.p:
        raise ConfigurationError(f"selection built for p={selection.p}, dataset has p={dataset.p}")
    if selection.size == 0:
        raise NoUsableInstrumentsError(f"no usable instruments: no SNP passes lambda = {selection.lambda_:g}")
    return selection.indices


def _cross(dataset, idx):
    return math.fsum(dataset.Gamma_hat[idx] * dataset.gamma_hat[idx] * dataset.se_y[idx] ** -2)


def _pieces(dataset, idx):
    wt = weight_terms(dataset)
    return wt.w_hat[idx], wt.v_hat[idx]


def ivw(dataset: SummaryDataset, selection: SelectionSet | None = None) -> float:
    """Inverse-variance weighted estimate over the selected SNPs."""
    idx = _idx(dataset, selection)
    den = math.fsum(dataset.gamma_hat[idx] ** 2 * dataset.se_y[idx] ** -2)
    if not den > 0:
        raise NoUsableInstrumentsError("no usable instruments: sum of w_hat over the selection is 0")
    return _cross(dataset, idx) / den


def _debiased_denominator(w, v):
    den = math.fsum(w - v)
    if not den > 0:
        raise DegenerateDenominatorError(den)
    return den


def divw(dataset: SummaryDataset, selection: SelectionSet | None = None) -> float:
    """Debiased IVW estimate: the IVW numerator over ``sum(w_hat - v_hat)``.

    Raises
    ------
    DegenerateDenominatorError
        When ``sum(w_hat - v_hat) <= 0`` over the selection. There is no
        fallback to plain IVW.
    """
    idx = _idx(dataset, selection)
    w, v = _pieces(dataset, idx)
    return _cross(dataset, idx) / _debiased_denominator(w, v)


def _numerator(w, v, beta_hat, extra=None):
    terms = w + beta_hat**2 * v * (w + v)
    if extra is not None:
        terms = terms + extra
    return math.fsum(terms)


def ivw_variance(dataset: SummaryDataset, selection: SelectionSet | None, beta_hat: float) -> float:
    idx = _idx(dataset, selection)
    w, v = _pieces(dataset, idx)
    den = math.fsum(w)
    if not den > 0:
        raise NoUsableInstrumentsError("no usable instruments: sum of w_hat over the selection is 0")
    return _numerator(w, v, beta_hat) / den**2


def divw_variance(dataset: SummaryDataset, selection: SelectionSet | None, beta_hat: float) -> float:
    idx = _idx(dataset, selection)
    w, v = _pieces(dataset, idx)
    den = _debiased_denominator(w, v)
    return _numerator(w, v, beta_hat) / den**2


def divw_variance_pleiotropy(
    dataset: SummaryDataset, selection: SelectionSet | None, beta_hat: float, tau2: float
) -> float:
    """dIVW variance under balanced pleiotropy; negative ``tau2`` is treated as 0."""
    tau2 = max(float(tau2), 0.0)
    idx = _idx(dataset, selection)
    w, v = _pieces(dataset, idx)
    den = _debiased_denominator(w, v)
    extra = None if tau2 == 0 else w * tau2 * dataset.se_y[idx] ** -2
    return _numerator(w, v, beta_hat, extra) / den**2


def tau2_hat(dataset: SummaryDataset) -> float:
    """Raw (possibly negative) estimate of the pleiotropy variance.

    Always uses the unscreened dIVW estimate and all ``p`` SNPs.
    """
    b = divw(dataset)
    inv = dataset.se_y**-2
    resid = (dataset.Gamma_hat - b * dataset.gamma_hat) ** 2 - dataset.se_y**2 - b**2 * dataset.se_x**2
    return math.fsum(resid * inv) / math.fsum(inv)


@dataclass(frozen=True)
class LambdaPolicy:
    """How the screening threshold is chosen.

    ``kind`` is one of ``none``, ``fixed``, ``genome_wide``, ``sqrt_2_log_p``
    or ``mr_eo``; ``value`` is used by ``fixed`` only.
    """

    kind: str = "none"
    value: float = 0.0

    KINDS = ("none", "fixed", "genome_wide", "sqrt_2_log_p", "mr_eo")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ConfigurationError(f"unknown lambda policy {self.kind!r}")
        if self.kind == "fixed" and not (self.value >= 0 and math.isfinite(self.value)):
            raise ConfigurationError(f"fixed lambda must be a finite number >= 0, got {self.value!r}")

    @classmethod
    def parse(cls, spec) -> "LambdaPolicy":
        """Accepts a policy, a number, or one of the CLI spellings."""
        if isinstance(spec, LambdaPolicy):
            return spec
        if isinstance(spec, (int, float)) and not isinstance(spec, bool):
            return cls("fixed", float(spec))
        s = str(spec).strip().lower().replace("-", "_")
        aliases = {
            "none": "none",
            "0": "none",
            "genomewide": "genome_wide",
            "genome_wide": "genome_wide",
            "sqrt2logp": "sqrt_2_log_p",
            "sqrt_2_log_p": "sqrt_2_log_p",
            "mr_eo": "mr_eo",
            "mreo": "mr_eo",
        }
        if s in aliases:
            return cls(aliases[s])
        try:
            return cls("fixed", float(s))
        except ValueError:
            raise ConfigurationError(f"unknown lambda policy {spec!r}") from None

    @property
    def label(self) -> str:
        return {
            "none": "0",
            "fixed": f"{self.value:g}",
            "genome_wide": f"{GENOME_WIDE_LAMBDA:g}",
            "sqrt_2_log_p": "sqrt(2logp)",
            "mr_eo": "MR-EO",
        }[self.kind]

    def resolve(self, p: int) -> float:
        """Numeric threshold for every policy except ``mr_eo``."""
        from .selection import sqrt_two_log_p

        if self.kind == "none":
            return 0.0
        if self.kind == "fixed":
            return float(self.value)
        if self.kind == "genome_wide":
            return GENOME_WIDE_LAMBDA
        if self.kind == "sqrt_2_log_p":
            return sqrt_two_log_p(p)
        raise ConfigurationError("the MR-EO threshold depends on the data; use selection.mr_eo")


def analyze(
    dataset: SummaryDataset,
    lambda_policy="none",
    pleiotropy: bool = False,
    method: str = "dIVW",
    t_max: int = 5,
    tau2: float | None = None,
) -> EstimateReport:
    """Screen, estimate and summarise in one call.

    Parameters
    ----------
    dataset : SummaryDataset
    lambda_policy : LambdaPolicy, str or float
        Screening threshold rule; see :meth:`LambdaPolicy.parse`.
    pleiotropy : bool
        Use the balanced-pleiotropy variance (dIVW only).
    method : {"dIVW", "IVW"}
    t_max : int
        Iteration cap for MR-EO.
    tau2 : float, optional
        Precomputed :func:`tau2_hat`; computed here when needed and omitted.

    Returns
    -------
    EstimateReport
    """
    from . import selection as sel

    method = {"divw": "dIVW", "ivw": "IVW"}.get(str(method).lower())
    if method is None:
        raise ConfigurationError("method must be 'IVW' or 'dIVW'")
    policy = LambdaPolicy.parse(lambda_policy)
    if pleiotropy and method == "IVW":
        raise ConfigurationError("the pleiotropy-adjusted variance is defined for dIVW only")
    if policy.kind == "mr_eo" and method == "IVW":
        raise ConfigurationError("MR-EO selects lambda for the dIVW estimator only")

    if pleiotropy and tau2 is None:
        tau2 = tau2_hat(dataset)
    trace = None
    if policy.kind == "mr_eo":
        if not dataset.has_selection:
            raise ConfigurationError("MR-EO needs selection-dataset columns")
        selection, trace = sel.mr_eo(dataset, t_max=t_max, tau2=tau2 if pleiotropy else None)
    else:
        lam = policy.resolve(dataset.p)
        selection = sel.screen(dataset, lam)

    if method == "IVW":
        beta = ivw(dataset, selection)
        var = ivw_variance(dataset, selection, beta)
    else:
        beta = divw(dataset, selection)
        if pleiotropy:
            var = divw_variance_pleiotropy(dataset, selection, beta, tau2)
        else:
            var = divw_variance(dataset, selection, beta)
    strength = sel.kappa_hat(dataset, selection)

    notes = []
    if strength.effective_sample_size < ESS_THRESHOLD:
        notes.append(
            f"effective sample size below {ESS_THRESHOLD:g} "
            f"(kappa_hat*sqrt(p_hat)/max(1,lambda^2) = {strength.effective_sample_size:.3g})"
        )
    if pleiotropy and tau2 < 0:
        notes.append(f"tau2_hat = {tau2:.3g} < 0 was set to 0 in the variance")
    return EstimateReport(
        method=method,
        pleiotropy_adjusted=bool(pleiotropy),
        lambda_=selection.lambda_,
        lambda_policy=policy.label,
        beta_hat=beta,
        se=math.sqrt(var),
        p_selected=selection.size,
        p_total=dataset.p,
        kappa_hat=strength.kappa_hat,
        effective_sample_size=strength.effective_sample_size,
        tau2_hat=tau2 if pleiotropy else None,
        warnings=notes,
        mr_eo_trace=trace,
    )
