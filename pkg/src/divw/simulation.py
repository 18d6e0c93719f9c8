"""Data-generating processes and the Monte Carlo runner.

Two generators are provided. :func:`gen_summary_level` draws summary
statistics directly from their normal sampling distributions around known
population values. :func:`gen_individual_level` simulates three cohorts of
genotypes, exposure and outcome and runs per-SNP marginal least squares,
streaming over SNPs so the ``n x p`` genotype matrix is never held in memory.

Randomness is organised in independent substreams keyed by
``(seed, purpose, replication, cohort, snp)`` through
:class:`numpy.random.SeedSequence`, so a replication's data do not depend on
which worker ran it or on how many workers there were.
"""

from __future__ import annotations

import configparser
import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import PopulationParams, SummaryDataset, read_population_params
from .errors import ConfigurationError, EstimatorError
from .estimators import LambdaPolicy, analyze, tau2_hat

__all__ = [
    "CASES",
    "MethodSpec",
    "MonteCarloSummary",
    "Pleiotropy",
    "ReplicateTable",
    "SimulationConfig",
    "case_config",
    "default_specs",
    "gen_individual_level",
    "gen_summary_level",
    "marginal_ols",
    "population_params",
    "read_config",
    "run_monte_carlo",
    "simulate_replicates",
    "summarize",
]

VAR_Z = 0.5  # genotype variance under P(0, 1, 2) = (1/4, 1/2, 1/4)
MEAN_Z = 1.0

# substream purposes
_PHI, _SUMMARY, _GENOTYPE, _NOISE, _ALPHA = 0, 1, 2, 3, 4
EXPOSURE, OUTCOME, SELECTION = 0, 1, 2


@dataclass(frozen=True)
class Pleiotropy:
    """Direct SNP effects on the outcome.

    ``balanced`` draws ``alpha_j ~ N(0, tau0^2)`` afresh in every replication;
    when ``tau0_scale`` is set, ``tau0`` is that multiple of the mean true
    outcome SD. ``directional`` fixes ``alpha_j = value`` for the first
    ``int(p * xi)`` SNPs and 0 elsewhere.
    """

    kind: str = "none"
    tau0: float = 0.0
    tau0_scale: float | None = None
    xi: float = 0.0
    value: float = 0.01

    def __post_init__(self):
        if self.kind not in ("none", "balanced", "directional"):
            raise ConfigurationError(f"unknown pleiotropy kind {self.kind!r}")
        if self.tau0 < 0 or (self.tau0_scale is not None and self.tau0_scale < 0):
            raise ConfigurationError("tau0 must be nonnegative")
        if not 0 <= self.xi <= 1:
            raise ConfigurationError("xi must lie in [0, 1]")

    def fixed_alpha(self, p: int) -> np.ndarray:
        alpha = np.zeros(p)
        if self.kind == "directional":
            # the small offset keeps products such as 100 * 0.29 from truncating one short
            alpha[: int(p * self.xi + 1e-9)] = self.value
        return alpha


@dataclass(frozen=True)
class SimulationConfig:
    """Everything needed to reproduce one Monte Carlo study.

    ``gamma`` overrides the heritability split ``gamma_j = phi_j * sqrt(2 h2 / s)``
    (``phi`` standard normal, drawn once per seed). ``params`` supplies a
    complete population for the summary-level generator, e.g. one built from
    a real dataset.
    """

    dgp: str = "individual_level"
    n_x: int = 10_000
    n_y: int = 10_000
    n_x_star: int = 10_000
    p: int = 2_000
    s: int = 200
    h2: float = 0.1
    beta0: float = 0.4
    eta_x: float = 1.0
    eta_y: float = 1.0
    pleiotropy: Pleiotropy = field(default_factory=Pleiotropy)
    gamma: tuple | None = None
    params: PopulationParams | None = None
    replications: int = 500
    seed: int = 1
    use_true_sds: bool = False
    name: str = "custom"

    def __post_init__(self):
        if self.dgp not in ("summary_level", "individual_level"):
            raise ConfigurationError(f"unknown dgp {self.dgp!r}")
        if not 0 <= self.s <= self.p:
            raise ConfigurationError("need 0 <= s <= p")
        if self.replications < 1:
            raise ConfigurationError("replications must be at least 1")
        if not 0 <= self.h2 < 1:
            raise ConfigurationError("h2 must lie in [0, 1)")
        if self.dgp == "individual_level":
            if min(self.n_x, self.n_y, self.n_x_star) < 3:
                raise ConfigurationError("cohort sizes below 3 leave the OLS standard error undefined")
            if self.params is not None:
                raise ConfigurationError("explicit population params only apply to the summary-level dgp")
        if self.gamma is not None and len(self.gamma) != self.p:
            raise ConfigurationError(f"gamma has {len(self.gamma)} entries, expected p = {self.p}")
        if self.params is not None and self.params.p != self.p:
            raise ConfigurationError(f"params describe {self.params.p} SNPs, expected p = {self.p}")

    @property
    def var_u(self) -> float:
        return 0.6 * (1.0 - self.h2)

    @property
    def var_e(self) -> float:
        return 0.4 * (1.0 - self.h2)


def _rng(*key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in key]))


def true_gamma(config: SimulationConfig) -> np.ndarray:
    if config.gamma is not None:
        return np.asarray(config.gamma, dtype=float)
    gamma = np.zeros(config.p)
    if config.s:
        phi = _rng(config.seed, _PHI).standard_normal(config.s)
        gamma[: config.s] = phi * math.sqrt(2.0 * config.h2 / config.s)
    return gamma


def _variances(config, gamma, alpha):
    """Population Var(X) and Var(Y) given the per-SNP effects."""
    var_x = VAR_Z * math.fsum(gamma**2) + config.eta_x**2 * config.var_u + config.var_e
    coef_y = config.beta0 * gamma + alpha
    var_y = (
        VAR_Z * math.fsum(coef_y**2)
        + (config.beta0 * config.eta_x + config.eta_y) ** 2 * config.var_u
        + (config.beta0**2 + 1.0) * config.var_e
    )
    return var_x, var_y


def true_sds(config: SimulationConfig, gamma, alpha):
    """Closed-form sampling SDs of the marginal-regression coefficients."""
    var_x, var_y = _variances(config, gamma, alpha)
    coef_y = config.beta0 * gamma + alpha
    sx2 = (var_x - gamma**2 * VAR_Z) / VAR_Z
    sy2 = (var_y - coef_y**2 * VAR_Z) / VAR_Z
    return np.sqrt(sx2 / config.n_x), np.sqrt(sy2 / config.n_y), np.sqrt(sx2 / config.n_x_star)


def population_params(config: SimulationConfig) -> PopulationParams:
    """True parameters implied by a configuration.

    Balanced pleiotropy is not part of the outcome SDs here: they describe
    the sampling noise of the outcome estimates given the pleiotropic effects.
    """
    if config.params is not None:
        params = config.params
        pl = config.pleiotropy
        tau0 = pl.tau0
        if pl.kind == "balanced" and pl.tau0_scale is not None:
            tau0 = pl.tau0_scale * float(np.mean(params.sigma_y))
        alpha = pl.fixed_alpha(config.p) if pl.kind == "directional" else params.alpha
        return replace(params, beta0=config.beta0, tau0=tau0 if pl.kind == "balanced" else params.tau0, alpha=alpha)
    gamma = true_gamma(config)
    pl = config.pleiotropy
    alpha = pl.fixed_alpha(config.p)
    sx, sy, sxs = true_sds(config, gamma, alpha)
    tau0 = 0.0
    if pl.kind == "balanced":
        tau0 = pl.tau0_scale * float(np.mean(sy)) if pl.tau0_scale is not None else pl.tau0
    return PopulationParams(
        gamma=gamma,
        sigma_x=sx,
        sigma_y=sy,
        sigma_x_star=sxs,
        beta0=config.beta0,
        tau0=tau0,
        alpha=alpha if pl.kind == "directional" else None,
    )


def gen_summary_level(params: PopulationParams, rng: np.random.Generator) -> SummaryDataset:
    """Draw one set of summary statistics around ``params``.

    Reported standard errors equal the true SDs. A nonzero ``params.tau0``
    adds fresh balanced pleiotropic effects; ``params.alpha`` adds fixed ones.
    """
    p = params.p
    gamma_hat = params.gamma + params.sigma_x * rng.standard_normal(p)
    mean_y = params.beta0 * params.gamma
    if params.alpha is not None:
        mean_y = mean_y + params.alpha
    if params.tau0 > 0:
        mean_y = mean_y + params.tau0 * rng.standard_normal(p)
    Gamma_hat = mean_y + params.sigma_y * rng.standard_normal(p)
    gamma_star = params.gamma + params.sigma_x_star * rng.standard_normal(p)
    return SummaryDataset(gamma_hat, params.sigma_x, Gamma_hat, params.sigma_y, gamma_star, params.sigma_x_star)


# ---------------------------------------------------------------------------
# individual-level generator


def genotypes(seed: int, rep: int, cohort: int, snp: int, n: int) -> np.ndarray:
    """Genotype column for one SNP in one cohort, from its own substream.

    Inverse CDF of a single uniform per draw: 0 below 1/4, 2 above 3/4.
    """
    u = _rng(seed, _GENOTYPE, rep, cohort, snp).random(n, dtype=np.float32)
    z = (u > 0.25).view(np.int8)
    return z + (u > 0.75).view(np.int8)


_BLOCK = 64
_CACHE_BYTES = 512 * 2**20


def marginal_ols(trait: np.ndarray, column, p: int):
    """Per-SNP simple regressions (with intercept) of ``trait`` on genotypes.

    ``column(j)`` returns the int8 genotype vector of SNP ``j``. Columns are
    processed in blocks; genotype sums are exact integers and the cross
    products with the centered trait are one matrix product per block.

    Returns
    -------
    beta, se : ndarray
        Slopes and their OLS standard errors ``sqrt(RSS / ((n - 2) Szz))``.
    """
    trait = np.asarray(trait, dtype=float)
    n = trait.size
    if n < 3:
        raise ConfigurationError("marginal OLS needs at least 3 observations")
    centered = trait - trait.mean()
    syy = float(centered @ centered)
    rhs = np.column_stack([np.ones(n), centered])
    beta = np.empty(p)
    se = np.empty(p)
    for start in range(0, p, _BLOCK):
        stop = min(start + _BLOCK, p)
        block = np.empty((stop - start, n), dtype=np.int8)
        for k, j in enumerate(range(start, stop)):
            block[k] = column(j)
        sums = block.astype(np.float64) @ rhs
        s1, szy = sums[:, 0], sums[:, 1]
        s2 = s1 + 2.0 * np.count_nonzero(block == 2, axis=1)
        szz = s2 - s1 * s1 / n
        if np.any(szz <= 0):
            j = start + int(np.flatnonzero(szz <= 0)[0])
            raise ConfigurationError(f"SNP {j} is monomorphic; increase n")
        b = szy / szz
        rss = syy - b * szy
        beta[start:stop] = b
        se[start:stop] = np.sqrt(rss / ((n - 2) * szz))
    return beta, se


def _cohort(config, rep, cohort, n, coef, extra_noise):
    """Marginal regressions of one simulated trait on every SNP of one cohort.

    ``coef`` are the genetic effects on the trait; ``extra_noise(rng, n)``
    returns its non-genetic part. Pass 1 accumulates the genetic part from
    the SNPs with nonzero effects (kept as int8 when they fit in
    ``_CACHE_BYTES``); pass 2 regenerates the remaining columns and fits.
    """
    active = np.flatnonzero(coef)
    cache = {} if active.size * n <= _CACHE_BYTES else None
    trait = extra_noise(_rng(config.seed, _NOISE, rep, cohort), n)
    for start in range(0, active.size, _BLOCK):
        cols = active[start : start + _BLOCK]
        block = np.empty((cols.size, n), dtype=np.int8)
        for k, j in enumerate(cols):
            block[k] = genotypes(config.seed, rep, cohort, j, n)
            if cache is not None:
                cache[j] = block[k]
        trait += coef[cols] @ block.astype(np.float64)

    def column(j):
        if cache is not None and j in cache:
            return cache[j]
        return genotypes(config.seed, rep, cohort, j, n)

    try:
        return marginal_ols(trait, column, config.p)
    except ConfigurationError as exc:
        raise ConfigurationError(f"cohort {cohort}, replication {rep}: {exc}") from None


def _replicate_alpha(config, rep):
    pl = config.pleiotropy
    if pl.kind == "balanced":
        tau0 = pl.tau0
        if pl.tau0_scale is not None:
            gamma = true_gamma(config)
            _, sy, _ = true_sds(config, gamma, np.zeros(config.p))
            tau0 = pl.tau0_scale * float(np.mean(sy))
        return tau0 * _rng(config.seed, _ALPHA, rep).standard_normal(config.p)
    return pl.fixed_alpha(config.p)


def gen_individual_level(config: SimulationConfig, rep: int = 0) -> SummaryDataset:
    """Simulate exposure, outcome and selection cohorts and summarise them.

    Each cohort has its own genotypes ``Z_j`` in {0, 1, 2}, confounder
    ``U ~ N(0, 0.6 (1 - h2))`` and errors ``N(0, 0.4 (1 - h2))``;
    ``X = sum gamma_j Z_j + eta_x U + E_X`` and
    ``Y = beta0 X + sum alpha_j Z_j + eta_y U + E_Y``. Reported SEs come from
    the marginal fits, or from the closed-form SDs when
    ``config.use_true_sds`` is set.
    """
    if config.dgp != "individual_level":
        raise ConfigurationError("gen_individual_level needs dgp = 'individual_level'")
    gamma = true_gamma(config)
    alpha = _replicate_alpha(config, rep)
    sd_u, sd_e = math.sqrt(config.var_u), math.sqrt(config.var_e)

    def exposure_noise(rng, n):
        return config.eta_x * sd_u * rng.standard_normal(n) + sd_e * rng.standard_normal(n)

    def outcome_noise(rng, n):
        u = sd_u * rng.standard_normal(n)
        e_x = sd_e * rng.standard_normal(n)
        e_y = sd_e * rng.standard_normal(n)
        return (config.beta0 * config.eta_x + config.eta_y) * u + config.beta0 * e_x + e_y

    fx = _cohort(config, rep, EXPOSURE, config.n_x, gamma, exposure_noise)
    fy = _cohort(config, rep, OUTCOME, config.n_y, config.beta0 * gamma + alpha, outcome_noise)
    fs = _cohort(config, rep, SELECTION, config.n_x_star, gamma, exposure_noise)
    (bx, se_x), (by, se_y), (bs, se_s) = fx, fy, fs
    if config.use_true_sds:
        se_x, se_y, se_s = true_sds(config, gamma, alpha)
    return SummaryDataset(bx, se_x, by, se_y, bs, se_s)


def generate(config: SimulationConfig, rep: int, params: PopulationParams | None = None) -> SummaryDataset:
    """Dataset for replication ``rep`` under either generator."""
    if config.dgp == "summary_level":
        if params is None:
            params = population_params(config)
        return gen_summary_level(params, _rng(config.seed, _SUMMARY, rep))
    return gen_individual_level(config, rep)


# ---------------------------------------------------------------------------
# Monte Carlo runner


@dataclass(frozen=True)
class MethodSpec:
    """One estimator configuration evaluated in every replication."""

    method: str = "dIVW"
    policy: LambdaPolicy = field(default_factory=LambdaPolicy)
    pleiotropy: bool = False

    def __post_init__(self):
        m = {"ivw": "IVW", "divw": "dIVW"}.get(str(self.method).lower())
        if m is None:
            raise ConfigurationError(f"unknown method {self.method!r}")
        object.__setattr__(self, "method", m)
        object.__setattr__(self, "policy", LambdaPolicy.parse(self.policy))
        if self.pleiotropy and m == "IVW":
            raise ConfigurationError("pleiotropy adjustment is available for dIVW only")
        if self.policy.kind == "mr_eo" and m == "IVW":
            raise ConfigurationError("MR-EO is available for dIVW only")

    @property
    def label(self) -> str:
        return self.method + ("_alpha" if self.pleiotropy else "")


@dataclass
class ReplicateTable:
    """Per-replication results, arrays of shape ``(replications, len(specs))``."""

    specs: list[MethodSpec]
    beta0: float
    beta: np.ndarray
    se: np.ndarray
    lambda_: np.ndarray
    p_selected: np.ndarray
    failed: np.ndarray

    def column(self, spec_index: int) -> dict:
        ok = ~self.failed[:, spec_index]
        return {
            "beta": self.beta[ok, spec_index],
            "se": self.se[ok, spec_index],
            "lambda": self.lambda_[ok, spec_index],
            "p_selected": self.p_selected[ok, spec_index],
        }


def _run_one(config, specs, params, rep):
    ds = generate(config, rep, params)
    row = []
    tau2 = None
    for spec in specs:
        try:
            if spec.pleiotropy and tau2 is None:
                tau2 = tau2_hat(ds)
            r = analyze(ds, spec.policy, pleiotropy=spec.pleiotropy, method=spec.method, tau2=tau2)
            row.append((r.beta_hat, r.se, r.lambda_, r.p_selected, False))
        except EstimatorError:
            row.append((math.nan, math.nan, math.nan, 0, True))
    return row


def _run_chunk(args):
    config, specs, params, reps = args
    return [(rep, _run_one(config, specs, params, rep)) for rep in reps]


def simulate_replicates(config: SimulationConfig, specs: Sequence[MethodSpec], workers: int = 1) -> ReplicateTable:
    """Generate every replication and evaluate every spec on it.

    Results are placed by replication index, so they are identical for any
    ``workers``.
    """
    specs = [s if isinstance(s, MethodSpec) else MethodSpec(*s) for s in specs]
    if not specs:
        raise ConfigurationError("no method specs given")
    params = population_params(config) if config.dgp == "summary_level" else None
    R, K = config.replications, len(specs)
    reps = list(range(R))
    if workers <= 1:
        results = _run_chunk((config, specs, params, reps))
    else:
        n_chunks = min(R, 4 * workers)
        chunks = [reps[i::n_chunks] for i in range(n_chunks)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [item for part in pool.map(_run_chunk, [(config, specs, params, c) for c in chunks]) for item in part]
    table = np.empty((R, K, 5))
    for rep, row in results:
        table[rep] = np.array(row, dtype=float)
    return ReplicateTable(
        specs=specs,
        beta0=config.beta0,
        beta=table[:, :, 0],
        se=table[:, :, 1],
        lambda_=table[:, :, 2],
        p_selected=table[:, :, 3].astype(int),
        failed=table[:, :, 4].astype(bool),
    )


@dataclass(frozen=True)
class MethodSummary:
    method: str
    lambda_policy: str
    mean: float
    sd: float
    mean_se: float
    coverage: float
    failures: int
    mean_lambda: float
    mean_selected: float
    replications: int


@dataclass
class MonteCarloSummary:
    rows: list[MethodSummary]
    config_name: str = "custom"
    replications: int = 0

    CSV_COLUMNS = ("method", "lambda_policy", "mean", "sd", "mean_se", "coverage", "failures", "mean_lambda")

    def row(self, method: str, lambda_policy: str) -> MethodSummary:
        for r in self.rows:
            if r.method == method and r.lambda_policy == lambda_policy:
                return r
        raise KeyError((method, lambda_policy))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_COLUMNS)
        for r in self.rows:
            w.writerow(
                [r.method, r.lambda_policy]
                + [_fmt(x) for x in (r.mean, r.sd, r.mean_se, r.coverage)]
                + [r.failures, _fmt(r.mean_lambda)]
            )
        return buf.getvalue()

    def to_text(self) -> str:
        head = f"{'method':<10} {'lambda':<12} {'mean':>8} {'SD':>8} {'SE':>8} {'CP%':>6} {'fail':>6} {'mean_lam':>9}"
        lines = [f"{self.config_name}: {self.replications} replications", head, "-" * len(head)]
        for r in self.rows:
            lines.append(
                f"{r.method:<10} {r.lambda_policy:<12} {r.mean:8.3f} {r.sd:8.3f} {r.mean_se:8.3f} "
                f"{100 * r.coverage:6.1f} {r.failures:6d} {r.mean_lambda:9.2f}"
            )
        return "\n".join(lines)


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else format(x, ".10g")


def _mean(x):
    return math.fsum(x) / len(x) if len(x) else math.nan


def summarize(table: ReplicateTable, config_name: str = "custom") -> MonteCarloSummary:
    """Mean, SD, mean SE and coverage per spec over the successful replications."""
    rows = []
    for k, spec in enumerate(table.specs):
        col = table.column(k)
        b, se = col["beta"], col["se"]
        m = _mean(b)
        sd = math.sqrt(math.fsum((b - m) ** 2) / (b.size - 1)) if b.size > 1 else math.nan
        cover = np.abs(b - table.beta0) <= 1.96 * se
        rows.append(
            MethodSummary(
                method=spec.label,
                lambda_policy=spec.policy.label,
                mean=m,
                sd=sd,
                mean_se=_mean(se),
                coverage=_mean(cover.astype(float)),
                failures=int(table.failed[:, k].sum()),
                mean_lambda=_mean(col["lambda"]),
                mean_selected=_mean(col["p_selected"].astype(float)),
                replications=table.beta.shape[0],
            )
        )
    return MonteCarloSummary(rows, config_name, table.beta.shape[0])


def run_monte_carlo(config: SimulationConfig, specs: Sequence[MethodSpec], workers: int = 1) -> MonteCarloSummary:
    return summarize(simulate_replicates(config, specs, workers), config.name)


# ---------------------------------------------------------------------------
# configurations

CASES = {
    "case4": dict(n=10_000, p=2_000, s=200, h2=0.1),
    "case5": dict(n=10_000, p=2_000, s=1_000, h2=0.2),
    "case6": dict(n=50_000, p=2_000, s=1_000, h2=0.2),
    "case7": dict(n=10_000, p=2_000, s=2_000, h2=0.2),
}


def case_config(case_id: str, replications: int = 500, seed: int = 1, **overrides) -> SimulationConfig:
    """Preset study configurations.

    ``case4`` .. ``case7`` are the individual-level designs. ``tableS1`` is the
    summary-level design on the case-4 population with balanced pleiotropy,
    ``tau0`` twice the mean outcome SD. ``tableS2:<xi>`` is the summary-level
    design on the case-7 population (every SNP non-null) with
    ``alpha_j = 0.01`` on the first ``int(p * xi)`` SNPs.
    """
    cid = str(case_id).lower().replace("case_", "case")
    if cid in ("4", "5", "6", "7"):
        cid = "case" + cid
    if cid in CASES:
        c = CASES[cid]
        base = SimulationConfig(
            dgp="individual_level",
            n_x=c["n"],
            n_y=c["n"],
            n_x_star=c["n"],
            p=c["p"],
            s=c["s"],
            h2=c["h2"],
            beta0=0.4,
            replications=replications,
            seed=seed,
            name=cid,
        )
    elif cid in ("tables1", "s1"):
        c = CASES["case4"]
        base = SimulationConfig(
            dgp="summary_level",
            n_x=c["n"], n_y=c["n"], n_x_star=c["n"], p=c["p"], s=c["s"], h2=c["h2"], beta0=0.4,
            pleiotropy=Pleiotropy("balanced", tau0_scale=2.0),
            replications=replications,
            seed=seed,
            name="tableS1",
        )
    elif cid.startswith(("tables2", "s2")):
        _, _, tail = cid.partition(":")
        try:
            xi = float(tail) if tail else 0.25
        except ValueError:
            raise ConfigurationError(f"bad xi in case id {case_id!r}") from None
        c = CASES["case7"]
        base = SimulationConfig(
            dgp="summary_level",
            n_x=c["n"], n_y=c["n"], n_x_star=c["n"], p=c["p"], s=c["s"], h2=c["h2"], beta0=0.4,
            pleiotropy=Pleiotropy("directional", xi=xi, value=0.01),
            replications=replications,
            seed=seed,
            name=f"tableS2:{xi:g}",
        )
    else:
        raise ConfigurationError(f"unknown case {case_id!r}")
    return replace(base, **overrides) if overrides else base


_INT_KEYS = ("n_x", "n_y", "n_x_star", "p", "s", "replications", "seed")
_FLOAT_KEYS = ("h2", "beta0", "eta_x", "eta_y")


def read_config(path) -> SimulationConfig:
    """Parse a flat ``key = value`` file into a :class:`SimulationConfig`.

    Keys mirror the dataclass fields, plus ``case`` (start from a preset),
    ``n`` (all three cohort sizes), ``pleiotropy`` (none | balanced |
    directional) with ``tau0``, ``tau0_scale``, ``xi`` and ``alpha_value``,
    ``gamma_file`` (one number per line) and ``params_file`` (JSON
    population parameters, summary-level only). Relative paths resolve
    against the config file's directory.
    """
    path = Path(path)
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string("[config]\n" + path.read_text(encoding="utf-8"))
    except (OSError, configparser.Error) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    raw = dict(parser["config"])
    known = set(_INT_KEYS + _FLOAT_KEYS) | {
        "case", "n", "dgp", "pleiotropy", "tau0", "tau0_scale", "xi", "alpha_value",
        "gamma_file", "params_file", "use_true_sds", "name",
    }
    unknown = set(raw) - known
    if unknown:
        raise ConfigurationError(f"{path}: unknown keys {sorted(unknown)}")

    kw = {}
    try:
        for key in _INT_KEYS:
            if key in raw:
                kw[key] = int(raw[key])
        for key in _FLOAT_KEYS:
            if key in raw:
                kw[key] = float(raw[key])
        if "n" in raw:
            n = int(raw["n"])
            kw.update(n_x=n, n_y=n, n_x_star=n)
        if "dgp" in raw:
            kw["dgp"] = raw["dgp"].strip()
        if "use_true_sds" in raw:
            kw["use_true_sds"] = parser.getboolean("config", "use_true_sds")
        if "name" in raw:
            kw["name"] = raw["name"].strip()
        if "pleiotropy" in raw:
            scale = raw.get("tau0_scale")
            kw["pleiotropy"] = Pleiotropy(
                raw["pleiotropy"].strip(),
                tau0=float(raw.get("tau0", 0.0)),
                tau0_scale=None if scale is None else float(scale),
                xi=float(raw.get("xi", 0.0)),
                value=float(raw.get("alpha_value", 0.01)),
            )
        if "gamma_file" in raw:
            gpath = path.parent / raw["gamma_file"].strip()
            kw["gamma"] = tuple(float(x) for x in gpath.read_text(encoding="utf-8").split())
            kw.setdefault("p", len(kw["gamma"]))
        if "params_file" in raw:
            params = read_population_params(path.parent / raw["params_file"].strip())
            kw["params"] = params
            kw.setdefault("p", params.p)
            kw.setdefault("s", int(np.count_nonzero(params.gamma)))
            kw.setdefault("beta0", params.beta0)
            kw.setdefault("dgp", "summary_level")
    except (ValueError, OSError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{path}: {exc}") from exc

    if "case" in raw:
        return case_config(raw["case"].strip(), **kw)
    return SimulationConfig(**kw)


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def default_specs(config: SimulationConfig) -> list[MethodSpec]:
    """Estimators reported for a study: every threshold rule for dIVW, plus
    IVW without pleiotropy or the unadjusted dIVW with it."""
    rules = ["none", "genome_wide", "sqrt_2_log_p"]
    if config.pleiotropy.kind == "none":
        specs = [MethodSpec("IVW", r) for r in rules]
        specs += [MethodSpec("dIVW", r) for r in rules + ["mr_eo"]]
    else:
        specs = [MethodSpec("dIVW", "none")]
        specs += [MethodSpec("dIVW", r, pleiotropy=True) for r in rules + ["mr_eo"]]
    return specs
