"""Domain types for summary statistics, population parameters and reports.

Summary statistics are stored column-wise in numpy arrays; the per-SNP
:class:`SnpRecord` view exists for validation messages and for building
small datasets by hand.
"""

from __future__ import annotations

import csv
import json
import math
import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DataParseError

__all__ = [
    "DEFAULT_COLUMNS",
    "EstimateReport",
    "PopulationParams",
    "SnpRecord",
    "SummaryDataset",
    "Violation",
    "parse_number",
    "read_population_params",
    "read_summary_tsv",
    "validate",
    "write_population_params",
    "write_summary_tsv",
]

DEFAULT_COLUMNS = {
    "id": "SNP",
    "gamma_hat": "beta.exposure",
    "se_x": "se.exposure",
    "Gamma_hat": "beta.outcome",
    "se_y": "se.outcome",
    "gamma_star": "beta.selection",
    "se_x_star": "se.selection",
}
_REQUIRED = ("id", "gamma_hat", "se_x", "Gamma_hat", "se_y")
_SELECTION = ("gamma_star", "se_x_star")

# decimal notation with optional exponent; no nan/inf/underscores
_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")


def parse_number(text: str) -> float:
    """Parse a locale-independent decimal number, rejecting NA/nan/inf."""
    s = text.strip()
    if not _NUMBER.match(s):
        raise ValueError(f"not a decimal number: {text!r}")
    return float(s)


@dataclass(frozen=True)
class SnpRecord:
    """Summary statistics of one SNP."""

    id: str
    gamma_hat: float
    se_x: float
    Gamma_hat: float
    se_y: float
    gamma_star: float | None = None
    se_x_star: float | None = None

    @property
    def has_selection(self) -> bool:
        return self.gamma_star is not None and self.se_x_star is not None


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class SummaryDataset:
    """Immutable column store of per-SNP summary statistics.

    Parameters
    ----------
    gamma_hat, se_x : array_like
        SNP-exposure associations and their standard errors.
    Gamma_hat, se_y : array_like
        SNP-outcome associations and their standard errors.
    gamma_star, se_x_star : array_like, optional
        Selection-dataset associations and standard errors. Missing entries
        are encoded as NaN.
    ids : sequence of str, optional
        SNP labels; defaults to ``snp1 .. snpP``.
    """

    __slots__ = ("ids", "gamma_hat", "se_x", "Gamma_hat", "se_y", "gamma_star", "se_x_star")

    def __init__(self, gamma_hat, se_x, Gamma_hat, se_y, gamma_star=None, se_x_star=None, ids=None):
        gamma_hat = np.atleast_1d(np.asarray(gamma_hat, dtype=float))
        p = gamma_hat.shape[0]
        if gamma_hat.ndim != 1 or p < 1:
            raise ConfigurationError("a summary dataset needs at least one SNP")
        cols = {"se_x": se_x, "Gamma_hat": Gamma_hat, "se_y": se_y}
        arrays = {}
        for name, col in cols.items():
            a = np.atleast_1d(np.asarray(col, dtype=float))
            if a.shape != (p,):
                raise ConfigurationError(f"column {name} has length {a.size}, expected {p}")
            arrays[name] = a
        for name, col in (("gamma_star", gamma_star), ("se_x_star", se_x_star)):
            if col is None:
                a = np.full(p, np.nan)
            else:
                a = np.atleast_1d(np.asarray(col, dtype=float))
                if a.shape != (p,):
                    raise ConfigurationError(f"column {name} has length {a.size}, expected {p}")
            arrays[name] = a
        if ids is None:
            ids = [f"snp{j + 1}" for j in range(p)]
        ids = tuple(str(i) for i in ids)
        if len(ids) != p:
            raise ConfigurationError(f"{len(ids)} ids for {p} SNPs")
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "gamma_hat", _frozen(gamma_hat))
        for name, a in arrays.items():
            object.__setattr__(self, name, _frozen(a))

    def __setattr__(self, name, value):
        raise AttributeError("SummaryDataset is immutable")

    @classmethod
    def from_records(cls, records: Iterable[SnpRecord]) -> "SummaryDataset":
        records = list(records)
        if not records:
            raise ConfigurationError("a summary dataset needs at least one SNP")

        def opt(x):
            return np.nan if x is None else x

        return cls(
            gamma_hat=[r.gamma_hat for r in records],
            se_x=[r.se_x for r in records],
            Gamma_hat=[r.Gamma_hat for r in records],
            se_y=[r.se_y for r in records],
            gamma_star=[opt(r.gamma_star) for r in records],
            se_x_star=[opt(r.se_x_star) for r in records],
            ids=[r.id for r in records],
        )

    @property
    def p(self) -> int:
        return self.gamma_hat.shape[0]

    def __len__(self) -> int:
        return self.p

    @property
    def has_selection(self) -> bool:
        return bool(np.all(~np.isnan(self.gamma_star)) and np.all(~np.isnan(self.se_x_star)))

    @property
    def records(self) -> list[SnpRecord]:
        out = []
        for j in range(self.p):
            gs, ss = self.gamma_star[j], self.se_x_star[j]
            out.append(
                SnpRecord(
                    id=self.ids[j],
                    gamma_hat=float(self.gamma_hat[j]),
                    se_x=float(self.se_x[j]),
                    Gamma_hat=float(self.Gamma_hat[j]),
                    se_y=float(self.se_y[j]),
                    gamma_star=None if math.isnan(gs) else float(gs),
                    se_x_star=None if math.isnan(ss) else float(ss),
                )
            )
        return out

    def subset(self, indices) -> "SummaryDataset":
        """Dataset restricted to (and ordered by) ``indices``."""
        idx = np.asarray(indices, dtype=np.intp)
        return SummaryDataset(
            self.gamma_hat[idx],
            self.se_x[idx],
            self.Gamma_hat[idx],
            self.se_y[idx],
            self.gamma_star[idx],
            self.se_x_star[idx],
            ids=[self.ids[i] for i in idx],
        )

    def replace(self, **columns) -> "SummaryDataset":
        """Copy with some columns swapped out."""
        kw = {name: getattr(self, name) for name in self.__slots__}
        unknown = set(columns) - set(kw)
        if unknown:
            raise ConfigurationError(f"unknown columns: {sorted(unknown)}")
        kw.update(columns)
        return SummaryDataset(**kw)

    def __repr__(self) -> str:
        return f"SummaryDataset(p={self.p}, has_selection={self.has_selection})"


@dataclass(frozen=True)
class Violation:
    """One broken record invariant found by :func:`validate`."""

    index: int
    record_id: str
    field: str
    message: str

    def __str__(self) -> str:
        return f"SNP {self.record_id} (row {self.index + 1}), {self.field}: {self.message}"


def validate(dataset: SummaryDataset) -> list[Violation]:
    """Check the per-record invariants; an empty list means the data is usable."""
    out = []
    for j, rid in enumerate(dataset.ids):
        for name in ("gamma_hat", "Gamma_hat"):
            if not np.isfinite(getattr(dataset, name)[j]):
                out.append(Violation(j, rid, name, f"{name} is not finite"))
        for name in ("se_x", "se_y"):
            v = getattr(dataset, name)[j]
            if not (np.isfinite(v) and v > 0):
                out.append(Violation(j, rid, name, f"{name} must be positive, got {v!r}"))
        gs, ss = dataset.gamma_star[j], dataset.se_x_star[j]
        if np.isnan(gs) != np.isnan(ss):
            present = "gamma_star" if np.isnan(ss) else "se_x_star"
            missing = "se_x_star" if present == "gamma_star" else "gamma_star"
            out.append(Violation(j, rid, missing, f"{present} present but {missing} absent"))
        elif not np.isnan(ss):
            if not np.isfinite(gs):
                out.append(Violation(j, rid, "gamma_star", "gamma_star is not finite"))
            if not (np.isfinite(ss) and ss > 0):
                out.append(Violation(j, rid, "se_x_star", f"se_x_star must be positive, got {ss!r}"))
    return out


def read_summary_tsv(path, column_map: Mapping[str, str] | None = None) -> SummaryDataset:
    """Read a tab-separated summary-statistics file.

    ``column_map`` maps the field names of :class:`SnpRecord` to header
    names and overrides :data:`DEFAULT_COLUMNS` key by key. Selection columns
    are optional; an empty selection cell is read as absent.
    """
    cols = dict(DEFAULT_COLUMNS)
    if column_map:
        unknown = set(column_map) - set(cols)
        if unknown:
            raise ConfigurationError(f"unknown column_map keys: {sorted(unknown)}")
        cols.update(column_map)

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            raise DataParseError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        pos = {}
        for key in _REQUIRED:
            if cols[key] not in header:
                raise ConfigurationError(f"{path}: missing column {cols[key]!r} (for {key})")
            pos[key] = header.index(cols[key])
        sel_present = [cols[k] in header for k in _SELECTION]
        if any(sel_present) and not all(sel_present):
            missing = [cols[k] for k, ok in zip(_SELECTION, sel_present) if not ok]
            raise ConfigurationError(f"{path}: selection columns must come in pairs, missing {missing}")
        if all(sel_present):
            for key in _SELECTION:
                pos[key] = header.index(cols[key])

        data = {key: [] for key in pos}
        for row_no, row in enumerate(reader, start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(header):
                raise DataParseError(
                    f"{path}: row {row_no} has {len(row)} fields, expected {len(header)}", row=row_no
                )
            data["id"].append(row[pos["id"]].strip())
            for key, i in pos.items():
                if key == "id":
                    continue
                cell = row[i]
                if key in _SELECTION and not cell.strip():
                    data[key].append(np.nan)
                    continue
                try:
                    data[key].append(parse_number(cell))
                except ValueError:
                    raise DataParseError(
                        f"{path}: row {row_no}, column {cols[key]!r}: cannot parse {cell!r}",
                        row=row_no,
                        column=cols[key],
                    ) from None
    if not data["id"]:
        raise DataParseError(f"{path}: no data rows")

    dupes = [k for k, c in Counter(data["id"]).items() if c > 1]
    if dupes:
        warnings.warn(f"{len(dupes)} duplicate SNP ids (e.g. {dupes[0]!r}); keeping all rows", stacklevel=2)

    return SummaryDataset(
        gamma_hat=data["gamma_hat"],
        se_x=data["se_x"],
        Gamma_hat=data["Gamma_hat"],
        se_y=data["se_y"],
        gamma_star=data.get("gamma_star"),
        se_x_star=data.get("se_x_star"),
        ids=data["id"],
    )


def write_summary_tsv(dataset: SummaryDataset, path, column_map: Mapping[str, str] | None = None) -> None:
    """Write ``dataset`` in the format read by :func:`read_summary_tsv`.

    Floats are written with ``repr`` so reading back is lossless.
    """
    cols = dict(DEFAULT_COLUMNS)
    if column_map:
        cols.update(column_map)
    keys = list(_REQUIRED)
    sel_any = not (np.all(np.isnan(dataset.gamma_star)) and np.all(np.isnan(dataset.se_x_star)))
    if sel_any:
        keys += list(_SELECTION)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow([cols[k] for k in keys])
        for j in range(dataset.p):
            row = [dataset.ids[j]]
            for k in keys[1:]:
                v = float(getattr(dataset, k)[j])
                row.append("" if math.isnan(v) else repr(v))
            w.writerow(row)


@dataclass(frozen=True)
class PopulationParams:
    """True per-SNP parameters used by the theory oracles and simulators.

    ``alpha`` holds fixed (directional) pleiotropic effects; balanced
    pleiotropy is described by ``tau0`` alone.
    """

    gamma: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_x_star: np.ndarray
    beta0: float
    tau0: float = 0.0
    alpha: np.ndarray | None = None

    def __post_init__(self):
        gamma = _frozen(np.atleast_1d(self.gamma))
        p = gamma.shape[0]
        object.__setattr__(self, "gamma", gamma)
        for name in ("sigma_x", "sigma_y", "sigma_x_star"):
            a = _frozen(np.broadcast_to(np.asarray(getattr(self, name), dtype=float), (p,)))
            if not np.all(a > 0):
                raise ConfigurationError(f"{name} must be positive")
            object.__setattr__(self, name, a)
        if self.alpha is not None:
            a = _frozen(np.broadcast_to(np.asarray(self.alpha, dtype=float), (p,)))
            object.__setattr__(self, "alpha", a)
        if not self.tau0 >= 0:
            raise ConfigurationError("tau0 must be nonnegative")
        object.__setattr__(self, "beta0", float(self.beta0))
        object.__setattr__(self, "tau0", float(self.tau0))

    @property
    def p(self) -> int:
        return self.gamma.shape[0]

    @property
    def w(self) -> np.ndarray:
        return self.gamma**2 / self.sigma_y**2

    @property
    def v(self) -> np.ndarray:
        return self.sigma_x**2 / self.sigma_y**2

    @classmethod
    def from_summary(cls, dataset: SummaryDataset, beta0: float, tau0: float = 0.0, gamma=None):
        """Treat a real dataset's estimates and SEs as population values.

        ``gamma`` overrides the exposure effects (e.g. to zero out all but the
        strongest SNPs); the selection SEs default to the exposure SEs when the
        dataset has no selection columns.
        """
        sx_star = dataset.se_x_star if dataset.has_selection else dataset.se_x
        return cls(
            gamma=dataset.gamma_hat if gamma is None else gamma,
            sigma_x=dataset.se_x,
            sigma_y=dataset.se_y,
            sigma_x_star=sx_star,
            beta0=beta0,
            tau0=tau0,
        )

    def to_dict(self) -> dict:
        d = {
            "beta0": self.beta0,
            "tau0": self.tau0,
            "gamma": self.gamma.tolist(),
            "sigma_x": self.sigma_x.tolist(),
            "sigma_y": self.sigma_y.tolist(),
            "sigma_x_star": self.sigma_x_star.tolist(),
        }
        if self.alpha is not None:
            d["alpha"] = self.alpha.tolist()
        return d


def read_population_params(path) -> PopulationParams:
    """Load :class:`PopulationParams` from a JSON file.

    Required keys: ``beta0``, ``gamma``, ``sigma_x``, ``sigma_y``; optional
    ``sigma_x_star`` (defaults to ``sigma_x``), ``tau0`` and ``alpha``.
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataParseError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise DataParseError(f"{path}: expected a JSON object")
    for key in ("beta0", "gamma", "sigma_x", "sigma_y"):
        if key not in raw:
            raise DataParseError(f"{path}: missing key {key!r}", column=key)
    try:
        vecs = {}
        for key in ("gamma", "sigma_x", "sigma_y", "sigma_x_star", "alpha"):
            if key in raw:
                vecs[key] = np.asarray(raw[key], dtype=float)
                if not np.all(np.isfinite(vecs[key])):
                    raise DataParseError(f"{path}: non-finite entries in {key!r}", column=key)
        p = vecs["gamma"].size
        for key, vec in vecs.items():
            if vec.ndim > 1 or (vec.ndim == 1 and vec.size != p):
                raise DataParseError(f"{path}: {key!r} has length {vec.size}, expected {p}", column=key)
        return PopulationParams(
            gamma=vecs["gamma"],
            sigma_x=vecs["sigma_x"],
            sigma_y=vecs["sigma_y"],
            sigma_x_star=vecs.get("sigma_x_star", vecs["sigma_x"]),
            beta0=float(raw["beta0"]),
            tau0=float(raw.get("tau0", 0.0)),
            alpha=vecs.get("alpha"),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DataParseError):
            raise
        raise DataParseError(f"{path}: {exc}") from exc


def write_population_params(params: PopulationParams, path) -> None:
    Path(path).write_text(json.dumps(params.to_dict(), indent=1), encoding="utf-8")


@dataclass
class EstimateReport:
    """Result of one estimator run; see :func:`divw.estimators.analyze`."""

    method: str
    pleiotropy_adjusted: bool
    lambda_: float
    beta_hat: float
    se: float
    p_selected: int
    p_total: int
    kappa_hat: float
    effective_sample_size: float
    lambda_policy: str = "none"
    tau2_hat: float | None = None
    warnings: list[str] = field(default_factory=list)
    mr_eo_trace: object | None = None

    @property
    def ci_low(self) -> float:
        return self.beta_hat - 1.96 * self.se

    @property
    def ci_high(self) -> float:
        return self.beta_hat + 1.96 * self.se

    @property
    def label(self) -> str:
        return self.method + ("_alpha" if self.pleiotropy_adjusted else "")

    def covers(self, value: float) -> bool:
        return self.ci_low <= value <= self.ci_high

    def to_dict(self) -> dict:
        d = {
            "method": self.method,
            "pleiotropy_adjusted": self.pleiotropy_adjusted,
            "lambda_policy": self.lambda_policy,
            "lambda": self.lambda_,
            "beta_hat": self.beta_hat,
            "se": self.se,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "p_selected": self.p_selected,
            "p_total": self.p_total,
            "kappa_hat": self.kappa_hat,
            "effective_sample_size": self.effective_sample_size,
            "tau2_hat": self.tau2_hat,
            "warnings": list(self.warnings),
        }
        if self.mr_eo_trace is not None:
            d["mr_eo"] = self.mr_eo_trace.to_dict()
        return d


def as_records(rows: Sequence[Sequence]) -> list[SnpRecord]:
    """Build records from ``(id, gamma_hat, se_x, Gamma_hat, se_y[, gamma_star, se_x_star])`` tuples."""
    return [SnpRecord(*r) for r in rows]
