"""Command-line front end.

Subcommands: ``analyze``, ``diagnose``, ``simulate`` and ``oracle``.
Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 degenerate estimator.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import DEFAULT_COLUMNS, read_population_params, read_summary_tsv, validate
from .diagnostics import qq_data, strength_verdict
from .errors import ConfigurationError, DataParseError, DivwError, EstimatorError
from .estimators import LambdaPolicy, analyze, divw
from .oracles import (
    asymptotic_variance,
    ivw_abias,
    population_strength,
    theorem31_limit,
    unbalanced_bias,
)
from .selection import kappa_hat, screen
from .simulation import case_config, default_specs, population_params, read_config, run_monte_carlo

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_COLUMN_FLAGS = {
    "id": "--col-id",
    "gamma_hat": "--col-beta-exposure",
    "se_x": "--col-se-exposure",
    "Gamma_hat": "--col-beta-outcome",
    "se_y": "--col-se-outcome",
    "gamma_star": "--col-beta-selection",
    "se_x_star": "--col-se-selection",
}


def _lambda_arg(text):
    try:
        return LambdaPolicy.parse(text)
    except ConfigurationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_input(p):
    p.add_argument("input", help="tab-separated summary statistics")
    for key, flag in _COLUMN_FLAGS.items():
        p.add_argument(flag, dest=f"col_{key}", metavar="NAME", help=f"header of the {key} column (default {DEFAULT_COLUMNS[key]})")


def _add_common(p, formats=("json", "csv", "text"), default="text"):
    p.add_argument("--format", choices=formats, default=default)
    p.add_argument("-o", "--output", help="write here instead of stdout")
    p.add_argument("--seed", type=int, default=None, help="accepted by every command; only simulate draws random numbers")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="divw", description="Debiased IVW Mendelian randomization from summary statistics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="estimate the causal effect from a summary-statistics file")
    _add_input(a)
    a.add_argument("--lambda", dest="lambda_", type=_lambda_arg, default="none", metavar="{none|genomewide|sqrt2logp|mr-eo|<float>}")
    a.add_argument("--method", choices=("ivw", "divw", "both"), default="divw")
    a.add_argument("--pleiotropy", action="store_true", help="balanced-pleiotropy variance (dIVW only)")
    a.add_argument("--t-max", type=int, default=5, help="MR-EO iteration cap")
    _add_common(a)

    d = sub.add_parser("diagnose", help="Q-Q residuals and instrument-strength check")
    _add_input(d)
    d.add_argument("--lambda", dest="lambda_", type=_lambda_arg, default="none", metavar="{none|genomewide|sqrt2logp|mr-eo|<float>}")
    d.add_argument("--pleiotropy", action="store_true", help="include tau2_hat in the residual scale")
    _add_common(d)

    s = sub.add_parser("simulate", help="run a Monte Carlo study")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--case", help="4, 5, 6, 7, s1 or s2:<xi>")
    src.add_argument("--config", help="flat key = value configuration file")
    s.add_argument("--reps", type=int, default=None, help="replications (default 500 or the config value)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--true-sds", action="store_true", help="report the closed-form SDs as SEs")
    _add_common(s, default="csv")

    o = sub.add_parser("oracle", help="population quantities for known parameters")
    osrc = o.add_mutually_exclusive_group(required=True)
    osrc.add_argument("--params", help="JSON population-parameter file")
    osrc.add_argument("--case", help="use the population of a preset study")
    o.add_argument("--lambda", dest="lambda_", type=float, default=0.0)
    _add_common(o, formats=("json", "text"))
    return parser


# ---------------------------------------------------------------------------
# helpers


def _clean(x):
    """JSON-safe copy: non-finite floats become null, arrays become lists."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _document(command, settings, source=None) -> dict:
    doc = {"tool": "divw", "version": __version__, "command": command, "settings": settings}
    if source is not None:
        doc["input"] = source
    return doc


def _emit(text: str, args):
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(args):
    cmap = {k: getattr(args, f"col_{k}") for k in _COLUMN_FLAGS if getattr(args, f"col_{k}") is not None}
    ds = read_summary_tsv(args.input, cmap)
    problems = validate(ds)
    if problems:
        shown = "; ".join(str(v) for v in problems[:5])
        more = f" (+{len(problems) - 5} more)" if len(problems) > 5 else ""
        raise DataParseError(f"{args.input}: {shown}{more}")
    source = {"path": str(args.input), "sha256": _digest(args.input), "p": ds.p, "has_selection": ds.has_selection}
    return ds, source


def _strength(ds, lam):
    st = kappa_hat(ds, screen(ds, lam))
    ess = st.effective_sample_size
    return {
        "lambda": lam,
        "kappa_hat": st.kappa_hat,
        "p_hat": st.p_hat,
        "effective_sample_size": ess,
        "verdict": strength_verdict(ess),
    }


def _fmt(x, spec=".4f"):
    return "NA" if x is None or (isinstance(x, float) and not math.isfinite(x)) else format(x, spec)


# ---------------------------------------------------------------------------
# commands


def cmd_analyze(args) -> int:
    policy = args.lambda_
    methods = ["IVW", "dIVW"] if args.method == "both" else [{"ivw": "IVW", "divw": "dIVW"}[args.method]]
    if "IVW" in methods and policy.kind == "mr_eo":
        raise _UsageError("MR-EO selects lambda for dIVW only; use --method divw")
    if "IVW" in methods and args.pleiotropy and args.method == "ivw":
        raise _UsageError("--pleiotropy applies to dIVW only")
    ds, source = _load(args)
    reports = []
    for m in methods:
        reports.append(analyze(ds, policy, pleiotropy=args.pleiotropy and m == "dIVW", method=m, t_max=args.t_max))
    for r in reports:
        for w in r.warnings:
            print(f"warning: {r.label}: {w}", file=sys.stderr)

    if args.format == "json":
        doc = _document(
            "analyze",
            {"lambda": policy.label, "method": args.method, "pleiotropy": args.pleiotropy, "t_max": args.t_max},
            source,
        )
        doc["estimates"] = [r.to_dict() for r in reports]
        _emit(json.dumps(_clean(doc), indent=2) + "\n", args)
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["method", "lambda_policy", "lambda", "p_selected", "beta_hat", "se", "ci_low", "ci_high", "kappa_hat", "effective_sample_size"]
        w.writerow(cols)
        for r in reports:
            d = r.to_dict()
            w.writerow([r.label] + [d[c] if not isinstance(d[c], float) else repr(d[c]) for c in cols[1:]])
        _emit(buf.getvalue(), args)
    else:
        head = f"{'method':<10} {'lambda':>8} {'#IV':>6} {'estimate':>9} {'SE':>8} {'95% CI':>20} {'ESS':>8}"
        lines = [f"{source['path']}: p = {ds.p}", head, "-" * len(head)]
        for r in reports:
            ci = f"[{r.ci_low:.3f}, {r.ci_high:.3f}]"
            lines.append(
                f"{r.label:<10} {r.lambda_:8.3f} {r.p_selected:6d} {r.beta_hat:9.3f} {r.se:8.3f} {ci:>20} {r.effective_sample_size:8.1f}"
            )
        _emit("\n".join(lines) + "\n", args)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    policy = args.lambda_
    ds, source = _load(args)
    rep = analyze(ds, policy, pleiotropy=args.pleiotropy)
    qq = qq_data(ds, beta=rep.beta_hat, pleiotropy=args.pleiotropy)
    strength = _strength(ds, rep.lambda_)
    if strength["verdict"] == "WARN":
        print(f"warning: effective sample size {strength['effective_sample_size']:.3g} is below 20", file=sys.stderr)

    if args.format == "json":
        doc = _document("diagnose", {"lambda": policy.label, "pleiotropy": args.pleiotropy}, source)
        doc["estimates"] = [rep.to_dict()]
        doc["strength"] = strength
        doc["qq"] = {"beta": qq.beta, "tau2_hat": qq.tau2, "theoretical": qq.theoretical, "residuals": qq.residuals}
        _emit(json.dumps(_clean(doc), indent=2) + "\n", args)
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theoretical", "residual"])
        for t, r in qq.pairs():
            w.writerow([repr(t), repr(r)])
        _emit(buf.getvalue(), args)
    else:
        ess = strength["effective_sample_size"]
        lines = [
            f"{source['path']}: p = {ds.p}, lambda = {rep.lambda_:.3f}, {rep.p_selected} IVs",
            f"dIVW estimate used for residuals: {qq.beta:.4f}",
            f"kappa_hat = {strength['kappa_hat']:.4g}, effective sample size = {ess:.4g}: {strength['verdict']}",
            "",
            f"{'theoretical':>12} {'residual':>12}",
        ]
        lines += [f"{t:12.4f} {r:12.4f}" for t, r in qq.pairs()]
        _emit("\n".join(lines) + "\n", args)
    return EXIT_OK


def _simulation_config(args):
    if args.case is not None:
        case = args.case
        if case.lower().startswith("s2") and ":" not in case:
            raise _UsageError("use --case s2:<xi>, e.g. s2:0.25")
        cfg = case_config(case, replications=args.reps or 500, seed=1 if args.seed is None else args.seed)
    else:
        cfg = read_config(args.config)
        over = {}
        if args.reps is not None:
            over["replications"] = args.reps
        if args.seed is not None:
            over["seed"] = args.seed
        if over:
            from dataclasses import replace

            cfg = replace(cfg, **over)
    if args.true_sds:
        from dataclasses import replace

        cfg = replace(cfg, use_true_sds=True)
    if args.workers < 1:
        raise _UsageError("--workers must be at least 1")
    return cfg


def cmd_simulate(args) -> int:
    try:
        cfg = _simulation_config(args)
    except (ConfigurationError, DataParseError) as exc:
        raise _UsageError(str(exc)) from exc
    summary = run_monte_carlo(cfg, default_specs(cfg), workers=args.workers)
    if args.format == "csv":
        _emit(summary.to_csv(), args)
    elif args.format == "text":
        _emit(summary.to_text() + "\n", args)
    else:
        doc = _document(
            "simulate",
            {"config": cfg.name, "replications": cfg.replications, "seed": cfg.seed, "workers": args.workers},
        )
        doc["simulation"] = [
            {c: getattr(r, c) for c in summary.CSV_COLUMNS}
            for r in summary.rows
        ]
        _emit(json.dumps(_clean(doc), indent=2) + "\n", args)
    return EXIT_OK


def _oracle_params(args):
    if args.params is not None:
        return read_population_params(args.params), {"path": args.params, "sha256": _digest(args.params)}
    try:
        cfg = case_config(args.case, seed=1 if args.seed is None else args.seed)
    except ConfigurationError as exc:
        raise _UsageError(str(exc)) from exc
    return population_params(cfg), None


def cmd_oracle(args) -> int:
    if not args.lambda_ >= 0:
        raise _UsageError("--lambda must be nonnegative")
    params, source = _oracle_params(args)
    lam = args.lambda_
    st = population_strength(params, lam)
    out = {
        "lambda": lam,
        "beta0": params.beta0,
        "kappa": st.kappa,
        "kappa_lambda": st.kappa_lambda,
        "p_lambda": st.p_lambda,
        "V_ivw": asymptotic_variance(params, lam, "IVW"),
        "abias": ivw_abias(params),
        "theorem31_limit": theorem31_limit(params, lam),
    }
    try:
        out["V_divw"] = asymptotic_variance(params, lam, "dIVW")
    except EstimatorError:
        out["V_divw"] = None
    if params.alpha is not None and np.any(params.alpha != 0):
        bias = unbalanced_bias(params, params.alpha, lam)
        out["unbalanced_bias"] = bias
        out["beta0_plus_bias"] = params.beta0 + bias
    else:
        out["unbalanced_bias"] = 0.0
        out["beta0_plus_bias"] = params.beta0

    if args.format == "json":
        doc = _document("oracle", {"lambda": lam, "case": args.case}, source)
        doc["oracle"] = out
        _emit(json.dumps(_clean(doc), indent=2) + "\n", args)
    else:
        width = max(len(k) for k in out)
        lines = [f"{k:<{width}}  {_fmt(v, '.6g')}" for k, v in out.items()]
        _emit("\n".join(lines) + "\n", args)
    return EXIT_OK


_COMMANDS = {"analyze": cmd_analyze, "diagnose": cmd_diagnose, "simulate": cmd_simulate, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"divw {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        # a missing column or bad parameter file is a problem with the data
        code = EXIT_DATA if args.command in ("analyze", "diagnose", "oracle") else EXIT_USAGE
        print(f"divw {args.command}: error: {exc}", file=sys.stderr)
        return code
    except (DataParseError, OSError) as exc:
        print(f"divw {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EstimatorError as exc:
        print(f"divw {args.command}: degenerate estimator: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DivwError as exc:
        print(f"divw {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
