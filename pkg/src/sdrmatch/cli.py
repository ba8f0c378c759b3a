"""Command-line surface: estimate, simulate, diagnose.

All flags are long-form. Error paths exit nonzero with a single-line message
prefixed ``error:``; schema/parse/config problems exit 2, estimation failures
exit 3. Output files are byte-identical for identical flags and inputs; the
thread count never changes output bytes.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__, matching, sdr, simulation
from .dataset import load_csv
from .errors import (
    ConfigError,
    InvalidArgument,
    ParseError,
    SchemaError,
    SdrMatchError,
)
from .propensity import fit_logistic, predict_ps

USAGE_EXIT = 2
ESTIMATION_EXIT = 3

_ESTIMATE_METHODS = ("sdr", "ambient", "ps-logistic")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _add_data_flags(parser):
    parser.add_argument("--input", required=True, help="input CSV path")
    parser.add_argument("--treatment", required=True, help="0/1 treatment column")
    parser.add_argument("--outcome", required=True, help="observed outcome column")
    parser.add_argument("--covariates", required=True,
                        help="comma-separated covariate column names")


def _add_tuning_flags(parser):
    parser.add_argument("--m", type=int, default=1, help="matches per subject")
    parser.add_argument("--slices", type=int, default=5, help="outcome slices for SIR")
    parser.add_argument("--alpha", type=float, default=0.05,
                        help="rank-test significance level")


def build_parser() -> _Parser:
    parser = _Parser(prog="sdrmatch")
    parser.add_argument("--version", action="version", version=f"sdrmatch {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate a causal effect from CSV data")
    _add_data_flags(est)
    est.add_argument("--estimand", choices=("ace", "acet"), default="ace")
    est.add_argument("--method", choices=_ESTIMATE_METHODS, default="sdr")
    _add_tuning_flags(est)
    est.add_argument("--output", help="write per-subject imputations CSV here")

    sim = sub.add_parser("simulate", help="run a Monte Carlo comparison")
    sim.add_argument("--scenario", required=True,
                     help="scenario id, e.g. case1-II, case2-II*, case3-A")
    sim.add_argument("--n", type=int, default=500, help="sample size per replicate")
    sim.add_argument("--p", type=int, default=10, help="covariate dimension")
    sim.add_argument("--reps", type=int, required=True, help="replicates (>= 2)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--estimand", choices=("ace", "acet"), default="ace")
    sim.add_argument("--methods", default="ambient,ps-logistic,ps-true,sdr",
                     help="comma-separated method ids")
    sim.add_argument("--threads", type=int, default=None,
                     help="worker threads (default: SDRMATCH_THREADS or machine "
                          "parallelism); never affects output bytes")
    sim.add_argument("--coef-config", help="coefficient config (required for case3)")
    sim.add_argument("--output", help="report path (default: stdout)")
    sim.add_argument("--format", choices=("csv", "text"), default="csv")
    _add_tuning_flags(sim)

    diag = sub.add_parser("diagnose", help="overlap diagnostics for reduced covariates")
    _add_data_flags(diag)
    diag.add_argument("--bins", type=int, default=20, help="histogram bins")
    _add_tuning_flags(diag)
    diag.add_argument("--output", help="diagnostics CSV path (default: stdout)")

    return parser


# =============================================================================
# estimate
# =============================================================================

def _load_sample(args):
    covariates = [c.strip() for c in args.covariates.split(",") if c.strip()]
    if not covariates:
        raise SchemaError("no covariate columns given")
    return load_csv(args.input, args.treatment, args.outcome, covariates)


def cmd_estimate(args) -> int:
    sample = _load_sample(args)
    ranks = {"rank_control": None, "rank_treated": None}
    if args.method == "sdr":
        result = matching.sdr_matching_pipeline(
            sample, n_slices=args.slices, alpha=args.alpha,
            n_matches=args.m, estimand=args.estimand,
        )
        ranks["rank_control"] = result.diagnostics.get("rank_control")
        ranks["rank_treated"] = result.diagnostics.get("rank_treated")
    else:
        if args.method == "ambient":
            score = matching.BalancingScore.ambient(sample.covariates)
        else:
            model = fit_logistic(sample.covariates, sample.treatment)
            if not model.converged:
                print("warning: logistic propensity fit did not converge", file=sys.stderr)
            score = matching.BalancingScore.propensity(
                predict_ps(model, sample.covariates)
            )
        if args.estimand == "acet":
            result = matching.estimate_acet(sample, score, args.m)
        else:
            result = matching.estimate_ace(sample, score, args.m)

    lines = [
        f"estimand {args.estimand}",
        f"method {args.method}",
        f"value {_fmt(result.value)}",
        f"rank_control {ranks['rank_control'] if ranks['rank_control'] is not None else '-'}",
        f"rank_treated {ranks['rank_treated'] if ranks['rank_treated'] is not None else '-'}",
        f"n {sample.n_subjects}",
        f"treated {result.diagnostics['n_treated']}",
        f"control {result.diagnostics['n_control']}",
    ]
    for direction, qs in sorted(result.diagnostics["match_distance_quantiles"].items()):
        pretty = " ".join(_fmt(q) for q in qs)
        lines.append(f"match_distance_quantiles {direction} {pretty}")
    print("\n".join(lines))

    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(_header_line("estimate", args) + "\n")
            handle.write("subject,treatment,outcome,imputed\n")
            for i in range(sample.n_subjects):
                imp = result.imputed[i]
                handle.write(
                    f"{i},{int(sample.treatment[i])},{_fmt(float(sample.outcome[i]))},"
                    f"{_fmt(float(imp)) if np.isfinite(imp) else ''}\n"
                )
    return 0


# =============================================================================
# simulate
# =============================================================================

def _header_line(command: str, args) -> str:
    skip = {"command", "func", "threads", "output"}
    pairs = []
    for key in sorted(vars(args)):
        if key in skip:
            continue
        value = getattr(args, key)
        if value is None:
            continue
        pairs.append(f"{key.replace('_', '-')}={value}")
    return f"# sdrmatch {__version__} {command} " + " ".join(pairs)


_METHOD_LABELS = {
    "ambient": "Ambient (original covariates)",
    "ps-logistic": "Estimated PS (logistic)",
    "ps-true": "True PS",
    "sdr": "SDR (SIR-estimated)",
    "sdr-oracle": "SDR (oracle)",
    "active-set-oracle": "Active set (oracle)",
}


def _format_report_csv(report, header: str) -> str:
    lines = [header, "method,bias,sd,rmse,truth,reps,failures"]
    for method, res in report.methods.items():
        lines.append(
            f"{method},{_fmt(res.bias)},{_fmt(res.sd)},{_fmt(res.rmse)},"
            f"{_fmt(report.truth)},{report.reps},{res.failures}"
        )
    return "\n".join(lines) + "\n"


def _format_report_text(report, header: str) -> str:
    lines = [
        header,
        f"scenario {report.scenario} estimand {report.estimand} "
        f"truth {_fmt(report.truth)} ({report.truth_source}) reps {report.reps}",
        f"{'method':<32}{'bias':>12}{'sd':>12}{'rmse':>12}{'failures':>10}",
    ]
    for method, res in report.methods.items():
        label = _METHOD_LABELS.get(method, method)
        lines.append(
            f"{label:<32}{res.bias:>12.4f}{res.sd:>12.4f}{res.rmse:>12.4f}"
            f"{res.failures:>10d}"
        )
    return "\n".join(lines) + "\n"


def _resolve_threads(flag_value) -> int:
    if flag_value is not None:
        return max(1, flag_value)
    env = os.environ.get("SDRMATCH_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidArgument(
                f"SDRMATCH_THREADS must be an integer, got {env!r}"
            ) from None
    return os.cpu_count() or 1


def cmd_simulate(args) -> int:
    if args.reps < 2:
        raise InvalidArgument(f"--reps must be at least 2, got {args.reps}")
    threads = _resolve_threads(args.threads)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    coefficients = None
    if args.scenario.startswith("case3"):
        if not args.coef_config:
            raise ConfigError("case3 scenarios require --coef-config")
        coefficients = simulation.load_case3_config(args.coef_config)
    spec = simulation.scenario(
        args.scenario, n=args.n, p=args.p, methods=methods, coefficients=coefficients
    )
    report = simulation.run_monte_carlo(
        spec, args.reps, seed=args.seed, n_matches=args.m, n_slices=args.slices,
        alpha=args.alpha, threads=threads, estimand=args.estimand,
    )
    header = _header_line("simulate", args)
    text = (
        _format_report_csv(report, header)
        if args.format == "csv"
        else _format_report_text(report, header)
    )
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


# =============================================================================
# diagnose
# =============================================================================

def _five_number(values: np.ndarray):
    return np.quantile(values, [0.0, 0.25, 0.5, 0.75, 1.0])


def _histogram_rows(name: str, values: np.ndarray, treatment: np.ndarray,
                    bins: int) -> list[str]:
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    rows = []
    for group, label in ((1, "treated"), (0, "control")):
        subset = values[treatment == group]
        counts, _ = np.histogram(subset, bins=edges)
        qs = _five_number(subset)
        for k, stat in enumerate(("min", "q25", "median", "q75", "max")):
            rows.append(f"{name},{label},quantile,{k},,,{_fmt(float(qs[k]))}")
        for k in range(bins):
            rows.append(
                f"{name},{label},bin,{k},{_fmt(float(edges[k]))},"
                f"{_fmt(float(edges[k + 1]))},{int(counts[k])}"
            )
    return rows


def cmd_diagnose(args) -> int:
    if args.bins < 1:
        raise InvalidArgument(f"--bins must be >= 1, got {args.bins}")
    sample = _load_sample(args)
    estimate = sdr.estimate_central_subspace(
        sample, 0, n_slices=args.slices, alpha=args.alpha
    )
    reduced = sdr.reduce_covariates(estimate, sample.covariates)
    model = fit_logistic(sample.covariates, sample.treatment)
    scores = predict_ps(model, sample.covariates)

    rows = [_header_line("diagnose", args), "variable,group,kind,index,lower,upper,value"]
    for j in range(reduced.shape[1]):
        rows.extend(
            _histogram_rows(f"reduced_{j + 1}", reduced[:, j], sample.treatment, args.bins)
        )
    rows.extend(_histogram_rows("propensity", scores, sample.treatment, args.bins))
    text = "\n".join(rows) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    return 0


# =============================================================================
# entry point
# =============================================================================

def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        if args.command == "estimate":
            return cmd_estimate(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        return cmd_diagnose(args)
    except (SchemaError, ParseError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except InvalidArgument as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except SdrMatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ESTIMATION_EXIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
