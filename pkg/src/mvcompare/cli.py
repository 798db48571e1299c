"""Command-line front end: ``mvcompare {compare,extract,simulate}``.

Exit codes: 0 the command ran (whatever the test decisions), 1 data or
math error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import io
import json
import sys
from itertools import combinations

from . import __version__
from .errors import MvCompareError, SingularCovariance, SpecError
from .ingest import parse_table
from .metrics import MEASURES, RAW_COUNTS, MeasureSet, samples_for
from .mvtests import anova, hotelling_paired, manova_wilks, mardia_test, paired_t
from .posthoc import (
    extract_measures,
    find_cliques,
    holm_adjust,
    ordering,
    pairwise_grid,
    posthoc_dimensions,
)
from .report import (
    ComparisonReport,
    cliques_list,
    grid_dict,
    learned_dict,
    ordering_dict,
    render_report,
)
from .simlab import PopulationSpec, crosstab_decisions, run_calibration, run_crosstab, run_power, table_decisions

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2

SIM_SPEC_HELP = """\
Spec file (JSON):
  {"folds": 10, "positives": 1000, "negatives": 1000, "mode": "rate",
   "algorithms": [{"name": "qda", "tpr": 0.92, "fpr": 0.12, "sd": [0.01, 0.01], "corr": 0.0},
                  {"name": "svm2", "tpr": 0.96, "fpr": 0.16, "sd": 0.01}]}
mode is "rate" (rounded normal rates) or "count" (binomial counts).
calibration needs identical populations, power exactly two algorithms.
"""


class UsageError(Exception):
    pass


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_input(path: str):
    with open(path, "rb") as fh:
        data = fh.read()
    fmt = "json" if path.lower().endswith(".json") else "csv"
    return parse_table(data, fmt), data


def _measures(text: str) -> MeasureSet:
    try:
        return MeasureSet(text)
    except MvCompareError as exc:
        raise UsageError(str(exc)) from None


def _stamp(args, md: dict):
    if getattr(args, "stamp", False):
        md["stamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _default_univariate(measures) -> str:
    return "fmeasure" if set(measures) == {"precision", "recall"} else "error"


def _normality(table, measures, alpha, warnings) -> list:
    results = []
    for rep in range(1, table.replications + 1):
        for sample in samples_for(table, measures, rep):
            entry = {"algorithm": sample.algorithm, "rep": rep}
            try:
                skew, kurt = mardia_test(sample, alpha)
            except MvCompareError as exc:
                entry["skipped"] = str(exc)
                warnings.append(f"normality check skipped for {sample.algorithm} rep {rep}: {exc}")
            else:
                entry["skewness"] = skew.to_dict()
                entry["kurtosis"] = kurt.to_dict()
                entry["rejected"] = skew.reject or kurt.reject
                if entry["rejected"]:
                    warnings.append(
                        f"multivariate normality rejected for {sample.algorithm} rep {rep}; "
                        "parametric results may be unreliable"
                    )
            results.append(entry)
    return results


def _dimension_anovas(samples, measures, alpha) -> list:
    raw = [anova([s.vectors[:, i] for s in samples], alpha) for i in range(len(measures))]
    adjusted = holm_adjust([o.p_value for o in raw])
    out = []
    for m, o, adj in zip(measures, raw, adjusted):
        d = o.to_dict()
        d["extra"] = {**d["extra"], "raw_p": o.p_value, "measure": m}
        d["p_value"], d["reject"] = adj, adj <= alpha
        out.append(d)
    return out


def _run_replication(table, rep, measures, alpha, multivariate, posthoc) -> dict:
    samples = samples_for(table, measures, rep)
    names = table.algorithms
    n_alg = len(names)
    run = {"rep": rep}
    if n_alg == 2:
        if multivariate:
            outcome, summary = hotelling_paired(samples[0], samples[1], alpha)
            run["direction"] = [float(v) for v in summary.direction]
        else:
            outcome = paired_t(samples[0], samples[1], alpha)
    else:
        outcome = manova_wilks(samples, alpha)[0] if multivariate else anova(samples, alpha)
    run["omnibus"] = outcome.to_dict()
    go = posthoc == "always" or (posthoc == "auto" and outcome.reject)
    if not go:
        return run
    if n_alg == 2:
        if multivariate:
            run["dimensions"] = [o.to_dict() for o in posthoc_dimensions(samples[0], samples[1], alpha, measures)]
        return run
    grid = pairwise_grid(samples, alpha, "multivariate" if multivariate else "univariate")
    run["pairwise"] = grid_dict(grid)
    run["cliques"] = cliques_list(find_cliques(grid))
    orderings = []
    for i, m in enumerate(measures):
        cols = [s.vectors[:, i] for s in samples]
        ugrid = grid if not multivariate else pairwise_grid(cols, alpha, "univariate", names)
        orderings.append(ordering_dict(ordering(cols, ugrid, True, names, m)))
    run["orderings"] = orderings
    if multivariate:
        run["dimensions"] = _dimension_anovas(samples, measures, alpha)
    return run


def cmd_compare(args) -> tuple[ComparisonReport, int]:
    table, data = _read_input(args.input)
    measures = _measures(args.measures)
    alpha = args.alpha
    if args.mode == "univariate" and measures.p > 1:
        raise UsageError("--mode univariate needs a single measure")
    multivariate = measures.p >= 2 and args.mode != "univariate"
    warnings: list[str] = []
    md = {
        "input": args.input,
        "input_digest": _digest(data),
        "alpha": alpha,
        "measures": list(measures),
        "mode": "multivariate" if multivariate else "univariate",
        "posthoc": args.posthoc,
        "k": table.folds,
        "L": len(table.algorithms),
        "R": table.replications,
        "algorithms": list(table.algorithms),
        "version": __version__,
    }
    _stamp(args, md)
    report = ComparisonReport("compare", md, warnings=warnings)
    if not args.skip_normality:
        report.normality = _normality(table, measures, alpha, warnings)
    report.runs = [
        _run_replication(table, r, measures, alpha, multivariate, args.posthoc)
        for r in range(1, table.replications + 1)
    ]
    if table.replications > 1 and multivariate and len(table.algorithms) >= 2:
        uni = args.univariate_measure or _default_univariate(measures)
        md["univariate_measure"] = uni
        report.crosstabs = {}
        for correct in (False, True):
            decisions = []
            for r in range(1, table.replications + 1):
                decisions.extend(table_decisions(table, r, [uni], list(measures), alpha, correct))
            if decisions:
                key = f"{uni}_vs_{'_'.join(measures)}_{'holm' if correct else 'uncorrected'}"
                report.crosstabs[key] = crosstab_decisions(decisions).to_dict()
    if args.emit_plot_data:
        _write_plot_data(args.emit_plot_data, table, measures)
    return report, EXIT_OK


def _write_plot_data(path, table, measures):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "rep", "fold", *measures])
    for rep in range(1, table.replications + 1):
        for s in samples_for(table, measures, rep):
            for j, row in enumerate(s.vectors, start=1):
                w.writerow([s.algorithm, rep, j, *(repr(float(v)) for v in row)])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def cmd_extract(args) -> tuple[ComparisonReport, int]:
    table, data = _read_input(args.input)
    if args.measures and args.raw_counts:
        raise UsageError("--raw-counts and --measures are mutually exclusive")
    measures = _measures(args.measures) if args.measures else MeasureSet(RAW_COUNTS)
    if not 1 <= args.rep <= table.replications:
        raise UsageError(f"--rep must be in 1..{table.replications}")
    if args.components is not None and args.components < 1:
        raise UsageError("--components must be >= 1")
    warnings: list[str] = []
    n_alg = len(table.algorithms)
    available = min(measures.p, n_alg - 1)
    md = {
        "input": args.input,
        "input_digest": _digest(data),
        "alpha": args.alpha,
        "measures": list(measures),
        "k": table.folds,
        "L": n_alg,
        "R": table.replications,
        "rep": args.rep,
        "algorithms": list(table.algorithms),
        "requested_components": args.components,
        "version": __version__,
    }
    _stamp(args, md)
    if args.components is not None and args.components > available:
        warnings.append(
            f"requested {args.components} components but at most {available} exist "
            f"(min(p, L-1) with p={measures.p}, L={n_alg}); using {available}"
        )
    samples = samples_for(table, measures, args.rep)
    lm = extract_measures(samples, args.components, table.algorithms, list(measures))
    limit = available if args.components is None else min(available, args.components)
    if lm.n_components < limit:
        warnings.append(
            f"only {lm.n_components} component(s) have a nonzero eigenvalue (limit {limit})"
        )
    report = ComparisonReport("extract", md, learned=learned_dict(lm), warnings=warnings)
    if args.follow_up and lm.n_components:
        report.follow_up = _follow_up(lm, table.algorithms, args.alpha)
    return report, EXIT_OK


def _follow_up(lm, names, alpha) -> dict:
    proj = [lm.projections[n] for n in names]
    multivariate = lm.n_components >= 2
    if len(names) == 2:
        outcome = (hotelling_paired(proj[0], proj[1], alpha)[0] if multivariate
                   else paired_t(proj[0][:, 0], proj[1][:, 0], alpha))
        return {"omnibus": outcome.to_dict()}
    outcome = manova_wilks(proj, alpha)[0] if multivariate else anova([p[:, 0] for p in proj], alpha)
    out = {"omnibus": outcome.to_dict()}
    grid = pairwise_grid(proj, alpha, "multivariate" if multivariate else "univariate", names)
    out["pairwise"] = grid_dict(grid)
    out["cliques"] = cliques_list(find_cliques(grid))
    return out


def cmd_simulate(args) -> tuple[ComparisonReport, int]:
    if args.reps < 1:
        raise UsageError("--reps must be a positive integer")
    if not 0 <= args.seed < 2 ** 64:
        raise UsageError("--seed must be in [0, 2**64)")
    with open(args.spec, "rb") as fh:
        data = fh.read()
    try:
        spec = PopulationSpec.from_dict(json.loads(data.decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise SpecError(f"spec file is not valid JSON: {exc}") from None
    runner = {"calibration": run_calibration, "power": run_power, "crosstab": run_crosstab}[args.study]
    result = runner(spec, args.reps, args.alpha, args.seed)
    md = {
        "spec": args.spec,
        "spec_digest": _digest(data),
        "study": args.study,
        "reps": args.reps,
        "seed": args.seed,
        "alpha": args.alpha,
        "algorithms": list(spec.names),
        "version": __version__,
    }
    _stamp(args, md)
    warnings = []
    if args.reps < 100:
        warnings.append(f"only {args.reps} replications; rates are imprecise (>= 100 recommended)")
    if result.generation.get("clamped"):
        warnings.append(f"{result.generation['clamped']} rate draws were clamped into (0, 1)")
    for t, n in result.errors.items():
        if n:
            warnings.append(f"{t}: {n} replication(s) failed and were excluded")
    return ComparisonReport("simulate", md, simulation=result.to_dict(), warnings=warnings), EXIT_OK


def _alpha(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError("alpha must be in (0, 1]")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mvcompare",
        description="Multivariate statistical comparison of classification algorithms.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--alpha", type=_alpha, default=0.05, help="significance level (default 0.05)")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--output", help="write the report here instead of stdout")
        p.add_argument("--stamp", action="store_true", help="add a UTC timestamp to the report")

    cp = sub.add_parser("compare", help="test whether algorithms differ",
                        description="Hotelling T^2 (2 algorithms) or MANOVA (3+) with post hoc analysis.")
    cp.add_argument("--input", required=True, help="CSV or JSON results file")
    cp.add_argument("--measures", default="tpr,fpr",
                    help=f"comma-separated measures from: {', '.join(MEASURES)} (default tpr,fpr)")
    cp.add_argument("--mode", choices=("auto", "univariate", "multivariate"), default="auto")
    cp.add_argument("--skip-normality", action="store_true", help="skip the Mardia normality screen")
    cp.add_argument("--posthoc", choices=("auto", "always", "never"), default="auto")
    cp.add_argument("--univariate-measure", choices=MEASURES,
                    help="univariate measure for the replication cross-tab")
    cp.add_argument("--emit-plot-data", metavar="PATH",
                    help="also write per-fold measure values as CSV")
    common(cp)

    ep = sub.add_parser("extract", help="learn discriminating measures from counts",
                        description="Eigenvectors of E^-1 H as learned performance measures.")
    ep.add_argument("--input", required=True)
    ep.add_argument("--raw-counts", action="store_true",
                    help="use (tp, fp, tn, fn) counts (the default)")
    ep.add_argument("--measures", help="use these measures instead of raw counts")
    ep.add_argument("--components", type=int, help="maximum number of directions")
    ep.add_argument("--rep", type=int, default=1, help="replication to analyse (default 1)")
    ep.add_argument("--follow-up", action="store_true",
                    help="test the algorithms again in the projected space")
    common(ep)

    sp = sub.add_parser("simulate", help="Monte Carlo calibration and power studies",
                        description="Monte Carlo studies on synthetic cross-validation results.",
                        epilog=SIM_SPEC_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sp.add_argument("--spec", required=True, help="population spec JSON file")
    sp.add_argument("--reps", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--study", choices=("calibration", "power", "crosstab"), default="calibration")
    common(sp)
    return parser


COMMANDS = {"compare": cmd_compare, "extract": cmd_extract, "simulate": cmd_simulate}


def _hint(exc: Exception) -> str:
    if isinstance(exc, SingularCovariance):
        return "hint: k-1 must be >= p, and the measures must not be collinear or constant"
    return ""


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout if stdout is not None else sys.stdout.buffer
    stderr = stderr if stderr is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report, code = COMMANDS[args.command](args)
        payload = render_report(report, args.format)
    except UsageError as exc:
        print(f"mvcompare {args.command}: usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except (MvCompareError, OSError) as exc:
        print(f"mvcompare {args.command}: error: {exc}", file=stderr)
        hint = _hint(exc)
        if hint:
            print(hint, file=stderr)
        return EXIT_ERROR
    try:
        if args.output:
            with open(args.output, "wb") as fh:
                fh.write(payload)
        else:
            stdout.write(payload)
            stdout.flush()
    except OSError as exc:
        print(f"mvcompare: cannot write output: {exc}", file=stderr)
        return EXIT_ERROR
    return code


if __name__ == "__main__":
    sys.exit(main())
