"""Report container and text/JSON rendering."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from typing import Sequence

from .posthoc import CliqueReport, LearnedMeasures, OrderingReport, PairwiseGrid
from .mvtests import TestOutcome

UNDERLINE = "─"


@dataclass
class ComparisonReport:
    """JSON-ready result of one CLI command.

    Optional sections are ``None`` when the stage that fills them did not
    run, and are left out of the serialized form.
    """

    command: str
    metadata: dict
    normality: list | None = None
    runs: list | None = None
    crosstabs: dict | None = None
    learned: dict | None = None
    follow_up: dict | None = None
    simulation: dict | None = None
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> "ComparisonReport":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def load_schema() -> dict:
    text = resources.files("mvcompare").joinpath("schema/report.schema.json").read_text("utf-8")
    return json.loads(text)


# -- conversion of analysis objects to JSON-ready dicts ---------------------

def grid_dict(grid: PairwiseGrid) -> dict:
    return {
        "algorithms": list(grid.algorithms),
        "mode": grid.mode,
        "alpha": grid.alpha,
        "correction": "holm",
        "pairs": [
            {"a": a, "b": b, "p_value": p, "statistic": s, "reject": r}
            for a, b, p, s, r in grid.pairs()
        ],
    }


def cliques_list(report: CliqueReport) -> list:
    return [list(c) for c in report.cliques]


def ordering_dict(o: OrderingReport) -> dict:
    return {
        "measure": o.measure,
        "order": list(o.order),
        "means": list(o.means),
        "underline_groups": [list(g) for g in o.underline_groups],
    }


def measure_label(name: str) -> str:
    return name[:-4] if name.endswith("_raw") else name


def format_direction(label: str, coefs: Sequence[float], measures: Sequence[str]) -> str:
    """Render a linear combination as ``M1: -0.379·tp + 0.733·fp ...``."""
    parts = []
    for i, (c, m) in enumerate(zip(coefs, measures)):
        mag = f"{abs(c):.3f}·{measure_label(m)}"
        if i == 0:
            parts.append(f"-{mag}" if c < 0 else mag)
        else:
            parts.append(("- " if c < 0 else "+ ") + mag)
    return f"{label}: " + " ".join(parts)


def learned_dict(lm: LearnedMeasures) -> dict:
    return {
        "measures": list(lm.measures),
        "components": [
            {
                "label": f"M{i + 1}",
                "coefficients": [float(c) for c in d],
                "eigenvalue": lam,
                "variance_explained": ve,
                "formula": format_direction(f"M{i + 1}", d, lm.measures),
            }
            for i, (d, lam, ve) in enumerate(zip(lm.directions, lm.eigenvalues, lm.variance_explained))
        ],
        "projections": {
            name: [[float(v) for v in row] for row in mat]
            for name, mat in lm.projections.items()
        },
    }


# -- text rendering ----------------------------------------------------------

def render_underlines(order: Sequence[str], groups: Sequence[Sequence[int]]) -> list[str]:
    """Name line followed by underline lines; overlapping groups go on separate lines."""
    starts, pos = [], 0
    for name in order:
        starts.append(pos)
        pos += len(name) + 1
    lines = [" ".join(order)]
    width = len(lines[0])
    rows: list[list[str]] = []
    for a, b in groups:
        lo, hi = starts[a], starts[b] + len(order[b])
        for row in rows:
            # one blank column on each side keeps adjacent segments distinct
            if all(c == " " for c in row[max(0, lo - 1): hi + 1]):
                break
        else:
            row = [" "] * width
            rows.append(row)
        row[lo:hi] = UNDERLINE * (hi - lo)
    lines.extend("".join(r).rstrip() for r in rows)
    return lines


def _fmt_outcome(o: dict) -> str:
    dof = ", ".join(str(d) for d in o["dof"])
    verdict = "reject" if o["reject"] else "do not reject"
    return (f"{o['test']}: statistic={o['statistic']:.4f}"
            + (f" dof=({dof})" if dof else "")
            + f" p={o['p_value']:.4f} -> {verdict} (alpha={o['alpha']:g})")


def _render_compare(r: ComparisonReport, out: list):
    md = r.metadata
    out.append(f"algorithms: {', '.join(md['algorithms'])}")
    out.append(f"measures: {', '.join(md['measures'])} (mode {md['mode']})")
    out.append(f"k={md['k']} L={md['L']} R={md['R']} alpha={md['alpha']:g}")
    if r.normality is not None:
        out.append("")
        out.append("Normality screen (Mardia, alpha/2 per sub-test)")
        for n in r.normality:
            if "skipped" in n:
                out.append(f"  {n['algorithm']} rep {n['rep']}: skipped ({n['skipped']})")
                continue
            verdict = "rejected" if n["rejected"] else "not rejected"
            out.append(
                f"  {n['algorithm']} rep {n['rep']}: skewness p={n['skewness']['p_value']:.4f}"
                f" kurtosis p={n['kurtosis']['p_value']:.4f} -> {verdict}"
            )
    for run in r.runs or []:
        out.append("")
        out.append(f"Replication {run['rep']}")
        out.append("  Omnibus " + _fmt_outcome(run["omnibus"]))
        if "direction" in run:
            coefs = ", ".join(f"{c:.4f}" for c in run["direction"])
            out.append(f"  Max-difference direction w: ({coefs})")
        if "pairwise" in run:
            g = run["pairwise"]
            out.append(f"  Pairwise tests ({g['mode']}, Holm-corrected):")
            for pr in g["pairs"]:
                verdict = "reject" if pr["reject"] else "do not reject"
                out.append(f"    {pr['a']} vs {pr['b']}: p={pr['p_value']:.4f} -> {verdict}")
        if "cliques" in run:
            cl = " ".join("{" + ", ".join(c) + "}" for c in run["cliques"])
            out.append(f"  Cliques: {cl}")
        for o in run.get("orderings", []):
            out.append(f"  Ordering by mean {o['measure']} (underline: no significant difference):")
            out.extend("    " + line for line in render_underlines(o["order"], o["underline_groups"]))
        if "dimensions" in run:
            out.append("  Per-dimension tests (Holm across dimensions):")
            for o in run["dimensions"]:
                e = o["extra"]
                verdict = "reject" if o["reject"] else "do not reject"
                out.append(
                    f"    {e['measure']}: {o['test']} statistic={o['statistic']:.4f}"
                    f" p(raw)={e['raw_p']:.4f} p(Holm)={o['p_value']:.4f} -> {verdict}"
                )
    if r.crosstabs:
        out.append("")
        out.append("Decision cross-tabulation (percentages)")
        for key, ct in r.crosstabs.items():
            out.append("")
            out.append(_render_crosstab(key, ct))


def _render_crosstab(title: str, ct: dict) -> str:
    pct, rows_t, cols_t = ct["percentages"], ct["row_percentages"], ct["col_percentages"]
    lines = [f"{title} (n={ct['n']})",
             f"{'':16}{'Multivariate':>24}",
             f"{'Univariate':16}{'Do not reject':>14}{'Reject':>10}{'Total':>10}"]
    for i, label in enumerate(("Do not reject", "Reject")):
        lines.append(f"{label:16}{pct[i][0]:14.2f}{pct[i][1]:10.2f}{rows_t[i]:10.2f}")
    lines.append(f"{'Total':16}{cols_t[0]:14.2f}{cols_t[1]:10.2f}{100.0:10.2f}")
    return "\n".join(lines)


def _render_extract(r: ComparisonReport, out: list):
    md = r.metadata
    out.append(f"algorithms: {', '.join(md['algorithms'])}")
    out.append(f"measures: {', '.join(md['measures'])}  k={md['k']} rep={md['rep']}")
    lm = r.learned
    out.append("")
    out.append("Learned measures (eigenvectors of E^-1 H)")
    for c in lm["components"]:
        out.append(f"  {c['formula']}")
    for c in lm["components"]:
        out.append(f"  {c['label']}: eigenvalue={c['eigenvalue']:.4f}"
                   f" variance explained={c['variance_explained']:.4f}")
    if lm["components"]:
        out.append("")
        labels = [c["label"] for c in lm["components"]]
        out.append("  Projections")
        out.append("    " + "  ".join([f"{'algorithm':12}", f"{'fold':>4}"] + [f"{l:>12}" for l in labels]))
        for name, rows in lm["projections"].items():
            for j, row in enumerate(rows, start=1):
                vals = "  ".join(f"{v:12.4f}" for v in row)
                out.append(f"    {name:12}  {j:>4}  {vals}")
    if r.follow_up:
        out.append("")
        out.append("Follow-up tests on projections")
        out.append("  Omnibus " + _fmt_outcome(r.follow_up["omnibus"]))
        if "pairwise" in r.follow_up:
            for pr in r.follow_up["pairwise"]["pairs"]:
                verdict = "reject" if pr["reject"] else "do not reject"
                out.append(f"    {pr['a']} vs {pr['b']}: p={pr['p_value']:.4f} -> {verdict}")
        if "cliques" in r.follow_up:
            cl = " ".join("{" + ", ".join(c) + "}" for c in r.follow_up["cliques"])
            out.append(f"  Cliques: {cl}")


def _render_simulate(r: ComparisonReport, out: list):
    md = r.metadata
    sim = r.simulation
    out.append(f"study: {md['study']}  reps={md['reps']}  seed={md['seed']}  alpha={md['alpha']:g}")
    out.append(f"spec sha256: {md['spec_digest']}")
    gen = sim["generation"]
    out.append(f"generation: redraws={gen['redraws']} clamped={gen['clamped']}")
    if sim["tests"]:
        out.append("")
        out.append(f"  {'test':30}{'rate':>8}{'reject':>8}{'valid':>8}{'errors':>8}")
        for name, t in sim["tests"].items():
            rate = "n/a" if t["rate"] is None else f"{t['rate']:.4f}"
            out.append(f"  {name:30}{rate:>8}{t['rejections']:>8}{t['valid']:>8}{t['errors']:>8}")
    for key, ct in sim.get("crosstabs", {}).items():
        out.append("")
        out.append(_render_crosstab(key, ct))


def render_report(report: ComparisonReport, format: str = "text") -> bytes:
    if format == "json":
        return (json.dumps(report.to_dict(), indent=2, allow_nan=False) + "\n").encode("utf-8")
    if format != "text":
        raise ValueError(f"unknown format {format!r}")
    out = [f"mvcompare {report.command}"]
    md = report.metadata
    if "input" in md:
        out.append(f"input: {md['input']} (sha256 {md['input_digest'][:16]})")
    if "stamp" in md:
        out.append(f"generated: {md['stamp']}")
    {"compare": _render_compare, "extract": _render_extract,
     "simulate": _render_simulate}[report.command](report, out)
    if report.warnings:
        out.append("")
        out.append("Warnings")
        out.extend(f"  - {w}" for w in report.warnings)
    return ("\n".join(out) + "\n").encode("utf-8")


def outcome_dict(o: TestOutcome) -> dict:
    return o.to_dict()
