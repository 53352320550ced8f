"""Assemble the two-model comparison and render it as JSON, text and CSV."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import stats
from .models.ambiguity import TraitObservation

MODEL_LABELS = {"ambiguity": "Ambiguity Aversion", "loss": "Loss Aversion"}


@dataclass(frozen=True)
class AnalysisSettings:
    threshold: float = 0.5
    n_bins: int = 50
    alternative: str = "two-sided"
    zero_method: str = "wilcox"
    yates: bool = False

    @classmethod
    def from_dict(cls, d: dict[str, Any] | None) -> "AnalysisSettings":
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown analysis settings: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict[str, Any]:
        return dict(vars(self))


@dataclass
class AnalysisReport:
    models: list[str]
    n_participants: int
    summaries: dict[str, stats.Summary]
    per_tactic_means: dict[str, dict[str, float]]
    histograms: dict[str, stats.Histogram]
    wilcoxon: stats.WilcoxonResult | None = None
    chi2: stats.Chi2Result | None = None
    config: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        edges = next(iter(self.histograms.values())).edges if self.histograms else ()
        return {
            "models": self.models,
            "n_participants": self.n_participants,
            "descriptive": {m: s.to_dict() for m, s in self.summaries.items()},
            "wilcoxon": None if self.wilcoxon is None else self.wilcoxon.to_dict(),
            "chi2": None if self.chi2 is None else self.chi2.to_dict(),
            "per_tactic_means": self.per_tactic_means,
            "histogram": {"edges": list(edges), "density": {m: list(h.density) for m, h in self.histograms.items()}},
            "config": self.config,
            "notes": self.notes,
        }


def build_report(
    observations: Sequence[TraitObservation],
    settings: AnalysisSettings = AnalysisSettings(),
    config: dict[str, Any] | None = None,
) -> AnalysisReport:
    """Describe each model's trait probabilities and compare the two.

    The tests need both models: Wilcoxon pairs them action by action and
    the chi-square compares their counts above the threshold.
    """
    by_model: dict[str, list[float]] = {}
    for obs in observations:
        by_model.setdefault(obs.model, []).append(obs.trait_probability)
    if not by_model:
        raise ValueError("no observations to analyse")
    models = [m for m in MODEL_LABELS if m in by_model] + sorted(set(by_model) - set(MODEL_LABELS))
    summaries = {m: stats.describe(by_model[m], settings.threshold) for m in models}
    hists = {m: stats.histogram_density(by_model[m], settings.n_bins) for m in models}
    report = AnalysisReport(
        models=models,
        n_participants=len({o.participant_id for o in observations}),
        summaries=summaries,
        per_tactic_means=stats.per_tactic_means(observations),
        histograms=hists,
        config=dict(config or {}),
    )
    if len(models) >= 2:
        a, b = models[0], models[1]
        paired = stats.pair_observations(observations, (a, b))
        try:
            report.wilcoxon = stats.wilcoxon_signed_rank(paired, settings.alternative, settings.zero_method)
        except stats.DegenerateSampleError as exc:
            report.notes.append(f"wilcoxon skipped: {exc}")
        k = [sum(v > settings.threshold for v in by_model[m]) for m in (a, b)]
        try:
            report.chi2 = stats.chi2_proportions(k[0], len(by_model[a]), k[1], len(by_model[b]), settings.yates)
        except ValueError as exc:
            report.notes.append(f"chi-square skipped: {exc}")
    else:
        report.notes.append("only one model scored; comparison tests skipped")
    return report


# -- rendering ---------------------------------------------------------------------


def _fmt(x: float, digits: int = 3) -> str:
    return "NA" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.{digits}f}"


def table2_rows(report: AnalysisReport) -> list[list[str]]:
    header = ["Model", "Mean (SD)", "Median", "% > {:g}".format(report.config.get("analysis", {}).get("threshold", 0.5))]
    rows = [header]
    for m in report.models:
        s = report.summaries[m]
        rows.append([MODEL_LABELS.get(m, m), f"{_fmt(s.mean)} ({_fmt(s.sd)})", _fmt(s.median), f"{s.pct_above:.1f}%"])
    return rows


def render_table2(report: AnalysisReport) -> str:
    """Aligned plain-text table: model, mean (SD), median, share above threshold."""
    rows = table2_rows(report)
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["Trait Probability by Model"]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    if report.wilcoxon is not None:
        w = report.wilcoxon
        lines.append("")
        lines.append(f"Wilcoxon signed-rank ({w.alternative}, {w.method}): W = {w.W:g}, p {_p(w.p)}, n = {w.n_effective}")
    if report.chi2 is not None:
        c = report.chi2
        (k1, m1), (k2, m2) = c.counts
        lines.append(
            f"High-confidence share: {k1}/{k1 + m1} ({100 * k1 / (k1 + m1):.2f}%) vs "
            f"{k2}/{k2 + m2} ({100 * k2 / (k2 + m2):.2f}%); "
            f"chi2({c.df}) = {c.statistic:.2f}, p {_p(c.p)}" + (" [Yates]" if c.yates else "")
        )
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def _p(p: float) -> str:
    return "< .001" if p < 0.001 else f"= {p:.3f}"


def _csv(rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def table2_csv(report: AnalysisReport) -> str:
    rows = [["model", "mean", "sd", "median", "pct_above", "n"]]
    for m in report.models:
        s = report.summaries[m]
        rows.append([m, repr(s.mean), "" if math.isnan(s.sd) else repr(s.sd), repr(s.median), repr(s.pct_above), s.n])
    return _csv(rows)


def histogram_csv(report: AnalysisReport) -> str:
    edges = next(iter(report.histograms.values())).edges
    rows = [["bin_lo", "bin_hi", *report.models]]
    for i in range(len(edges) - 1):
        rows.append([repr(edges[i]), repr(edges[i + 1]), *(repr(report.histograms[m].density[i]) for m in report.models)])
    return _csv(rows)


def per_tactic_csv(report: AnalysisReport) -> str:
    rows = [["tactic", *report.models]]
    for tactic, means in report.per_tactic_means.items():
        rows.append([tactic, *(repr(means[m]) if m in means else "" for m in report.models)])
    return _csv(rows)


def write_report(report: AnalysisReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "report.json": json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n",
        "table2.txt": render_table2(report),
        "table2.csv": table2_csv(report),
        "histogram.csv": histogram_csv(report),
        "per_tactic_means.csv": per_tactic_csv(report),
        "config.json": json.dumps(report.config, indent=1, sort_keys=True) + "\n",
    }
    paths = []
    for name, text in files.items():
        p = out / name
        p.write_text(text, encoding="utf-8", newline="\n")
        paths.append(p)
    return paths
