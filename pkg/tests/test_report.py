import csv
import io
import json

from ambisense.models import TraitObservation
from ambisense.report import AnalysisSettings, build_report, render_table2, write_report

from conftest import T0


def observations():
    out = []
    amb = [0.6, 0.4, 0.7, 0.1]
    loss = [0.9, 0.8, 0.95, 0.3]
    tactics = ["Discovery", "Discovery", "CredentialAccess", "Reconnaissance"]
    for i in range(4):
        pid = f"p{i % 2}"
        out.append(TraitObservation(pid, T0, "T1046", tactics[i], "ambiguity", amb[i], True, 0.0, i))
        out.append(TraitObservation(pid, T0, "T1046", tactics[i], "loss", loss[i], True, 0.0, i))
    return out


def test_table2_layout():
    report = build_report(observations(), config={"analysis": AnalysisSettings().to_dict()})
    text = render_table2(report)
    lines = text.splitlines()
    assert lines[0] == "Trait Probability by Model"
    assert lines[1].split("  ")[0] == "Model" and "Mean (SD)" in lines[1] and "Median" in lines[1]
    assert lines[1].rstrip().endswith("% > 0.5")
    assert lines[2].startswith("Ambiguity Aversion  0.450 (0.265)  0.500")
    assert lines[2].endswith("50.0%")
    assert lines[3].startswith("Loss Aversion") and lines[3].endswith("75.0%")
    assert any(ln.startswith("Wilcoxon signed-rank (two-sided, exact): W = 0, p = 0.125, n = 4") for ln in lines)
    assert any(ln.startswith("High-confidence share: 2/4 (50.00%) vs 3/4 (75.00%); chi2(1) =") for ln in lines)


def test_report_files(tmp_path):
    report = build_report(observations(), AnalysisSettings(n_bins=10))
    names = sorted(p.name for p in write_report(report, tmp_path))
    assert names == ["config.json", "histogram.csv", "per_tactic_means.csv", "report.json", "table2.csv", "table2.txt"]
    hist = list(csv.reader(io.StringIO((tmp_path / "histogram.csv").read_text())))
    assert hist[0] == ["bin_lo", "bin_hi", "ambiguity", "loss"] and len(hist) == 11
    tac = list(csv.reader(io.StringIO((tmp_path / "per_tactic_means.csv").read_text())))
    assert [r[0] for r in tac] == ["tactic", "Reconnaissance", "Discovery", "CredentialAccess"]
    assert float(tac[2][1]) == 0.5
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["descriptive"]["ambiguity"]["pct_above"] == 50.0
    assert data["chi2"]["df"] == 1


def test_single_model_skips_comparison():
    obs = [o for o in observations() if o.model == "ambiguity"]
    report = build_report(obs)
    assert report.wilcoxon is None and report.chi2 is None
    assert "comparison tests skipped" in render_table2(report)


def test_degenerate_comparisons_become_notes():
    obs = [o for o in observations() if o.model == "ambiguity"]
    twins = obs + [TraitObservation(o.participant_id, o.timestamp, o.technique_id, o.tactic, "loss",
                                    o.trait_probability, True, 0.0, o.seq) for o in obs]
    report = build_report(twins)
    assert report.wilcoxon is None and any("wilcoxon skipped" in n for n in report.notes)
