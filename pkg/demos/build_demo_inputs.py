"""Regenerate the demo cohort bundled with the package.

Twelve simulated red-teamers with mixed traits are written out as raw
operator notes and Suricata EVE lines, the same shape a real exercise
would produce. A handful of damaged lines are mixed in on purpose so the
reject channel has something to show.

    python demos/build_demo_inputs.py [target_dir]
"""

import shutil
import sys
from pathlib import Path

from ambisense.simulate import build_environment, generate_cohort, load_sim_config, write_env_catalog
from ambisense.traces import render_eve, render_opnotes

SEED = 7
SPEC = {
    "seed": SEED,
    "n_steps": 55,
    "groups": [
        {"n": 6, "theta": {"uniform": [0.6, 1.0]}, "lambda": {"uniform": [0.5, 2.0]}, "mu": 5.0},
        {"n": 6, "theta": {"uniform": [0.0, 0.4]}, "lambda": {"uniform": [0.5, 2.0]}, "mu": 5.0},
    ],
}

target = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[1] / "src/ambisense/data/demo"
if target.exists():
    shutil.rmtree(target)

env = build_environment(load_sim_config(), SEED)
cohort = generate_cohort(SPEC, env)

# participants are renamed so nothing downstream can lean on agent numbering
for i, (agent, records) in enumerate(cohort.actions.items()):
    pid = f"rt{i + 1:02d}"
    d = target / pid
    d.mkdir(parents=True)
    notes = render_opnotes(records, SEED + i)
    eve = render_eve(records, f"10.99.0.{i + 1}", SEED + i)
    if i == 0:
        # a note with an impossible date and a truncated EVE line
        notes = "2024-02-30 08:59:00 setting up the kali box\n\n" + notes
        eve += '{"timestamp": "2024-03-01T12:00:00.000+0000", "event_type": "fl\n'
    if i == 1:
        eve = "not json at all\n" + eve
    (d / "opnotes.txt").write_text(notes, encoding="utf-8", newline="\n")
    (d / "eve.jsonl").write_text(eve, encoding="utf-8", newline="\n")

write_env_catalog(target / "env_catalog.json", env.catalog())
print(f"wrote {len(cohort.actions)} participants to {target}")
