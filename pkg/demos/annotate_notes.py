"""Show how free-text operator notes become ATT&CK-tagged action records.

Parses a few hand-written notes (one with a continuation line, one with
no matching rule), runs the bundled lexicon over them and prints the
resulting records.

    python demos/annotate_notes.py
"""

from ambisense.annotate import Lexicon, annotate_lexicon
from ambisense.ingest import merge_timeline, parse_opnotes

NOTES = """\
2024-05-14 09:00:12 ran nmap -sV against 10.1.1.5
  found open ports 22 and 80

2024-05-14 09:07:40 exploit failed, got connection reset
2024-05-14 09:15:03 coffee and a scope re-read
2024-05-14 09:21:55 ssh to WEB-01:22 with the creds from the share - worked
"""


def main():
    notes, rejects = parse_opnotes(NOTES, "demo")
    records, skipped = annotate_lexicon(merge_timeline(notes, [], "demo"), Lexicon.load())
    print(f"{len(notes)} notes, {len(rejects)} rejected lines, {skipped} notes matched no rule\n")
    for r in records:
        print(f"{r.timestamp:%H:%M:%S}  {r.technique_id:<6} {r.tactic:<17} target={r.target!s:<10} "
              f"style={r.action_style:<10} outcome={r.outcome}")
        print(f"          \"{r.source_excerpt}\"")


if __name__ == "__main__":
    main()
