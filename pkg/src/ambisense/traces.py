"""Render simulated actions back into raw logs.

The simulator emits ActionRecords directly. To exercise ingest and
annotation end to end, this module writes those actions out as operator
notes and Suricata-style EVE lines, phrased so the bundled lexicon maps
each note back to the technique that produced it.
"""

from __future__ import annotations

import json
from datetime import timedelta
from typing import Sequence

from .records import ActionRecord, format_timestamp
from .simulate import make_rng

RENDER_STREAM = 0x52_0000

NOTE_PHRASES = {
    "T1595": "vulnerability scan of {host} with nikto",
    "T1592": "banner grab on {host} to fingerprint what it runs",
    "T1046": "ran nmap -sV against {host}",
    "T1018": "ping sweep around {host} to find live neighbours",
    "T1190": "exploited the web app on {host}",
    "T1078": "logged in with valid creds on {host}",
    "T1110": "started hydra against {host}",
    "T1003": "ran mimikatz on {host} to dump credentials",
    "T1210": "tried eternalblue against {host}",
    "T1021": "ssh into {host} with the harvested creds",
    "T1119": "kicked off automated collection on {host}",
    "T1005": "collected files from {host} home dirs",
    "T1048": "exfil over dns from {host}",
    "T1041": "exfiltrated loot over the beacon from {host}",
}

ALERT_SIGNATURES = {
    "T1595": "ET SCAN Nikto Web App Scan in Progress",
    "T1046": "ET SCAN Nmap Scripting Engine User-Agent Detected",
    "T1190": "ET WEB_SERVER Possible SQL Injection Attempt",
    "T1110": "ET SCAN Potential SSH Scan",
    "T1210": "ET EXPLOIT Possible ETERNALBLUE MS17-010",
    "T1119": "ET POLICY Bulk SMB File Transfer",
    "T1048": "ET POLICY DNS Query With Unusually Long Label",
}

_OUTCOME_WORDS = {"success": "worked", "failure": "failed", "unknown": "not sure yet"}
_ASIDES = (
    "will come back to this one",
    "keeping an eye on the clock",
    "logging this for the debrief",
)
_CHATTER = (
    "short break, reviewing what I have so far",
    "team sync, nothing new",
    "re-reading the scope document",
)
_PORTS = {"T1110": 22, "T1021": 22, "T1210": 445, "T1190": 80, "T1048": 53, "T1041": 443}


def render_opnotes(records: Sequence[ActionRecord], seed: int = 0) -> str:
    """Timestamped notes, one block per action, with asides and idle chatter mixed in."""
    rng = make_rng(seed, RENDER_STREAM)
    blocks = []
    for rec in records:
        phrase = NOTE_PHRASES.get(rec.technique_id)
        if phrase is None:
            raise KeyError(f"no note phrase for {rec.technique_id}")
        ts = rec.timestamp.strftime("%Y-%m-%d %H:%M:%S")
        lines = [f"{ts} {phrase.format(host=rec.target)} - {_OUTCOME_WORDS[rec.outcome]}"]
        if rng.random() < 0.3:
            lines.append("  " + _ASIDES[int(rng.integers(len(_ASIDES)))])
        blocks.append("\n".join(lines))
        if rng.random() < 0.1:
            t = rec.timestamp + timedelta(seconds=30)
            blocks.append(f"{t.strftime('%Y-%m-%d %H:%M:%S')} {_CHATTER[int(rng.integers(len(_CHATTER)))]}")
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def render_eve(records: Sequence[ActionRecord], src_ip: str, seed: int = 0) -> str:
    """EVE JSON lines: an alert for loud actions with a known signature, a flow otherwise, plus DNS noise."""
    rng = make_rng(seed, RENDER_STREAM + 1)
    lines = []
    for rec in records:
        t = rec.timestamp + timedelta(milliseconds=int(rng.integers(500, 5000)))
        base = {
            "timestamp": format_timestamp(t, ms=True).replace("Z", "+0000"),
            "src_ip": src_ip,
            "src_port": int(rng.integers(32768, 61000)),
            "dest_ip": rec.target,
            "dest_port": _PORTS.get(rec.technique_id, 443),
            "proto": "TCP",
        }
        sig = ALERT_SIGNATURES.get(rec.technique_id)
        if rec.action_style == "aggressive" and sig is not None:
            ev = {**base, "event_type": "alert", "alert": {"signature": sig, "severity": 2}}
        else:
            ev = {**base, "event_type": "flow",
                  "flow": {"pkts_toserver": int(rng.integers(3, 40)), "pkts_toclient": int(rng.integers(0, 40))}}
        lines.append(json.dumps(ev, sort_keys=True))
        if rng.random() < 0.2:
            dns = {**base, "event_type": "dns", "dest_port": 53, "proto": "UDP",
                   "dns": {"type": "query", "rrname": "updates.example.org"}}
            lines.append(json.dumps(dns, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")
