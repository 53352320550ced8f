from datetime import datetime, timedelta, timezone

import pytest

from ambisense.models import DecisionContext, OptionFeature
from ambisense.records import ActionRecord

T0 = datetime(2024, 3, 1, 10, 0, tzinfo=timezone.utc)


def option(oid, gain=1.0, loss=1.0, p_success=None, p_detect=0.2, novelty=1.0, complexity=0.5,
           n_uses=0, n_successes=0, chosen=False, style="unknown", target=None):
    return OptionFeature(oid, gain, loss, p_success, p_detect, novelty, complexity, n_uses, n_successes,
                         chosen, style, "T1046", target)


def context(options, uncertainty=0.8, pid="p1", seq=0, tactic="Discovery"):
    return DecisionContext(pid, T0 + timedelta(seconds=seq), tuple(options), uncertainty, "T1046", tactic, seq)


def record(tid="T1046", tactic="Discovery", target="10.0.1.10", style="aggressive", outcome="success",
           minutes=0, pid="p1"):
    return ActionRecord(T0 + timedelta(minutes=minutes), pid, tid, tactic, target, style, outcome, "", 0.9)


@pytest.fixture
def t0():
    return T0


# -- acceptance summary: one line per criterion at the end of the run ----------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    number = int(name.split("_")[2])
    detail = dict(report.user_properties).get("detail", "")
    _ACCEPTANCE[number] = ("PASS" if report.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {status}  {detail}")
