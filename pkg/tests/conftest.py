"""Shared pytest hooks.

Acceptance tests tag themselves with ``record_property("criterion", n)`` and a
``measured`` string; the terminal summary folds them into one line per criterion.
"""
from collections import defaultdict

CRITERIA = {
    1: "oracle ceiling on the AR(3)",
    2: "single-agent FSS near the ceiling and above N=32,S=2",
    3: "RSS close to FSS",
    4: "minority and majority agree on exogenous input",
    5: "lambda adaptation across the regime switch",
    6: "endogenous majority-side fraction",
    7: "property suites",
    8: "m-sweep ordering and end-to-end predict check",
}


def pytest_terminal_summary(terminalreporter):
    outcome = defaultdict(list)
    notes = defaultdict(list)
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" not in props:
                continue
            if rep.when != "call" and rep.passed:
                continue
            n = props["criterion"]
            outcome[n].append(rep.passed)
            if props.get("measured"):
                notes[n].append(props["measured"])
    if not outcome:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcome):
        verdict = "PASS" if all(outcome[n]) else "FAIL"
        detail = "; ".join(notes[n])
        terminalreporter.write_line(f"criterion {n} {verdict}: {CRITERIA.get(n, '')}  [{detail}]")
