import re

_CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion, with the measured values."""
    rows = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            m = _CRITERION.search(getattr(rep, "nodeid", ""))
            if not m:
                continue
            n = int(m.group(1))
            ok = rep.passed and rep.when == "call"
            detail = dict(rep.user_properties).get("measured", "")
            if n not in rows or not ok:
                rows[n] = ("PASS" if ok else "FAIL", detail or rows.get(n, ("", ""))[1])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(rows):
        verdict, detail = rows[n]
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {detail}")
