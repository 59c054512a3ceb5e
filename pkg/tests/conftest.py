import re

CRITERIA = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if not m or report.when != "call" and not (report.when == "setup" and report.failed):
        return
    lines = [s for name, s in report.sections if name.startswith("Captured stdout")]
    CRITERIA[int(m.group(1))] = (report.passed, "".join(lines).strip().splitlines())


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, detail = CRITERIA[n]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}")
        for line in detail:
            tr.write_line("    " + line)
