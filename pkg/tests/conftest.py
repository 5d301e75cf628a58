"""Shared test plumbing: acceptance-criterion reporting."""

ACCEPTANCE_LINES = []


def record_acceptance(number: int, name: str, ok: bool, detail: str):
    line = f"[PRIMARY {number:2d}] {'PASS' if ok else 'FAIL'} {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
