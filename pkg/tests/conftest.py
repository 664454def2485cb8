"""Collects the one-line acceptance verdicts and prints them after the run."""

ACCEPTANCE = {}


def record(n: int, ok: bool, detail: str):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE.setdefault(n, []).append((ok, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        for _, line in ACCEPTANCE[n]:
            terminalreporter.write_line(line)
