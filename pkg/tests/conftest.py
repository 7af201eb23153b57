import sys


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance verdicts, including passing ones, at the end of the run."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "VERDICTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
