import os
import sys

# make the shared oracle helpers importable as a plain module
sys.path.insert(0, os.path.dirname(__file__))


def pytest_terminal_summary(terminalreporter):
    import acceptance_report

    if not acceptance_report.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(acceptance_report.LINES, key=lambda k: int(k[1:])):
        terminalreporter.write_line(acceptance_report.LINES[key])
