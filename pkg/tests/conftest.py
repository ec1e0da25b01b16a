import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance scorecard after the normal test summary."""
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if module is None:
        return
    results = getattr(module, "RESULTS", {})
    if not results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance scorecard")
    terminalreporter.write_line("-" * 60)
    for name, (status, detail) in results.items():
        terminalreporter.write_line(f"{status}: {name} - {detail}")
