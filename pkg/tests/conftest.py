import sys


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance criterion lines after the test report."""
    for name, mod in list(sys.modules.items()):
        if name.rsplit(".", 1)[-1] == "test_acceptance" and getattr(mod, "RESULTS", None):
            terminalreporter.section("acceptance criteria")
            for key in sorted(mod.RESULTS):
                terminalreporter.line(mod.RESULTS[key])
            return
