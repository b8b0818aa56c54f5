_CRITERION_LINES = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _CRITERION_LINES.extend(line for line in report.capstdout.splitlines()
                                if line.startswith("[criterion"))


def pytest_terminal_summary(terminalreporter):
    # echo the per-criterion lines even when output capture hides them
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
