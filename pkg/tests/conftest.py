def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE
    except ImportError:
        return
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
