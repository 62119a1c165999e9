"""Shared pytest plumbing: surfaces the acceptance criterion verdicts.

The acceptance tests append one line per criterion to ACCEPTANCE_LINES;
printing them from the terminal-summary hook keeps them visible even
though pytest captures per-test output at the file-descriptor level.
"""

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
