from acceptance_report import RESULTS


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        status, title, detail = RESULTS[n]
        terminalreporter.write_line(f"[{status}] {n:>2}. {title}  {detail}")
