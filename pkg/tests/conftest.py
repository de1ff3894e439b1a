import re

_CRITERION = re.compile(r"test_criterion_(\d+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion that ran."""
    results = {}
    for reps in terminalreporter.stats.values():
        for rep in reps:
            match = _CRITERION.search(getattr(rep, "nodeid", "") or "")
            if match is None or not hasattr(rep, "when"):
                continue
            num = int(match.group(1))
            if rep.when == "call":
                results[num] = results.get(num, True) and rep.passed
            elif rep.failed:  # setup/teardown breakage counts as failure
                results[num] = False
    if not results:
        return
    terminalreporter.write_line("")
    for num in sorted(results):
        terminalreporter.write_line(
            "criterion %d: %s" % (num, "PASS" if results[num] else "FAIL")
        )
