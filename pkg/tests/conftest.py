import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("lab", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")

# criterion number -> (title, passed, detail)
CRITERIA: dict[int, tuple[str, bool, str]] = {}
_INVARIANT_OUTCOMES: list[tuple[str, bool]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "invariant: module invariant/property test")
    config.addinivalue_line("markers", "acceptance: acceptance criterion")


def pytest_runtest_logreport(report):
    if "invariant" in report.keywords and (report.when == "call" or report.failed):
        _INVARIANT_OUTCOMES.append((report.nodeid, report.passed))


@pytest.fixture
def criterion():
    """Record an acceptance line: ``criterion(num, title, passed, detail)``."""
    def record(num, title, passed, detail=""):
        CRITERIA[num] = (title, bool(passed), detail)
        print(f"[criterion {num}] {'PASS' if passed else 'FAIL'}: {title} | {detail}")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(CRITERIA):
        title, ok, detail = CRITERIA[num]
        if num == 9 and _INVARIANT_OUTCOMES:
            failed = [n for n, p in _INVARIANT_OUTCOMES if not p]
            ok = ok and not failed
            detail += f"; invariant tests {len(_INVARIANT_OUTCOMES) - len(failed)}/" \
                      f"{len(_INVARIANT_OUTCOMES)} passed"
        tr.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})")
