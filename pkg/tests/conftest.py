import numpy as np
import pytest

from squeeze.nbb import builtin_names, builtin_spec


@pytest.fixture
def tri():
    return builtin_spec("sierpinski-triangle")


@pytest.fixture
def carpet():
    return builtin_spec("sierpinski-carpet")


@pytest.fixture
def vicsek():
    return builtin_spec("vicsek")


@pytest.fixture(params=builtin_names())
def any_spec(request):
    return builtin_spec(request.param)


def compact_coords(w, h):
    ys, xs = np.mgrid[:h, :w]
    return np.stack([xs.ravel(), ys.ravel()], axis=1)


ACCEPTANCE_RESULTS = []


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion."""
    entry = {"name": request.node.name, "detail": "", "ok": False}
    ACCEPTANCE_RESULTS.append(entry)

    def record(detail, ok):
        entry["detail"], entry["ok"] = detail, bool(ok)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for entry in ACCEPTANCE_RESULTS:
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"{status}  {entry['name']}: {entry['detail']}")
