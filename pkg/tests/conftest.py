import contextlib
import time

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Context manager that records one PASS/FAIL line per acceptance criterion."""

    @contextlib.contextmanager
    def record(n: int, title: str):
        info: dict = {}
        t0 = time.perf_counter()
        try:
            yield info
        except BaseException as exc:
            detail = info.get("detail", "") or type(exc).__name__
            _CRITERIA[n] = f"criterion {n}: FAIL  {title}  ({detail}; {time.perf_counter() - t0:.1f}s)"
            print(_CRITERIA[n])
            raise
        _CRITERIA[n] = f"criterion {n}: PASS  {title}  ({info.get('detail', '')}; {time.perf_counter() - t0:.1f}s)"
        print(_CRITERIA[n])

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
