import os
import sys

import numpy as np
import pytest

import cdwce

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture(params=cdwce.available_backends())
def backend(request):
    previous = cdwce.use_backend(request.param)
    yield request.param
    cdwce.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        ok, title, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}")
