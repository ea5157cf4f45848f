import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from cspauto import _backend  # noqa: E402
from cspauto.automodels import builtin_env, shipped_script  # noqa: E402
from cspauto.lang import parse  # noqa: E402

ACCEPTANCE = []


@pytest.fixture(scope="session")
def env():
    return builtin_env()


@pytest.fixture(scope="session")
def paper_env():
    return parse(shipped_script("paper_examples.cspa"))


@pytest.fixture(params=_backend.available())
def kernels(request):
    return _backend.load(request.param)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
