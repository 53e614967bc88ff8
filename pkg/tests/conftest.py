import functools

import pytest

from tacnode_rh.airyop import build_resolvent
from tacnode_rh.tacnode import TacnodeParams, TacnodeSystem, derive_constants

PARAM_SETS = [
    TacnodeParams(1.0, 1.0, 0.0, 0.0, 0.0),
    TacnodeParams(1.0, 1.0, 0.3, 0.3, 0.4),
    TacnodeParams(1.3, 0.8, 0.4, -0.3, 0.25),
]
PARAM_IDS = ["symmetric", "shifted", "asymmetric"]

_ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def resolvent_at(t):
    return build_resolvent(t)


@functools.lru_cache(maxsize=None)
def system_for(p):
    return TacnodeSystem(p, resolvent_at(derive_constants(p).t))


@pytest.fixture(params=PARAM_SETS, ids=PARAM_IDS)
def params(request):
    return request.param


@pytest.fixture
def system(params):
    return system_for(params)


@pytest.fixture
def acceptance_line():
    def record(number, passed, text):
        _ACCEPTANCE_LINES.append((number, passed, text))
        print(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {text}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, text in sorted(_ACCEPTANCE_LINES, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {text}")
