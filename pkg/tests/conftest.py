import cmath
import math

import numpy as np
import pytest
from hypothesis import strategies as st

from lyapbif.moebius import MoebiusMap, compose

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)


@st.composite
def moebius_maps(draw, max_log=3.0):
    """Random determinant-one maps ``U diag(s, 1/s) V`` with ``log s`` up to ``max_log``."""
    t = [draw(st.floats(-math.pi, math.pi)) for _ in range(6)]
    ls = draw(st.floats(0.0, max_log))
    u = su2(*t[:3])
    v = su2(*t[3:])
    return kak(u, ls, v)


def kak(u, ls, v):
    """``u diag(e^ls, e^-ls) v`` built in log space, so any ``ls`` is exact."""
    d = MoebiusMap.from_scaled(1, 0, 0, math.exp(-2 * ls), ls)
    return compose(compose(MoebiusMap.from_matrix(u), d), MoebiusMap.from_matrix(v))


def su2(a, b, c):
    return np.array([[cmath.exp(1j * a) * math.cos(b), cmath.exp(1j * c) * math.sin(b)],
                     [-cmath.exp(-1j * c) * math.sin(b), cmath.exp(-1j * a) * math.cos(b)]])


def random_maps(rng, count, max_log=3.0):
    out = []
    for _ in range(count):
        z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        q, _ = np.linalg.qr(z)
        w = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        p, _ = np.linalg.qr(w)
        out.append(kak(q / np.sqrt(np.linalg.det(q)), rng.uniform(0, max_log), p / np.sqrt(np.linalg.det(p))))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE_LINES = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
