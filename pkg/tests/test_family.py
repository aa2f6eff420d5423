import json
import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings, strategies as st

from lyapbif.errors import FamilyError, UnknownGenerator, UnknownPreset
from lyapbif.family import (PolyC, evaluate, evaluate_grid, evaluate_jet, family_from_dict, family_to_dict,
                            load_family, preset, riley, schottky)
from lyapbif.moebius import MapType, MoebiusMap, classify, compose, op_norm_log, tr_squared
from lyapbif.words import Letter, Word, reduce

R = riley()
words = st.lists(st.builds(Letter, st.integers(0, 1), st.booleans()), max_size=50).map(reduce)
lams = st.builds(complex, st.floats(-3, 3), st.floats(-3, 3))


def det1(m: MoebiusMap) -> float:
    return abs((m.a * m.d - m.b * m.c) * math.exp(2 * m.log_scale) - 1)


def tr2_jet(jets, ls):
    t = jets[0][0] + jets[1][1]
    t2 = t * t
    f = math.exp(2 * ls)
    return t2.value * f, t2.d * f


def test_evaluate_examples():
    assert evaluate(R, R.parse("ab"), 1) == MoebiusMap.from_matrix([[2, 1], [1, 1]])
    assert evaluate(schottky(2), Word.parse("a", ("a", "b")), 0.3 + 0.1j) == MoebiusMap.from_matrix(np.diag([2, 0.5]))
    n = 10**6
    an = Word((Letter(0, False),) * n)
    assert op_norm_log(evaluate(R, an, 0.5)) == pytest.approx(math.log(n), abs=1e-5)


def test_word_order_convention():
    """``"ab"`` is rho(a) rho(b)."""
    a = evaluate(R, R.parse("a"), 2.0)
    b = evaluate(R, R.parse("b"), 2.0)
    assert evaluate(R, R.parse("ab"), 2.0) == compose(a, b)
    assert evaluate(R, R.parse("ab"), 2.0) != compose(b, a)


def test_unknown_generator():
    with pytest.raises(UnknownGenerator):
        evaluate(R, Word((Letter(2, False),)), 0)


def test_jet_examples():
    jets, ls = evaluate_jet(R, R.parse("ab"), 2.0)
    assert tr2_jet(jets, ls) == pytest.approx((16, 8))
    c = preset("constant")
    jets, _ = evaluate_jet(c, c.parse("ab'a"), 1.5)
    assert all(j.d == 0 for row in jets for j in row)


@settings(max_examples=60, deadline=None)
@given(words, lams)
def test_jet_matches_central_difference(w, lam):
    h = 1e-5
    jets, ls = evaluate_jet(R, w, lam)
    scale = math.exp(ls)
    for r in range(2):
        for c in range(2):
            fp = evaluate(R, w, lam + h).matrix()[r, c]
            fm = evaluate(R, w, lam - h).matrix()[r, c]
            d = jets[r][c].d * scale
            # projective sign is fixed by continuity from the same evaluation order
            fd = (fp - fm) / (2 * h)
            assert abs(d - fd) <= 1e-5 * max(1.0, abs(d)) or abs(d + fd) <= 1e-5 * max(1.0, abs(d))


def test_jet_consistent_with_evaluate():
    w = R.parse("abab'a'bbba")
    jets, ls = evaluate_jet(R, w, 0.3 - 1.2j)
    m = np.array([[j.value for j in row] for row in jets]) * math.exp(ls)
    assert MoebiusMap.from_matrix(m) == evaluate(R, w, 0.3 - 1.2j)


def test_preset_examples():
    assert classify(evaluate(R, R.parse("b"), 0)) is MapType.IDENTITY
    s3 = schottky(3)
    for lam in (0, 0.4j, -1 + 2j):
        assert evaluate(s3, s3.parse("a"), lam) == MoebiusMap.from_matrix(np.diag([3, 1 / 3]))
    with pytest.raises(UnknownPreset):
        preset("nope")


def test_riley_trace_symbolic():
    lam = sympy.symbols("lam")
    a = sympy.Matrix([[1, 1], [0, 1]])
    b = sympy.Matrix([[1, 0], [lam, 1]])
    t2 = sympy.expand((a * b).trace() ** 2)
    assert sympy.expand(t2 - (2 + lam) ** 2) == 0
    for z in (0.3, -1 + 2j, 5j):
        assert tr_squared(evaluate(R, R.parse("ab"), z)) == pytest.approx(complex(t2.subs(lam, z)))


def test_schottky_second_generator_is_conjugate():
    s = schottky(3)
    for lam in (0.0, 0.2 + 0.1j):
        b = evaluate(s, s.parse("b"), lam)
        assert tr_squared(b) == pytest.approx((3 + 1 / 3) ** 2)
        # fixes lam - i and lam + i
        m = b.matrix()
        for z in (lam - 1j, lam + 1j):
            assert (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1]) == pytest.approx(z)


def _gauss_mul(x, y):
    return (x[0] * y[0] - x[1] * y[1], x[0] * y[1] + x[1] * y[0])


def _gauss_log_abs(x):
    re, im = x
    if re == 0 and im == 0:
        return -math.inf
    k = max(abs(re).bit_length(), abs(im).bit_length())
    shift = max(0, k - 60)
    return math.log(math.hypot(re >> shift if re >= 0 else -((-re) >> shift),
                               im >> shift if im >= 0 else -((-im) >> shift))) + shift * math.log(2)


def test_long_word_exact_oracle():
    """Length-10^4 product at lam = 1 + i against exact Gaussian-integer arithmetic."""
    rng = np.random.default_rng(0)
    w = Word.from_codes(rng.integers(0, 4, 10_000))
    gens = {0: ((1, 1), (0, 1)), 1: ((1, -1), (0, 1)), 2: ((1, 0), (1, 1)), 3: ((1, 0), (-1, 1))}
    lam = (1, 1)
    one, zero = (1, 0), (0, 0)
    mats = {}
    for g, ((a, b), (c, d)) in gens.items():
        mats[g] = [[(a, 0), (b, 0)], [_gauss_mul((c, 0), lam), (d, 0)]]
    mats[1] = [[one, (-1, 0)], [zero, one]]
    mats[3] = [[one, zero], [(-1, -1), one]]
    P = [[one, zero], [zero, one]]
    for x in w.letters:
        G = mats[x.code]
        P = [[tuple(map(sum, zip(_gauss_mul(P[i][0], G[0][j]), _gauss_mul(P[i][1], G[1][j]))))
              for j in range(2)] for i in range(2)]
    m = evaluate(R, w, 1 + 1j)
    exact = [_gauss_log_abs(P[i][j]) for i in range(2) for j in range(2)]
    got = [m.log_scale + math.log(abs(e)) if e != 0 else -math.inf for e in m.entries]
    top = max(exact)
    for e, g in zip(exact, got):
        if e > top - 20:
            assert abs(e - g) <= 1e-9
    # det 1 of the scaled entries holds wherever it is representable
    assert det1(evaluate(R, Word((Letter(0, False),) * 10_000), 1.3 + 0.7j)) <= 1e-9
    assert det1(evaluate(R, R.parse("ab" * 5000), -2.0)) <= 1e-9  # ab has order 2 at -2


@settings(max_examples=40, deadline=None)
@given(words, words, lams)
def test_homomorphism_and_inverse(u, v, lam):
    assert evaluate(R, u * v, lam).isclose(compose(evaluate(R, u, lam), evaluate(R, v, lam)), 1e-8)
    assert evaluate(R, u.inverse(), lam).isclose(evaluate(R, u, lam).inverse(), 1e-8)


def test_grid_matches_pointwise():
    w = R.parse("ab'ab")
    pts = np.array([0.1, -2 + 1j, 3j])
    E, ls, dE = evaluate_grid(R, w, pts, jet=True)
    for k, z in enumerate(pts):
        m = MoebiusMap.from_scaled(*E[k], ls[k])
        assert m == evaluate(R, w, z)


def test_family_file_round_trip(tmp_path):
    p = tmp_path / "fam.json"
    p.write_text(json.dumps(family_to_dict(R)))
    f = load_family(p)
    assert f.fingerprint() == R.fingerprint()
    bad = family_to_dict(R)
    bad["generators"][0]["matrix"][0][0] = [[2, 0]]
    with pytest.raises(FamilyError):
        family_from_dict(bad)


def test_linear_custom_preset():
    lam = [[0, 0], [1, 0]]
    ilam = [[0, 0], [0, 1]]
    f = preset("linear-custom", generators={"u": [[1, lam], [0, 1]], "v": [[1, 0], [ilam, 1]]})
    # uv = [[1 + i lam^2, lam], [i lam, 1]]
    assert tr_squared(evaluate(f, f.parse("uv"), 2.0)) == pytest.approx((2 + 4j) ** 2)


def test_polyc_arithmetic():
    p = PolyC([1, 2])
    q = PolyC([0, 0, 3])
    assert ((p * q) - q * p).degree <= 0
    assert (p * q)(2.0) == pytest.approx(5 * 12)
    assert p.derivative()(7) == 2
