import math

import numpy as np
import pytest

from lyapbif.family import preset, riley, schottky
from lyapbif.lyapunov import (ParamGrid, chi_at, chi_field, chi_furstenberg_estimate, chi_norm_estimate,
                              chi_vector_fields)
from lyapbif.words import WalkSampler, Word, WordMeasure

R = riley()
DIAG3 = preset("constant", generators={"a": [[3, 0], [0, 1 / 3]]})
ROT = preset("constant", generators={"r": [[math.cos(0.7), -math.sin(0.7)], [math.sin(0.7), math.cos(0.7)]]})


def dirac(spec, text):
    return WordMeasure.uniform([spec.parse(text)])


def test_norm_estimate_dirac():
    est = chi_norm_estimate(DIAG3, dirac(DIAG3, "a"), 0, 37, 20)
    assert est.value == pytest.approx(math.log(3), abs=1e-14)
    assert est.stderr == 0


def test_norm_estimate_symmetric_walk_decays():
    mu = WordMeasure.uniform([DIAG3.parse("a"), DIAG3.parse("a'")])
    ests = [chi_norm_estimate(DIAG3, mu, 0, n, 4000, WalkSampler(mu, 3, n)) for n in (25, 400)]
    for n, e in zip((25, 400), ests):
        # E|S_n| ~ sqrt(2n/pi) for the simple random walk
        assert e.value == pytest.approx(math.log(3) * math.sqrt(2 * n / math.pi) / n, rel=0.1)
    assert ests[1].value < ests[0].value


def test_norm_estimate_rotation():
    est = chi_norm_estimate(ROT, dirac(ROT, "r"), 0, 50, 10)
    assert abs(est.value) < 1e-14 and est.stderr == 0


def test_furstenberg_dirac_and_rotation():
    est = chi_furstenberg_estimate(DIAG3, dirac(DIAG3, "a"), 0, n_burn=100, n_samples=1000)
    assert est.value == pytest.approx(math.log(3), abs=1e-6)
    rot = chi_furstenberg_estimate(ROT, dirac(ROT, "r"), 0, n_burn=10, n_samples=1000)
    assert abs(rot.value) <= max(1e-12, 3 * rot.stderr)


def test_furstenberg_matches_norm_schottky():
    s = schottky(10)
    mu = s.default_measure()
    a = chi_norm_estimate(s, mu, 1.0, 200, 2000, WalkSampler(mu, 1, 0))
    b = chi_furstenberg_estimate(s, mu, 1.0, 100, 10_000, WalkSampler(mu, 1, 1))
    assert abs(a.value - b.value) <= 3 * (a.stderr + b.stderr)


def test_estimator_preconditions():
    with pytest.raises(ValueError):
        chi_norm_estimate(R, R.default_measure(), 0, 0, 1)
    with pytest.raises(ValueError):
        chi_furstenberg_estimate(R, R.default_measure(), 0, n_samples=0)


def test_grid_shape_and_square_pixels():
    g = ParamGrid(-2 + 0j, 8, 4, 32, 16)
    assert g.lams().shape == (16, 32)
    assert g.lams()[0, 0] == pytest.approx(complex(-6 + 0.125, -2 + 0.125))
    assert g.cell_of(g.lams()[5, 7]) == (5, 7)
    with pytest.raises(ValueError):
        ParamGrid(0j, 8, 8, 32, 16)
    with pytest.raises(ValueError):
        ParamGrid(0j, 1, 1, 4, 4)


def test_constant_family_field_is_constant():
    c = preset("constant")
    f = chi_field(c, c.default_measure(), ParamGrid(0j, 4, 4, 16, 16), 20, 10)
    assert np.ptp(f.values) == 0


def test_riley_field_against_pointwise_estimates():
    g = ParamGrid(-2 + 0j, 8, 8, 32, 32)
    mu = R.default_measure()
    f = chi_field(R, mu, g, 50, 200, seed=4)
    assert np.all(np.isfinite(f.values))
    lams = g.lams()
    assert np.all(f.values[np.abs(lams) > 1] > 0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        j, i = rng.integers(0, 32, 2)
        est = chi_norm_estimate(R, mu, lams[j, i], 50, 200, WalkSampler(mu, 99, int(j * 32 + i)))
        # the field pixel is itself a 200-walk mean, so both errors count
        field_sd = est.stderr
        assert abs(f.values[j, i] - est.value) <= 3 * math.hypot(est.stderr, field_sd)


def test_shared_vs_unshared_roughness(capsys):
    g = ParamGrid(-6 + 3j, 2, 2, 16, 16)  # away from the bifurcation locus
    mu = R.default_measure()
    lap = []
    for shared in (True, False):
        u = chi_field(R, mu, g, 20, 20, seed=1, shared_words=shared).values
        lap.append(np.mean(np.abs(u[1:-1, 2:] + u[1:-1, :-2] + u[2:, 1:-1] + u[:-2, 1:-1] - 4 * u[1:-1, 1:-1])))
    with capsys.disabled():
        print(f"\nmean |discrete Laplacian|: shared {lap[0]:.3e}  unshared {lap[1]:.3e}")


def test_determinism_across_threads(monkeypatch):
    g = ParamGrid(-3 + 0j, 10, 10, 24, 24)
    mu = R.default_measure()
    out = []
    for th in ("1", "3"):
        monkeypatch.setenv("LYAPBIF_THREADS", th)
        out.append(chi_field(R, mu, g, 15, 12, seed=2, shared_words=False).values.tobytes())
        out.append(chi_field(R, mu, g, 15, 12, seed=2).values.tobytes())
    assert out[0] == out[2] and out[1] == out[3]


def test_submean_property():
    g = ParamGrid(-3 + 0j, 10, 10, 40, 40)
    mu = R.default_measure()
    n, m = 20, 40
    rng = np.random.default_rng(5)
    js = rng.integers(1, 39, 100)
    is_ = rng.integers(1, 39, 100)
    centers = g.lams()[js, is_]
    circle = np.exp(2j * np.pi * np.arange(64) / 64) * g.h
    vals = chi_at(R, mu, centers[:, None] + circle[None, :], n, m)
    c = chi_at(R, mu, centers, n, m)
    assert np.array_equal(c, chi_field(R, mu, g, n, m).values[js, is_])
    assert np.all(vals.mean(axis=1) >= c - 1e-6 * (1 + np.abs(c)))


def test_vector_fields_share_walks():
    g = ParamGrid(-3 + 0j, 10, 10, 16, 16)
    fs = chi_vector_fields(R, R.default_measure(), g, [10, 40], 20)
    assert [f.metadata["n"] for f in fs] == [10, 40]
    assert all(np.all(np.isfinite(f.values)) for f in fs)
