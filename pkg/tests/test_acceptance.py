"""The ten acceptance criteria at full scale.

Each test records one PASS/FAIL line (also shown in the terminal summary)
and then asserts it.  Diagnostics that go beyond the criterion are printed
but never change the verdict.
"""

import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from conftest import record_criterion
from lyapbif.cli import DEFAULT_SEED
from lyapbif.experiments import (EpsRule, compare_mass, delta_statistics, fraction_pixels_near,
                                 fraction_points_near, noise_threshold, random_trace_measure,
                                 self_noise_threshold, support_mask, trace_ld_statistics,
                                 trace_rate_deviations, type_change_locus)
from lyapbif.family import constant, riley, schottky
from lyapbif.lyapunov import (ParamGrid, ScalarField, WalkSampler, chi_furstenberg_estimate,
                              chi_norm_estimate, chi_vector_fields, walk_matrices)
from lyapbif.moebius import (MoebiusMap, batch_delta, batch_discriminant, batch_op_norm_log,
                             integrated_log_norm)
from lyapbif.potential import bif_measure, ddc
from lyapbif.zeros import Box, trace_loci
from symbolic import RootOracle, reduced_words, riley_trace_squared

pytestmark = pytest.mark.slow

SEED = DEFAULT_SEED
SCHOTTKY_PROBE = 0.1 + 0j


def verdict(number, title, ok, detail, t0):
    record_criterion(number, title, ok, f"{detail} ({time.time() - t0:.1f} s)")
    assert ok, detail


# ------------------------------------------------------------------ 1

def test_c01_ddc_calibration():
    t0 = time.time()
    grid = ParamGrid(0j, 2.0, 2.0, 512, 512)
    h = grid.h
    rng = np.random.default_rng(SEED)
    lams = grid.lams()
    worst_total = worst_local = 0.0
    for _ in range(50):
        deg = int(rng.integers(1, 6))
        roots, mults = [], []
        while sum(mults) < deg:
            z = complex(*rng.uniform(-1 + 10 * h, 1 - 10 * h, 2))
            if all(abs(z - r) >= 8 * h for r in roots):
                k = min(deg - sum(mults), 2 if rng.random() < 0.3 else 1)
                roots.append(z)
                mults.append(k)
        with np.errstate(divide="ignore"):
            u = sum(k * np.log(np.abs(lams - r)) for r, k in zip(roots, mults))
        mf = ddc(ScalarField(grid, u))
        full = mf.full()
        worst_total = max(worst_total, abs(mf.total - deg))
        for r, k in zip(roots, mults):
            j, i = grid.cell_of(r)
            rad = 2 if k == 1 else 3
            worst_local = max(worst_local, abs(full[j - rad: j + rad + 1, i - rad: i + rad + 1].sum() - k))
    ok = worst_total <= 1e-3 and worst_local <= 1e-2 and time.time() - t0 <= 30
    verdict(1, "dd^c calibration", ok,
            f"max |total - degree| {worst_total:.2e} (<= 1e-3), max local error {worst_local:.2e} (<= 1e-2)", t0)


# ------------------------------------------------------------------ 2

PROBES = {"riley": [-6 + 2j, -3 + 3j, 1 + 1j, -2 + 0.5j, 2j],
          "schottky": [0.1, 0.1 + 0.2j, -0.3 + 0.1j, 0.25j, 0.4 - 0.3j]}


def test_c02_estimator_cross_oracle():
    t0 = time.time()
    worst = 0.0
    for spec in (riley(), schottky(3)):
        mu = spec.default_measure()
        for lam in PROBES[spec.label]:
            a = chi_norm_estimate(spec, mu, lam, 200, 10_000, WalkSampler(mu, SEED, 0))
            b = chi_furstenberg_estimate(spec, mu, lam, 100, 10_000, WalkSampler(mu, SEED, 1))
            z = abs(a.value - b.value) / (a.stderr + b.stderr)
            print(f"  {spec.label:9s} {lam!s:12s} norm {a.value:.5f}+-{a.stderr:.5f}  "
                  f"furstenberg {b.value:.5f}+-{b.stderr:.5f}  |diff|/se {z:.2f}")
            worst = max(worst, z)
    ok = worst <= 3 and time.time() - t0 <= 120
    verdict(2, "norm vs Furstenberg estimators", ok, f"max |diff| / combined stderr {worst:.2f} (<= 3)", t0)


# ------------------------------------------------------------------ 3

def test_c03_trace_convergence():
    t0 = time.time()
    s = schottky(3)
    d = trace_rate_deviations(s, s.default_measure(), SCHOTTKY_PROBE, 400, 1000, SEED)
    med = float(np.median(d))
    ok = med <= 0.05 and time.time() - t0 <= 60
    verdict(3, "trace growth rate", ok, f"median |log|tr|/n - chi| at n=400: {med:.4f} (<= 0.05)", t0)


# ------------------------------------------------------------------ 4

def test_c04_potential_rate():
    t0 = time.time()
    spec = riley()
    w = spec.window
    grid = ParamGrid(w.center, w.width, w.width, 32, 32)
    f100, f200, f400 = chi_vector_fields(spec, spec.default_measure(), grid, [100, 200, 400], 1000, SEED)
    a = float(np.max(np.abs(f100.values - f200.values)))
    b = float(np.max(np.abs(f200.values - f400.values)))
    ratio = a / b
    elapsed = time.time() - t0
    # diagnostic only: at m = 1000 the walk-to-walk noise in chi_n - chi_2n is of the same order as
    # the O(1/n) bias, so the ratio moves a lot with the seed
    for seed in (2, 3, 4):
        g = chi_vector_fields(spec, spec.default_measure(), grid, [100, 200, 400], 1000, seed)
        r = np.max(np.abs(g[0].values - g[1].values)) / np.max(np.abs(g[1].values - g[2].values))
        print(f"  seed {seed}: ratio {r:.3f}")
    t0 = time.time() - elapsed
    ok = 1.4 <= ratio <= 3.0 and elapsed <= 180
    verdict(4, "O(1/n) rate of the vector potential", ok,
            f"sup|chi_100 - chi_200| {a:.3e}, sup|chi_200 - chi_400| {b:.3e}, ratio {ratio:.3f} (in [1.4, 3.0])",
            t0)


# ------------------------------------------------------------------ 5

def test_c05_symbolic_zero_oracle():
    t0 = time.time()
    R = riley()
    words = reduced_words(8)
    box = Box(0j, 5.0, 5.0)
    oracle = RootOracle()
    polys = [riley_trace_squared(w) for w in words]
    t_solve = 0.0
    worst, mismatches, outside = 0.0, 0, 0
    for t in (0, 2, 4):
        ts = time.time()
        clouds = trace_loci(R, words, t, box)
        t_solve += time.time() - ts
        for w, q, cl in zip(words, polys, clouds):
            q = list(q)
            q[0] -= t
            roots = oracle(q)
            inside = roots[(np.abs(roots.real) < 5) & (np.abs(roots.imag) < 5)]
            outside += len(roots) - len(inside)
            got = cl.expanded()
            if len(got) != len(inside):
                mismatches += 1
                continue
            if len(got):
                d = np.abs(got[:, None] - inside[None, :])
                i, j = linear_sum_assignment(d)
                worst = max(worst, float(d[i, j].max()))
    ok = mismatches == 0 and worst <= 1e-6 and t_solve <= 60
    verdict(5, "trace loci vs exact polynomial roots", ok,
            f"{len(words)} words x 3 targets, {mismatches} count mismatches, worst root error {worst:.2e} "
            f"(<= 1e-6), {outside} oracle roots outside the box, locator time {t_solve:.1f} s", t0)


# ------------------------------------------------------------------ 6, 7

RILEY_GRID = ParamGrid.from_bounds(-8, 2, -5, 5, 256, 256)


@pytest.fixture(scope="module")
def riley_bif():
    R = riley()
    t0 = time.time()
    mf = bif_measure(R, R.default_measure(), RILEY_GRID, 60, 400, SEED)
    return mf, time.time() - t0


def test_c06_equidistribution_trend(riley_bif):
    t0 = time.time()
    bif, t_bif = riley_bif
    R = riley()
    tv = {}
    for n in (15, 30, 60):
        emp, _, _ = random_trace_measure(R, R.default_measure(), RILEY_GRID, n, 10, 4, SEED)
        tv[n] = {c: compare_mass(emp, bif, c).tv for c in (8, 16, 32)}
        print(f"  n={n:>3}  TV at coarsen 8/16/32: "
              + " ".join(f"{tv[n][c]:.4f}" for c in (8, 16, 32)))
    ok = tv[30][8] < tv[15][8] and tv[60][8] < tv[30][8] and time.time() - t0 + t_bif <= 600
    verdict(6, "trace measures approach the bifurcation measure", ok,
            f"TV (8x8 blocks) n=15 {tv[15][8]:.4f} > n=30 {tv[30][8]:.4f} > n=60 {tv[60][8]:.4f}", t0 - t_bif)


def test_c07_support_consistency(riley_bif):
    t0 = time.time()
    bif, t_bif = riley_bif
    R = riley()
    mu = R.default_measure()
    C = constant()
    noise = bif_measure(C, C.default_measure(), RILEY_GRID, 60, 400, SEED)
    thr = noise_threshold(noise, 99)
    support = support_mask(bif, thr)
    _, clouds, _ = random_trace_measure(R, mu, RILEY_GRID, 20, 10, 4, SEED)
    tc = type_change_locus(R, mu, RILEY_GRID, 20, 10, SEED)
    p_pts = fraction_points_near(clouds, RILEY_GRID, support, 2)
    p_pix = fraction_pixels_near(tc, support, 2)
    # the constant family's floor is exactly zero; a stricter threshold at the measure's own
    # rounding-noise scale shows the criterion is not carried by the floor alone
    strict_thr = self_noise_threshold(bif)
    strict = support_mask(bif, strict_thr)
    s_pts = fraction_points_near(clouds, RILEY_GRID, strict, 2)
    s_pix = fraction_pixels_near(tc, strict, 2)
    ok = p_pts >= 0.85 and p_pix >= 0.85 and time.time() - t0 + t_bif <= 600
    verdict(7, "support consistency", ok,
            f"points near support {p_pts:.1%}, type-change pixels near support {p_pix:.1%} "
            f"({int(tc.sum())} flagged; both >= 85%); noise-floor threshold {thr:.2e} keeps {support.mean():.1%} "
            f"of the grid; diagnostic at threshold {strict_thr:.2e} ({strict.mean():.1%} of the grid): "
            f"points {s_pts:.1%}, pixels {s_pix:.1%}", t0 - t_bif)


# ------------------------------------------------------------------ 8

def test_c08_separation_and_deviation_decay():
    t0 = time.time()
    s = schottky(3)
    mu = s.default_measure()
    ns = [25, 50, 100, 200]
    dt = delta_statistics(s, mu, SCHOTTKY_PROBE, ns, EpsRule("power", 1.0, 1.0), 10_000, SEED)
    lt = trace_ld_statistics(s, mu, SCHOTTKY_PROBE, 0.2, ns, 10_000, SEED)
    print(dt.format())
    print(lt.format())
    slope = lt.log_slope()
    ok = dt.is_nonincreasing() and slope < -0.01 and time.time() - t0 <= 180
    verdict(8, "separation and large-deviation decay", ok,
            f"delta table non-increasing {dt.is_nonincreasing()}, LD log-slope {slope:.4f} per unit n (< -0.01)",
            t0)


# ------------------------------------------------------------------ 9

def random_products(count, rng):
    """Products of random walks in both presets at random parameters and lengths."""
    E, L = [], []
    per = 500
    for k in range(count // per):
        spec = riley() if k % 2 == 0 else schottky(float(rng.uniform(1.5, 5)))
        w = spec.window
        lam = w.center + complex(rng.uniform(-0.5, 0.5) * w.width, rng.uniform(-0.5, 0.5) * w.height)
        mu = spec.default_measure()
        e, ls = walk_matrices(spec, mu, lam, int(rng.integers(1, 40)), per, WalkSampler(mu, SEED, k))
        E.append(e)
        L.append(ls)
    return np.concatenate(E), np.concatenate(L)


def test_c09_comparison_bounds():
    t0 = time.time()
    rng = np.random.default_rng(SEED)
    E, ls = random_products(100_000, rng)
    norm = batch_op_norm_log(E, ls)
    disc = np.abs(batch_discriminant(E))
    d = batch_delta(E)
    keep = (disc > 0) & (d > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ref = np.maximum(0.0, ls + 0.5 * np.log(disc) - np.log(d))
    dev = np.abs(norm - ref)[keep]
    c_cmp = float(np.exp(dev.max()))
    ilog = np.array([integrated_log_norm(MoebiusMap.from_scaled(*e, l)) for e, l in zip(E, ls)])
    c_int = float(np.max(np.abs(ilog - norm)))
    ok = c_cmp <= 100 and c_int <= 2 and time.time() - t0 <= 60
    verdict(9, "norm/trace/delta and integrated log-norm bounds", ok,
            f"{int(keep.sum())} non-parabolic products, comparison constant {c_cmp:.2f} (<= 100), "
            f"max |integrated - log norm| {c_int:.3f} (<= 2), log norms up to {norm.max():.1f}", t0)


# ------------------------------------------------------------------ 10

CLI_RUNS = {
    "lyap": ["--preset", "riley", "--grid=-3,0,8,8,32,32", "--n", "20", "--m", "20"],
    "bif": ["--preset", "riley", "--grid=-3,0,8,8,32,32", "--n", "20", "--m", "20"],
    "zeros": ["--preset", "riley", "--grid=-3,0,10,10,32,32", "--n", "8", "--k", "4"],
    "collide": ["--preset", "riley", "--grid=-3,0,10,10,32,32", "--n", "5", "--k", "4"],
    "stats": ["--preset", "schottky", "--lam", "0.1,0", "--n", "30", "--m", "300"],
    "typechange": ["--preset", "riley", "--grid=-3,0,8,8,32,32", "--n", "10", "--m", "5"],
}


def _cli(args, threads):
    env = dict(os.environ, LYAPBIF_THREADS=str(threads))
    r = subprocess.run([sys.executable, "-m", "lyapbif", *args], capture_output=True, text=True, env=env)
    assert r.returncode == 0, r.stderr
    return r


def _outputs(d: Path) -> dict:
    return {str(p.relative_to(d)): p.read_bytes() for p in sorted(d.rglob("*"))
            if p.is_file() and p.name != "resolved_config.json"}


def test_c10_determinism(tmp_path):
    t0 = time.time()
    threads = sorted({1, 4, os.cpu_count() or 1})
    bad = []
    for cmd, args in CLI_RUNS.items():
        first = tmp_path / cmd / "first"
        _cli([cmd, *args, "--out", str(first)], 1)
        ref = _outputs(first)
        cfg = first / "resolved_config.json"
        assert json.loads(cfg.read_text())["seed"] == DEFAULT_SEED
        for th in threads:
            again = tmp_path / cmd / f"threads{th}"
            _cli([cmd, "--config", str(cfg), "--out", str(again)], th)
            if _outputs(again) != ref:
                bad.append(f"{cmd}@{th}")
    ok = not bad
    verdict(10, "byte-identical reruns", ok,
            f"{len(CLI_RUNS)} subcommands rerun from resolved config under threads {threads}; "
            f"mismatches: {bad or 'none'}", t0)
