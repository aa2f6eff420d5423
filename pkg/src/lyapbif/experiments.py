"""Experiment harness: empirical zero measures, measure comparison, type-change detection
and tail statistics of random products.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage, stats

from . import _kernels as K
from ._parallel import run_chunks
from .errors import DegenerateMeasure
from .family import FamilySpec, atom_arrays, atom_matrices
from .lyapunov import ParamGrid, chi_norm_estimate
from .moebius import (DEFAULT_TAU, batch_delta, batch_fixed_lifts, batch_is_loxodromic,
                      batch_log_abs_trace)
from .potential import MassField
from .words import WalkSampler, Word, WordMeasure
from .zeros import Box, PointCloud, trace_loci

WILSON_LEVEL = 0.95
TYPE_BUDGET = 2**24  # max type codes held in memory at once


# ------------------------------------------------------------------ reports

@dataclass
class ComparisonReport:
    tv: float
    correlation: float
    blocks_p: np.ndarray
    blocks_q: np.ndarray
    settings: dict = field(default_factory=dict)

    def ratio_table(self) -> np.ndarray:
        """Per-block ``p / q`` (NaN where ``q`` vanishes)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.blocks_q != 0, self.blocks_p / self.blocks_q, np.nan)

    def to_json(self) -> dict:
        r = self.ratio_table()
        return {"tv": self.tv, "correlation": self.correlation,
                "blocks_p": self.blocks_p.tolist(), "blocks_q": self.blocks_q.tolist(),
                "ratio": [[None if not np.isfinite(x) else float(x) for x in row] for row in r],
                "settings": self.settings}


@dataclass(frozen=True)
class DecayRow:
    n: int
    estimate: float
    count: int
    samples: int
    lo: float
    hi: float
    threshold: float


def wilson_interval(count: int, samples: int, level: float = WILSON_LEVEL):
    ci = stats.binomtest(int(count), int(samples)).proportion_ci(level, method="wilson")
    return float(ci.low), float(ci.high)


def _row(n, count, samples, threshold) -> DecayRow:
    lo, hi = wilson_interval(count, samples)
    return DecayRow(int(n), count / samples, int(count), int(samples), lo, hi, float(threshold))


@dataclass
class DecayTable:
    rows: list
    settings: dict = field(default_factory=dict)

    def is_nonincreasing(self) -> bool:
        """No later row is significantly above an earlier one (intervals overlap or decrease)."""
        return all(later.lo <= earlier.hi
                   for k, earlier in enumerate(self.rows) for later in self.rows[k + 1:])

    def log_slope(self) -> float:
        """Least-squares slope of ``log(estimate)`` against ``n`` over rows with nonzero counts.

        NaN with fewer than two such rows.
        """
        pts = [(r.n, math.log(r.estimate)) for r in self.rows if r.count > 0]
        if len(pts) < 2:
            return math.nan
        x, y = np.array(pts).T
        return float(np.polyfit(x, y, 1)[0])

    def to_json(self) -> dict:
        return {"rows": [asdict(r) for r in self.rows],
                "settings": self.settings}

    def format(self) -> str:
        lines = [f"{'n':>6} {'p':>10} {'count':>7} {'m':>7} {'wilson95':>23} {'threshold':>11}"]
        for r in self.rows:
            lines.append(f"{r.n:>6} {r.estimate:>10.5f} {r.count:>7} {r.samples:>7} "
                         f"[{r.lo:.5f}, {r.hi:.5f}]{'':>3} {r.threshold:>11.4g}")
        return "\n".join(lines)


def measure_settings(spec: FamilySpec, mu: WordMeasure) -> dict:
    return {"family": spec.label, "fingerprint": spec.fingerprint(),
            "measure": [[w.format(spec.names), float(p)] for w, p in mu.atoms]}


# ------------------------------------------------------ empirical measures

def empirical_measure(cloud, weight: float, grid: ParamGrid) -> MassField:
    """Bin points (times multiplicity times ``weight``) into the interior cells of ``grid``.

    ``cloud`` may be one :class:`PointCloud` or a sequence of them.  Points
    outside the interior cells go to ``metadata["overflow"]``.
    """
    if not weight > 0:
        raise ValueError("weight must be positive")
    clouds = [cloud] if isinstance(cloud, PointCloud) else list(cloud)
    cells = np.zeros((grid.ny - 2, grid.nx - 2))
    overflow = 0.0
    for cl in clouds:
        for p in cl.points:
            j, i = grid.cell_of(p.lam)
            mass = p.mult * weight
            if 1 <= j <= grid.ny - 2 and 1 <= i <= grid.nx - 2:
                cells[j - 1, i - 1] += mass
            else:
                overflow += mass
    meta = {"kind": "empirical", "weight": weight, "overflow": overflow,
            "points": sum(len(c) for c in clouds)}
    return MassField(grid, cells, meta)


def locus_box(grid: ParamGrid, margin_px: int = 2) -> Box:
    """The grid window shrunk by ``margin_px`` pixels on every side."""
    m = margin_px * grid.h
    return Box(grid.center, 0.5 * grid.width - m, 0.5 * grid.height - m)


def random_trace_measure(spec: FamilySpec, mu: WordMeasure, grid: ParamGrid, n: int, k: int,
                         t: complex = 4, seed: int = 0):
    """Averaged ``(1/2n)[Z(l_n, t)]`` over ``k`` random words, binned on ``grid``.

    Returns ``(mass_field, clouds, words)``.
    """
    words = WalkSampler(mu, seed, 0).walks(k, n)
    clouds = trace_loci(spec, words, t, locus_box(grid))
    mf = empirical_measure(clouds, 1.0 / (2.0 * n * k), grid)
    mf.metadata.update({"n": n, "k": k, "seed": seed, "t": [complex(t).real, complex(t).imag],
                        "constant_words": sum(1 for c in clouds if c.metadata.get("constant"))})
    return mf, clouds, words


def _block_sums(a: np.ndarray, f: int) -> np.ndarray:
    ny, nx = a.shape
    return a.reshape(ny // f, f, nx // f, f).sum(axis=(1, 3))


def compare_mass(m1: MassField, m2: MassField, coarsen: int) -> ComparisonReport:
    """Total-variation distance and Pearson correlation of normalized, block-summed masses."""
    g = m1.grid
    if m2.grid != g:
        raise ValueError("fields live on different grids")
    if coarsen < 1 or g.nx % coarsen or g.ny % coarsen:
        raise ValueError("coarsen must divide nx and ny")
    blocks = []
    for mf in (m1, m2):
        tot = mf.total
        if not tot > 0:
            raise DegenerateMeasure(f"total mass {tot!r} is not positive")
        blocks.append(_block_sums(mf.full() / tot, coarsen))
    p, q = blocks
    tv = 0.5 * float(np.sum(np.abs(p - q)))
    if np.std(p) > 0 and np.std(q) > 0:
        corr = float(np.corrcoef(p.ravel(), q.ravel())[0, 1])
    else:
        corr = 1.0 if np.array_equal(p, q) else 0.0
    settings = {"grid": g.to_dict(), "coarsen": coarsen,
                "first": dict(m1.metadata), "second": dict(m2.metadata)}
    return ComparisonReport(tv, corr, p, q, settings)


def noise_threshold(noise: MassField, q: float = 99.0) -> float:
    """``q``-th percentile of the cell masses of a reference (bifurcation-free) field."""
    return float(np.percentile(noise.cells, q))


def support_mask(mf: MassField, threshold: float) -> np.ndarray:
    """Full-grid mask of cells with mass above ``threshold``."""
    return mf.full() > threshold


def dilate(mask: np.ndarray, radius_px: int) -> np.ndarray:
    """Pixels within Chebyshev distance ``radius_px`` of the mask."""
    if radius_px <= 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, np.ones((3, 3), bool), iterations=radius_px)


def fraction_points_near(clouds, grid: ParamGrid, mask: np.ndarray, radius_px: int = 2) -> float:
    """Fraction of points (with multiplicity) landing in a pixel within ``radius_px`` of ``mask``."""
    near = dilate(mask, radius_px)
    hit = total = 0
    for cl in ([clouds] if isinstance(clouds, PointCloud) else clouds):
        for p in cl.points:
            j, i = grid.cell_of(p.lam)
            total += p.mult
            if 0 <= j < grid.ny and 0 <= i < grid.nx and near[j, i]:
                hit += p.mult
    return hit / total if total else math.nan


def fraction_pixels_near(pixels: np.ndarray, mask: np.ndarray, radius_px: int = 2) -> float:
    n = int(pixels.sum())
    return float(np.sum(pixels & dilate(mask, radius_px))) / n if n else math.nan


# ------------------------------------------------------------- type change

def _changes(types: np.ndarray) -> np.ndarray:
    """``types`` is ``(W, ny, nx)``; flag pixels whose type differs from a 4-neighbour."""
    out = np.zeros(types.shape[1:], bool)
    dx = np.any(types[:, :, 1:] != types[:, :, :-1], axis=0)
    dy = np.any(types[:, 1:, :] != types[:, :-1, :], axis=0)
    out[:, 1:] |= dx
    out[:, :-1] |= dx
    out[1:, :] |= dy
    out[:-1, :] |= dy
    return out


def _type_mask(spec: FamilySpec, mu: WordMeasure, grid: ParamGrid, steps: np.ndarray,
               tau: float) -> np.ndarray:
    flat, ptr = atom_arrays(spec, mu)
    lams = np.ascontiguousarray(grid.lams().ravel())
    npix = lams.size
    radius = grid.h * math.sqrt(0.5)
    m, nmax = steps.shape
    per = max(1, TYPE_BUDGET // max(1, nmax * npix))
    mask = np.zeros((grid.ny, grid.nx), bool)
    for lo in range(0, m, per):
        st = np.ascontiguousarray(steps[lo: lo + per])
        out = np.empty((st.shape[0] * nmax, npix), np.uint8)
        run_chunks(K.type_walk_kernel, npix, spec.coef_array(), flat, ptr, st, lams, radius, tau,
                   out, chunk=256)
        mask |= _changes(out.reshape(-1, grid.ny, grid.nx))
    return mask


def type_change_locus(spec: FamilySpec, mu: WordMeasure, grid: ParamGrid, n_max: int, m: int,
                      seed: int = 0, tau: float = DEFAULT_TAU) -> np.ndarray:
    """Pixels where some sampled ``l_k`` (``k <= n_max``) changes type against a neighbour.

    A pixel counts as non-loxodromic for a word when the linearization of
    ``tr^2`` over the pixel's circumscribed disk meets ``[0, 4]``; a bare
    centre-point test would miss loci that are curves.
    """
    if n_max < 1 or m < 1:
        raise ValueError("n_max and m must be positive")
    steps = WalkSampler(mu, seed, 0).step_indices(m, n_max)
    return _type_mask(spec, mu, grid, steps, tau)


def type_change_words(spec: FamilySpec, words: Sequence[Word], grid: ParamGrid,
                      tau: float = DEFAULT_TAU) -> np.ndarray:
    """:func:`type_change_locus` for an explicit list of words."""
    mu = WordMeasure.uniform(list(words))
    steps = np.arange(len(words), dtype=np.int64)[:, None]
    return _type_mask(spec, mu, grid, steps, tau)


# -------------------------------------------------------------- statistics

@dataclass(frozen=True)
class EpsRule:
    """``c * n**-rate`` (kind ``"power"``) or ``c * exp(-rate * n)`` (kind ``"exp"``)."""

    kind: str = "power"
    rate: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.kind not in ("power", "exp"):
            raise ValueError("eps rule kind must be 'power' or 'exp'")
        if not (self.rate > 0 and self.c > 0):
            raise ValueError("eps rule needs positive rate and constant")

    def __call__(self, n: int) -> float:
        if self.kind == "power":
            return self.c * float(n) ** -self.rate
        return self.c * math.exp(-self.rate * n)


def _prefix_products(spec, mu, lam, steps, n):
    av, als = atom_matrices(spec, mu, lam)
    st = np.ascontiguousarray(steps[:, :n])
    m = st.shape[0]
    E = np.empty((m, 4), complex)
    ls = np.empty(m)
    run_chunks(K.walk_products, m, av, als, st, E, ls, chunk=1024)
    return E, ls


def _check_ns(n_list):
    ns = sorted(int(n) for n in n_list)
    if not ns or ns[0] < 1:
        raise ValueError("n_list needs positive lengths")
    return ns


def delta_statistics(spec: FamilySpec, mu: WordMeasure, lam, n_list, eps_rule: EpsRule, m: int,
                     seed: int = 0) -> DecayTable:
    """Estimates of ``P(delta(rho_lam(l_n)) < eps_n)`` along nested walks.

    An identity product has no separated fixed points and counts as small.
    """
    ns = _check_ns(n_list)
    steps = WalkSampler(mu, seed, 0).step_indices(m, ns[-1])
    rows = []
    for n in ns:
        E, _ = _prefix_products(spec, mu, lam, steps, n)
        d = np.nan_to_num(batch_delta(E), nan=0.0)
        eps = eps_rule(n)
        rows.append(_row(n, int(np.sum(d < eps)), m, eps))
    settings = {**measure_settings(spec, mu), "lam": [complex(lam).real, complex(lam).imag],
                "eps_rule": {"kind": eps_rule.kind, "rate": eps_rule.rate, "c": eps_rule.c},
                "m": m, "seed": seed, "statistic": "delta"}
    return DecayTable(rows, settings)


def reference_chi(spec: FamilySpec, mu: WordMeasure, lam, n_max: int, m: int, seed: int = 0) -> float:
    """Norm estimator at ``4 n_max`` on its own stream, the reference for trace deviations."""
    return chi_norm_estimate(spec, mu, lam, 4 * n_max, m, WalkSampler(mu, seed, 1)).value


def trace_rate_deviations(spec: FamilySpec, mu: WordMeasure, lam, n: int, m: int, seed: int = 0,
                          chi: float | None = None) -> np.ndarray:
    """``|(1/n) log|tr(rho_lam(l_n))| - chi|`` for ``m`` walks."""
    if chi is None:
        chi = reference_chi(spec, mu, lam, n, m, seed)
    steps = WalkSampler(mu, seed, 0).step_indices(m, n)
    E, ls = _prefix_products(spec, mu, lam, steps, n)
    return np.abs(batch_log_abs_trace(E, ls) / n - chi)


def trace_ld_statistics(spec: FamilySpec, mu: WordMeasure, lam, eps: float, n_list, m: int,
                        seed: int = 0) -> DecayTable:
    """Estimates of ``P(|(1/n) log|tr(rho_lam(l_n))| - chi| > eps)`` along nested walks."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    ns = _check_ns(n_list)
    chi = reference_chi(spec, mu, lam, ns[-1], m, seed)
    steps = WalkSampler(mu, seed, 0).step_indices(m, ns[-1])
    rows = []
    for n in ns:
        E, ls = _prefix_products(spec, mu, lam, steps, n)
        dev = np.abs(batch_log_abs_trace(E, ls) / n - chi)
        rows.append(_row(n, int(np.sum(dev > eps)), m, eps))
    settings = {**measure_settings(spec, mu), "lam": [complex(lam).real, complex(lam).imag],
                "eps": eps, "chi_ref": chi, "m": m, "seed": seed, "statistic": "trace_ld"}
    return DecayTable(rows, settings)


def pair_separation_stats(spec: FamilySpec, mu: WordMeasure, lam, gamma: float, n: int, m: int,
                          seed: int = 0) -> float:
    """Fraction of independent pairs ``(l_n, l_n')`` that fail to be two loxodromics whose
    four fixed points are pairwise at chordal distance at least ``exp(-gamma n)``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    E1, l1 = _prefix_products(spec, mu, lam, WalkSampler(mu, seed, 0).step_indices(m, n), n)
    E2, l2 = _prefix_products(spec, mu, lam, WalkSampler(mu, seed, 1).step_indices(m, n), n)
    lox = batch_is_loxodromic(E1, l1) & batch_is_loxodromic(E2, l2)
    x1, y1, x2, y2 = batch_fixed_lifts(E1)
    u1, v1, u2, v2 = batch_fixed_lifts(E2)
    pts = [(x1, y1), (x2, y2), (u1, v1), (u2, v2)]
    dmin = np.full(m, np.inf)
    for i in range(4):
        for j in range(i + 1, 4):
            d = 2.0 * np.abs(pts[i][0] * pts[j][1] - pts[i][1] * pts[j][0])
            dmin = np.minimum(dmin, np.nan_to_num(d, nan=0.0))
    ok = lox & (dmin >= math.exp(-gamma * n))
    return float(np.mean(~ok))



def self_noise_threshold(mf: MassField) -> float:
    """Largest negative cell magnitude: a positive measure's own rounding-noise scale."""
    return float(max(0.0, -mf.cells.min()))
