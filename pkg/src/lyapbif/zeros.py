"""Zeros of holomorphic functions in a box: argument-principle counts and Newton polishing.

A *jet function* maps an array of parameters to ``(f, df/dlam)``.  Values may
carry any positive real factor that depends on the point (the trace kernels
drop ``exp(2 log_scale)`` when it would overflow): winding numbers and the
Newton ratio ``f / f'`` are unaffected.

Many independent problems are solved together.  Internally every function is
a batch jet ``F(pid, lam) -> (f, df)`` where ``pid`` selects the problem.

Strategy per problem:

1. Count the zeros ``N`` in the root box.
2. Newton with implicit deflation (already found roots are divided out of
   ``f'/f``) from spread-out seeds, until the found roots inside the box
   account for ``N``.
3. Put a disjoint disk inside the box around each group of found roots and
   take contour moments there (Delves-Lyness): the winding number gives the
   zero count of the disk and the power sums give the zeros themselves.
   Disk counts summing to ``N`` prove that nothing was missed.  Zeros that
   coincide up to rounding noise are reported once, at their centroid, with
   the winding count as multiplicity.
4. Problems that fail any of this go through quadtree subdivision, which
   stops once a box's circumscribed circle can be solved from its moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import _kernels as K
from ._parallel import run_chunks
from .errors import BoundaryZero
from .family import FamilySpec, Window, word_codes
from .potential import constant_commutator, constant_trace
from .words import Word

SIDE_START = 64
SIDE_MAX = 4096  # 4 * 4096 = 2**14 boundary points
JIGGLE = 0.0618034
MAX_JIGGLE = 8
CLUSTER_REL = 1e-7
NEWTON_ITERS = 80
CHUNK = 256
MAX_LOCAL = 8  # largest zero count resolved from contour moments
MOMENT_NOISE = 1e-12  # assumed relative accuracy of contour moments

JetFunction = Callable[[np.ndarray], tuple]


@dataclass(frozen=True)
class Box:
    center: complex
    half_width: float
    half_height: float

    def __post_init__(self):
        if not (self.half_width > 0 and self.half_height > 0):
            raise ValueError("box dimensions must be positive")

    @classmethod
    def from_bounds(cls, xmin, xmax, ymin, ymax) -> "Box":
        return cls(complex(0.5 * (xmin + xmax), 0.5 * (ymin + ymax)), 0.5 * (xmax - xmin), 0.5 * (ymax - ymin))

    @property
    def diameter(self) -> float:
        return 2.0 * math.hypot(self.half_width, self.half_height)

    def contains(self, z) -> bool:
        return (abs(z.real - self.center.real) < self.half_width
                and abs(z.imag - self.center.imag) < self.half_height)

    def shrunk(self, margin: float) -> "Box":
        return Box(self.center, self.half_width - margin, self.half_height - margin)


class ZeroPoint(NamedTuple):
    lam: complex
    mult: int
    residual: float


@dataclass
class PointCloud:
    """Located zeros with multiplicities, sorted by real then imaginary part."""

    points: tuple = ()
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = tuple(sorted(self.points, key=lambda p: (p.lam.real, p.lam.imag)))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def total_multiplicity(self) -> int:
        return sum(p.mult for p in self.points)

    def expanded(self) -> np.ndarray:
        """Each location repeated by its multiplicity."""
        return np.array([p.lam for p in self.points for _ in range(p.mult)], complex)

    def to_json(self) -> list:
        return [{"re": p.lam.real, "im": p.lam.imag, "mult": p.mult, "residual": p.residual}
                for p in self.points]


def polynomial_jet(coef_ascending) -> JetFunction:
    """Jet function of a polynomial given by ascending coefficients."""
    c = np.asarray(coef_ascending, complex)
    dc = np.polynomial.polynomial.polyder(c) if len(c) > 1 else np.zeros(1, complex)

    def f(z):
        z = np.asarray(z, complex)
        return np.polynomial.polynomial.polyval(z, c), np.polynomial.polynomial.polyval(z, dc)

    return f


# ------------------------------------------------------------------ counting

def _boundary(c, hw, hh, side):
    """Counter-clockwise boundary samples, ``side`` per edge, starting at the lower-left corner."""
    u = np.arange(side) / side
    c, hw, hh = c[:, None], hw[:, None], hh[:, None]
    bottom = c - hw - 1j * hh + 2 * hw * u
    right = c + hw - 1j * hh + 2j * hh * u
    top = c + hw + 1j * hh - 2 * hw * u
    left = c - hw + 1j * hh - 2j * hh * u
    return np.concatenate([bottom, right, top, left], axis=1)


def _windings(F, pid, c, hw, hh):
    """Winding numbers of ``F`` around boxes; ``ok`` is False where the boundary test failed.

    Sampling doubles per box until every phase increment is below pi/2.
    """
    n = len(pid)
    wind = np.zeros(n, np.int64)
    ok = np.zeros(n, bool)
    todo = np.arange(n)
    side = SIDE_START
    while todo.size and side <= SIDE_MAX:
        z = _boundary(c[todo], hw[todo], hh[todo], side)
        v, _ = F(np.repeat(pid[todo], z.shape[1]), z.ravel())
        v = v.reshape(z.shape)
        a = np.abs(v)
        bad = ~np.all(np.isfinite(v) & (a > 0), axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = v / a
        d = np.angle(np.roll(u, -1, axis=1) * np.conj(u))
        fine = ~bad & (np.max(np.abs(d), axis=1) < 0.5 * math.pi)
        wind[todo[fine]] = np.rint(d[fine].sum(axis=1) / (2 * math.pi)).astype(np.int64)
        ok[todo[fine]] = True
        todo = todo[~bad & ~fine]
        side *= 2
    return wind, ok


def _root_counts(F, pid, c, hw, hh):
    """Counts for root boxes, expanding a failed box by ``1 + 2^-k * JIGGLE`` (k = attempt)."""
    hw = np.array(hw, float)
    hh = np.array(hh, float)
    wind, ok = _windings(F, pid, c, hw, hh)
    for k in range(MAX_JIGGLE):
        if ok.all():
            break
        bad = ~ok
        fac = 1.0 + 2.0 ** -k * JIGGLE
        hw[bad] *= fac
        hh[bad] *= fac
        w, o = _windings(F, pid[bad], c[bad], hw[bad], hh[bad])
        wind[bad] = w
        ok[bad] = o
    if not ok.all():
        raise BoundaryZero(f"zero on the root box boundary persists after {MAX_JIGGLE} jiggles "
                           f"(problem {int(pid[~ok][0])})")
    return wind, hw, hh


# ------------------------------------------------------------------- Newton

def _newton(F, pid, z, mult, scale, roots=None, accept=1e-7):
    """Vectorized (deflated, multiplicity-weighted) Newton; returns ``(z, converged)``.

    ``roots`` is a ``(len(z), L)`` array of previously found roots (NaN padded)
    that are divided out of ``f'/f``.  Iterates whose last step stays above
    the strict threshold but below ``accept`` times the scale (rounding noise
    near multiple roots) also count as converged.
    """
    z = z.copy()
    conv = np.zeros(len(z), bool)
    live = np.ones(len(z), bool)
    last = np.full(len(z), np.inf)
    for _ in range(NEWTON_ITERS):
        idx = np.nonzero(live & ~conv)[0]
        if idx.size == 0:
            break
        v, dv = F(pid[idx], z[idx])
        zero = v == 0
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            q = dv / v
            if roots is not None:
                diff = z[idx, None] - roots[idx]
                q = q - np.nansum(1.0 / diff, axis=1)
            step = mult[idx] / q
        step[zero] = 0
        bad = ~np.isfinite(step)
        z[idx] = np.where(bad, z[idx], z[idx] - step)
        last[idx] = np.abs(step)
        done = np.abs(step) <= 1e-14 * (np.abs(z[idx]) + scale[idx])
        conv[idx[done & ~bad]] = True
        lost = bad | (np.abs(z[idx]) > 1e8 * (1 + scale[idx]))
        live[idx[lost & ~done]] = False
    conv |= last <= accept * (np.abs(z) + scale)
    return z, conv & live


def _residuals(F, pid, z):
    v, _ = F(pid, z)
    return np.abs(v)


# ------------------------------------------------------------ contour moments

def _disks(F, pid, c, rho):
    """Winding numbers and normalized power sums of the zeros inside circles.

    ``mom[i, k]`` approximates ``sum over enclosed zeros r of ((r - c_i) / rho_i)**k``
    for ``k = 0..MAX_LOCAL``, by the trapezoidal rule for
    ``(1/2 pi i) * contour integral of (z - c)^k f'/f``.  Sampling doubles until
    phase increments stay below pi/2 and the zeroth moment is an integer.
    """
    n = len(pid)
    wind = np.zeros(n, np.int64)
    ok = np.zeros(n, bool)
    mom = np.zeros((n, MAX_LOCAL + 1), complex)
    todo = np.arange(n)
    q = SIDE_START
    while todo.size and q <= 4 * SIDE_MAX:
        u = np.exp(2j * math.pi * np.arange(q) / q)
        powers = u[:, None] ** np.arange(1, MAX_LOCAL + 2)
        z = c[todo, None] + rho[todo, None] * u
        v, dv = F(np.repeat(pid[todo], q), z.ravel())
        v = v.reshape(z.shape)
        dv = dv.reshape(z.shape)
        a = np.abs(v)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            bad = ~np.all(np.isfinite(v) & np.isfinite(dv) & (a > 0), axis=1)
            un = v / a
            m = (rho[todo, None] / q) * ((dv / v) @ powers)
        d = np.angle(np.roll(un, -1, axis=1) * np.conj(un))
        w = np.rint(d.sum(axis=1) / (2 * math.pi))
        fine = ~bad & (np.max(np.abs(d), axis=1) < 0.5 * math.pi) & (np.abs(m[:, 0] - w) < 1e-4)
        wind[todo[fine]] = w[fine].astype(np.int64)
        mom[todo[fine]] = m[fine]
        ok[todo[fine]] = True
        todo = todo[~bad & ~fine]
        q *= 2
    return wind, ok, mom


def _local_roots(mom, w):
    """Roots (normalized to the disk) of the monic polynomial with power sums ``mom[1..w]``."""
    if w == 1:
        return np.array([mom[1]])
    if w == 2:
        s = mom[1]
        d = np.sqrt(2.0 * mom[2] - s * s + 0j)
        return np.array([0.5 * (s + d), 0.5 * (s - d)])
    e = [1.0 + 0j]
    for k in range(1, w + 1):
        e.append(sum((-1) ** (i - 1) * e[k - i] * mom[i] for i in range(1, k + 1)) / k)
    return np.roots([(-1) ** k * e[k] for k in range(w + 1)])


def _merge_clusters(zeta):
    """Group normalized roots whose spread is at the moment-noise level for their size.

    ``m`` coincident zeros perturbed by a relative error ``eta`` in the power
    sums spread by about ``eta**(1/m)``; such groups become one point (the
    centroid, which is well conditioned) with multiplicity ``m``.  Larger
    groups are tried first.
    """
    pts = [complex(z) for z in zeta]
    out = []
    for m in range(len(pts), 1, -1):
        tau = 2.0 * MOMENT_NOISE ** (1.0 / m)
        for comp in _group(pts, 2.0 * tau):
            cen = sum(comp) / len(comp)
            if len(comp) == m and max(abs(x - cen) for x in comp) <= tau:
                out.append((cen, m))
                for x in comp:
                    pts.remove(x)
    return out + [(z, 1) for z in pts]


def _resolve_disks(F, pid, c, rho, wind, mom):
    """Zero points inside each disk, or None where the local solve is not trustworthy."""
    out = [None] * len(pid)
    simple_z, simple_owner, simple_sep = [], [], []
    for i in range(len(pid)):
        w = int(wind[i])
        if w == 0:
            out[i] = []
            continue
        if w > MAX_LOCAL:
            continue
        zeta = _local_roots(mom[i], w)
        if not np.all(np.abs(zeta) < 1.0):
            continue
        pts = _merge_clusters(zeta)
        out[i] = []
        locs = np.array([z for z, _ in pts])
        for k, (z, m) in enumerate(pts):
            lam = complex(c[i] + rho[i] * z)
            if m == 1:
                others = np.delete(locs, k)
                sep = np.min(np.abs(others - z)) if others.size else 1.0
                sep = min(sep, 1.0 - abs(z))
                simple_z.append(lam)
                simple_owner.append(i)
                simple_sep.append(0.25 * sep * rho[i])
            else:
                out[i].append((lam, m))
    if simple_z:
        z0 = np.array(simple_z)
        owner = np.array(simple_owner, np.int64)
        zp, conv = _newton(F, pid[owner], z0, np.ones(len(z0)), rho[owner])
        good = conv & (np.abs(zp - z0) <= np.array(simple_sep))
        for k in range(len(z0)):
            out[owner[k]].append((complex(zp[k] if good[k] else z0[k]), 1))
    return out


def _points(F, p, located):
    """Attach residuals ``|f|`` to ``(lam, mult)`` pairs of one problem."""
    if not located:
        return []
    z = np.array([lam for lam, _ in located])
    res = _residuals(F, np.full(len(z), p, np.int64), z)
    return [ZeroPoint(lam, m, float(r)) for (lam, m), r in zip(located, res)]


# ---------------------------------------------------------------- fast path

def _discover(F, pid, c, hw, hh, N):
    """Newton with implicit deflation from spread-out seeds; returns found roots per problem."""
    P = len(pid)
    diam = 2.0 * np.hypot(hw, hh)
    L = int(N.max()) + 5
    found = np.full((P, L), np.nan + 0j)
    nfound = np.zeros(P, np.int64)
    inside = np.zeros(P, np.int64)
    stuck = np.zeros(P, bool)
    golden = math.pi * (3.0 - math.sqrt(5.0))
    for r in range(L - 1):
        act = np.nonzero(~stuck & (inside < N) & (nfound < L - 1))[0]
        if act.size == 0:
            break
        th = golden * r + 0.5
        z0 = c[act] + 0.8 * (hw[act] * math.cos(th) + 1j * hh[act] * math.sin(th))
        z, conv = _newton(F, pid[act], z0, np.ones(act.size), diam[act], found[act], accept=1e-4)
        stuck[act[~conv]] = True
        ok = act[conv]
        zc = z[conv]
        found[ok, nfound[ok]] = zc
        nfound[ok] += 1
        ins = (np.abs(zc.real - c[ok].real) < hw[ok]) & (np.abs(zc.imag - c[ok].imag) < hh[ok])
        inside[ok[ins]] += 1
    return [found[p, : nfound[p]] for p in range(P)]


def _group(pts, tol):
    """Single-linkage groups of points closer than ``tol``."""
    groups = []
    for z in pts:
        hits = [g for g in groups if min(abs(z - x) for x in g) <= tol]
        merged = [z]
        for g in hits:
            merged.extend(g)
            groups.remove(g)
        groups.append(merged)
    return groups


def _fast_path(F, pid, c, hw, hh, N):
    """Points per problem, or None where the problem needs subdivision."""
    P = len(pid)
    diam = 2.0 * np.hypot(hw, hh)
    found = _discover(F, pid, c, hw, hh, N)
    d_pid, d_c, d_rho, d_owner = [], [], [], []
    failed = np.zeros(P, bool)
    for p in range(P):
        groups = _group(found[p], 1e-3 * diam[p])
        cen = np.array([sum(g) / len(g) for g in groups])
        disks = []
        for g, z in zip(groups, cen):
            if not (abs(z.real - c[p].real) < hw[p] and abs(z.imag - c[p].imag) < hh[p]):
                continue
            others = cen[cen != z]
            gap = np.min(np.abs(others - z)) if others.size else np.inf
            edge = min(hw[p] - abs(z.real - c[p].real), hh[p] - abs(z.imag - c[p].imag))
            spread = max(abs(x - z) for x in g)
            rho = min(0.45 * gap, 0.99 * edge, 0.1 * diam[p])
            if rho <= 2.0 * spread:
                failed[p] = True
                break
            disks.append((z, rho))
        if failed[p]:
            continue
        for z, rho in disks:
            d_pid.append(pid[p])
            d_c.append(z)
            d_rho.append(rho)
            d_owner.append(p)
    out = [[] for _ in range(P)]
    if d_pid:
        d_pid = np.array(d_pid, np.int64)
        d_c = np.array(d_c, complex)
        d_rho = np.array(d_rho)
        d_owner = np.array(d_owner, np.int64)
        wind, ok, mom = _disks(F, d_pid, d_c, d_rho)
        total = np.bincount(d_owner, weights=wind, minlength=P)
        failed |= np.bincount(d_owner, weights=~ok, minlength=P) > 0
        failed |= total != N
        sel = ~failed[d_owner]
        res = _resolve_disks(F, d_pid[sel], d_c[sel], d_rho[sel], wind[sel], mom[sel])
        for p, r in zip(d_owner[sel], res):
            if r is None:
                failed[p] = True
            elif not failed[p]:
                out[p].extend(r)
    else:
        failed |= N != 0
    keep = [p for p in range(P) if not failed[p]]
    flat = [(p, lam, m) for p in keep for lam, m in out[p]]
    res = _residuals(F, np.array([pid[p] for p, _, _ in flat], np.int64),
                     np.array([lam for _, lam, _ in flat], complex)) if flat else []
    pts = [None] * P
    for p in keep:
        pts[p] = []
    for (p, lam, m), r in zip(flat, res):
        pts[p].append(ZeroPoint(lam, m, float(r)))
    return pts


# ------------------------------------------------------------- subdivision

def _single(F, p):
    return lambda pid, z: F(np.full(len(z), p, np.int64), z)


def _subdivide(f1, c, hw, hh, w, thr, out, stats):
    """Quadtree search of a box known to contain ``w >= 1`` zeros.

    A box is finished once its circumscribed circle holds exactly its own
    ``w`` zeros and ``w`` is small enough to solve from contour moments.
    """
    zero = np.zeros(1, np.int64)
    rho = math.hypot(hw, hh) * (1 + 1e-9)
    wd, ok, mom = _disks(f1, zero, np.array([c]), np.array([rho]))
    if ok[0] and wd[0] == w and w <= MAX_LOCAL:
        r = _resolve_disks(f1, zero, np.array([c]), np.array([rho]), wd, mom)[0]
        if r is not None:
            out.extend(_points(f1, 0, r))
            return
    if 2 * rho < thr:
        stats["unconverged"] += 1
        out.extend(_points(f1, 0, [(complex(c), w)]))
        return
    for k in range(MAX_JIGGLE):
        off = 0.0 if k == 0 else (-1) ** k * 2.0 ** -k * JIGGLE
        sx = c.real + off * hw
        sy = c.imag + off * hh
        x0, x1 = c.real - hw, c.real + hw
        y0, y1 = c.imag - hh, c.imag + hh
        quads = [(x0, sx, y0, sy), (sx, x1, y0, sy), (x0, sx, sy, y1), (sx, x1, sy, y1)]
        cc = np.array([complex(0.5 * (a + b), 0.5 * (e + g)) for a, b, e, g in quads])
        hws = np.array([0.5 * (b - a) for a, b, _, _ in quads])
        hhs = np.array([0.5 * (g - e) for _, _, e, g in quads])
        ws, oks = _windings(f1, np.zeros(4, np.int64), cc, hws, hhs)
        if oks.all() and ws.sum() == w and (ws >= 0).all():
            for j in range(4):
                if ws[j] > 0:
                    _subdivide(f1, cc[j], hws[j], hhs[j], int(ws[j]), thr, out, stats)
            return
    raise BoundaryZero("zero on a subdivision line persists after jiggling")


# ------------------------------------------------------------------ drivers

def _solve(F, nprob: int, boxes: Sequence[Box]) -> list:
    """Locate zeros for problems ``0..nprob-1``; ``boxes[p]`` is the root box of problem ``p``."""
    clouds = []
    for lo in range(0, nprob, CHUNK):
        hi = min(nprob, lo + CHUNK)
        pid = np.arange(lo, hi, dtype=np.int64)
        c = np.array([boxes[p].center for p in pid], complex)
        hw = np.array([boxes[p].half_width for p in pid])
        hh = np.array([boxes[p].half_height for p in pid])
        N, hw, hh = _root_counts(F, pid, c, hw, hh)
        res = [[] for _ in pid]
        sub = np.nonzero(N > 0)[0]
        if sub.size:
            for j, pts in zip(sub, _fast_path(F, pid[sub], c[sub], hw[sub], hh[sub], N[sub])):
                res[j] = pts
        for j in range(len(pid)):
            stats = {"unconverged": 0}
            subdivided = res[j] is None
            if subdivided:
                res[j] = []
                thr = CLUSTER_REL * 2 * math.hypot(hw[j], hh[j])
                _subdivide(_single(F, pid[j]), c[j], hw[j], hh[j], int(N[j]), thr, res[j], stats)
            meta = {"count": int(N[j]), "subdivided": subdivided, **stats,
                    "box": [float(c[j].real), float(c[j].imag), float(hw[j]), float(hh[j])]}
            clouds.append(PointCloud(tuple(res[j]), meta))
    return clouds


def _as_batch(f: JetFunction):
    def F(pid, z):
        v, dv = f(np.asarray(z, complex))
        return np.asarray(v, complex), np.asarray(dv, complex)
    return F


def count_zeros_box(f: JetFunction, box: Box) -> int:
    """Number of zeros of ``f`` inside ``box`` counted with multiplicity."""
    F = _as_batch(f)
    N, _, _ = _root_counts(F, np.zeros(1, np.int64), np.array([box.center]),
                           np.array([box.half_width]), np.array([box.half_height]))
    return int(N[0])


def locate_zeros(f: JetFunction, box: Box, tol: float = 1e-10) -> PointCloud:
    """Zeros of a jet function in ``box`` with multiplicities and residuals ``|f|``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    cloud = _solve(_as_batch(f), 1, [box])[0]
    return _flag_tol(cloud, tol)


def _flag_tol(cloud: PointCloud, tol: float) -> PointCloud:
    cloud.metadata["tol"] = tol
    cloud.metadata["above_tol"] = sum(1 for p in cloud.points if p.mult == 1 and p.residual > tol)
    return cloud


def _trace_batch(spec: FamilySpec, words: Sequence[Word], t: complex):
    codes, ptr = word_codes(words)
    coef = spec.coef_array()
    t = complex(t)
    exact4 = t == 4

    def F(pid, z):
        z = np.ascontiguousarray(z, complex)
        v = np.empty(z.size, complex)
        dv = np.empty(z.size, complex)
        run_chunks(K.trace_points, z.size, coef, codes, ptr, np.ascontiguousarray(pid, np.int64),
                   z, t, exact4, v, dv, chunk=8192)
        return v, dv

    return F


def _commutator_batch(spec: FamilySpec, pairs):
    cw, pw = word_codes([w for w, _ in pairs])
    ch, ph = word_codes([h for _, h in pairs])
    coef = spec.coef_array()

    def F(pid, z):
        z = np.ascontiguousarray(z, complex)
        v = np.empty(z.size, complex)
        dv = np.empty(z.size, complex)
        run_chunks(K.commutator_points, z.size, coef, cw, pw, ch, ph,
                   np.ascontiguousarray(pid, np.int64), z, v, dv, chunk=8192)
        return v, dv

    return F


def _solve_nonconstant(F, constant_flags, box, tol, extra_meta):
    idx = [i for i, cst in enumerate(constant_flags) if not cst]
    clouds = [PointCloud((), {"constant": True, **extra_meta}) for _ in constant_flags]
    if idx:
        ids = np.asarray(idx, np.int64)

        def G(pid, z):
            return F(ids[pid], z)
        solved = _solve(G, len(idx), [box] * len(idx))
        for i, cl in zip(idx, solved):
            cl.metadata.update({"constant": False, **extra_meta})
            clouds[i] = _flag_tol(cl, tol)
    return clouds


def trace_loci(spec: FamilySpec, words: Sequence[Word], t: complex, box: Box, tol: float = 1e-10) -> list:
    """:func:`trace_locus` for many words at once (same ``t`` and box)."""
    t = complex(t)
    F = _trace_batch(spec, words, t)
    flags = [constant_trace(spec, w, box_window(box)) is not None for w in words]
    return _solve_nonconstant(F, flags, box, tol, {"t": [t.real, t.imag]})


def trace_locus(spec: FamilySpec, w: Word, t: complex, box: Box, tol: float = 1e-10) -> PointCloud:
    """Zeros of ``lam -> tr^2(rho_lam(w)) - t`` in ``box``; empty when the trace is constant."""
    return trace_loci(spec, [w], t, box, tol)[0]


def collision_loci(spec: FamilySpec, pairs, box: Box, tol: float = 1e-10) -> list:
    F = _commutator_batch(spec, pairs)
    flags = [constant_commutator(spec, w, h, box_window(box)) is not None for w, h in pairs]
    return _solve_nonconstant(F, flags, box, tol, {})


def collision_locus(spec: FamilySpec, w: Word, h: Word, box: Box, tol: float = 1e-10) -> PointCloud:
    """Parameters where ``rho_lam(w)`` and ``rho_lam(h)`` share a fixed point: zeros of ``tr[w, h] - 2``."""
    return collision_loci(spec, [(w, h)], box, tol)[0]


def box_window(box: Box) -> Window:
    return Window(box.center, 2 * box.half_width, 2 * box.half_height)
