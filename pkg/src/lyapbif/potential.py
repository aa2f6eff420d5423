"""Discrete dd^c and the explicit potentials of trace, commutator and fixed-point loci.

Normalization: ``ddc(log|lam - lam0|)`` is a unit point mass.  On a grid of
pixel size ``h`` the mass of an interior cell is
``(u_E + u_W + u_N + u_S - 4 u_C) / (2 pi)``; the boundary ring carries no
mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SentinelCluster
from .family import FamilySpec, Window, evaluate_grid
from .lyapunov import ParamGrid, ScalarField, chi_field
from .moebius import RiemannPoint, batch_discriminant
from .words import WalkSampler, Word, WordMeasure

TWO_PI = 2.0 * math.pi


@dataclass
class MassField:
    """Cell masses on the interior ``(ny-2) x (nx-2)`` cells of a grid."""

    grid: ParamGrid
    cells: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return float(np.sum(self.cells))

    def full(self) -> np.ndarray:
        """Cells embedded in an ``ny x nx`` array with a zero boundary ring."""
        out = np.zeros((self.grid.ny, self.grid.nx))
        out[1:-1, 1:-1] = self.cells
        return out

    def summary(self) -> dict:
        c = self.cells
        pos = float(np.sum(c[c > 0]))
        neg = float(np.sum(-c[c < 0]))
        return {"total": self.total, "min": float(c.min()), "max": float(c.max()),
                "negative_fraction": neg / pos if pos > 0 else 0.0}


def _laplacian(u):
    return (u[1:-1, 2:] + u[1:-1, :-2] + u[2:, 1:-1] + u[:-2, 1:-1] - 4.0 * u[1:-1, 1:-1]) / TWO_PI


def ddc(f: ScalarField) -> MassField:
    """Discrete dd^c of a scalar field.

    Isolated ``-inf`` pixels get the boundary flux of their 3x3 block minus
    the masses of the four diagonal neighbours; the four edge neighbours get
    zero.  Sentinels within two pixels of each other, or within two pixels of
    the grid edge, raise :class:`SentinelCluster`.
    """
    u = np.asarray(f.values, dtype=float)
    mask = np.isneginf(u)
    ny, nx = u.shape
    if not mask.any():
        return MassField(f.grid, _laplacian(u), dict(f.metadata))
    js, is_ = np.nonzero(mask)
    if mask.all():
        raise SentinelCluster("field is -inf everywhere (identically degenerate potential)")
    if js.min() < 2 or is_.min() < 2 or js.max() > ny - 3 or is_.max() > nx - 3:
        raise SentinelCluster("sentinel pixel within two pixels of the grid boundary")
    pts = np.stack([js, is_], axis=1)
    if len(pts) > 1:
        d = np.max(np.abs(pts[:, None, :] - pts[None, :, :]), axis=2)
        np.fill_diagonal(d, 99)
        if d.min() <= 2:
            raise SentinelCluster("two sentinel pixels within distance 2")
    v = np.where(mask, 0.0, u)
    cells = _laplacian(v)
    for j, i in pts:
        blk = v[j - 1: j + 2, i - 1: i + 2]
        flux = (np.sum(v[j - 2, i - 1: i + 2] - blk[0]) + np.sum(v[j + 2, i - 1: i + 2] - blk[2])
                + np.sum(v[j - 1: j + 2, i - 2] - blk[:, 0]) + np.sum(v[j - 1: j + 2, i + 2] - blk[:, 2]))
        cj, ci = j - 1, i - 1  # interior-cell coordinates
        diag = cells[cj - 1, ci - 1] + cells[cj - 1, ci + 1] + cells[cj + 1, ci - 1] + cells[cj + 1, ci + 1]
        for dj, di in ((0, 1), (0, -1), (1, 0), (-1, 0)):
            cells[cj + dj, ci + di] = 0.0
        cells[cj, ci] = flux / TWO_PI - diag
    return MassField(f.grid, cells, dict(f.metadata))


def _on_grid(spec, w, grid, jet=False):
    return evaluate_grid(spec, w, grid.lams(), jet=jet)


def _log_abs(z):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(z))


def graph_potential_field(spec: FamilySpec, w: Word, z0: RiemannPoint, grid: ParamGrid) -> ScalarField:
    """``log(|rho_lam(w) Z0| / |Z0|)``."""
    E, ls, _ = _on_grid(spec, w, grid)
    x, y = z0.x, z0.y
    v = ls + _log_abs(np.hypot(np.abs(E[..., 0] * x + E[..., 1] * y), np.abs(E[..., 2] * x + E[..., 3] * y)))
    return ScalarField(grid, v, {"potential": "graph", "word": repr(w.codes.tolist())})


def trace_values_scaled(E, ls, t: complex):
    """``(tr^2 - t) * exp(-2 ls)`` from scaled entries, exact for ``t = 4``."""
    if t == 4:
        return batch_discriminant(E)
    with np.errstate(under="ignore"):
        return (E[..., 0] + E[..., 3]) ** 2 - t * np.exp(-2.0 * ls)


def trace_potential_field(spec: FamilySpec, w: Word, t: complex, grid: ParamGrid) -> ScalarField:
    """``(1/2) log|tr^2(rho_lam(w)) - t|`` with exact zeros flagged ``-inf``.

    A word whose ``tr^2`` is constant and equal to ``t`` gives an all-sentinel field.
    """
    t = complex(t)
    cst = constant_trace(spec, w, grid)
    if cst is not None and abs(cst - t) <= 1e-10 * max(1.0, abs(t)):
        return ScalarField(grid, np.full((grid.ny, grid.nx), -np.inf), {"potential": "trace", "t": [t.real, t.imag]})
    E, ls, _ = _on_grid(spec, w, grid)
    v = ls + 0.5 * _log_abs(trace_values_scaled(E, ls, t))
    return ScalarField(grid, v, {"potential": "trace", "t": [complex(t).real, complex(t).imag]})


def commutator_values_scaled(E1, E2):
    """``-det(MN - NM)`` from scaled entries: ``(tr[M, N] - 2) * exp(-2(ls_M + ls_N))``."""
    a, b, c, d = (E1[..., k] for k in range(4))
    e, f, g, h = (E2[..., k] for k in range(4))
    c11 = b * g - f * c
    c12 = a * f + b * h - e * b - f * d
    c21 = c * e + d * g - g * a - h * c
    c22 = c * f - g * b
    return -(c11 * c22 - c12 * c21)


def commutator_potential_field(spec: FamilySpec, w: Word, h: Word, grid: ParamGrid) -> ScalarField:
    """``log|tr[rho_lam(w), rho_lam(h)] - 2|``; all sentinels when it vanishes identically."""
    cst = constant_commutator(spec, w, h, grid)
    if cst is not None and abs(cst) <= 1e-10:
        return ScalarField(grid, np.full((grid.ny, grid.nx), -np.inf), {"potential": "commutator"})
    E1, l1, _ = _on_grid(spec, w, grid)
    E2, l2, _ = _on_grid(spec, h, grid)
    v = 2.0 * (l1 + l2) + _log_abs(commutator_values_scaled(E1, E2))
    return ScalarField(grid, v, {"potential": "commutator"})


def fixpoint_values(E, ls):
    """``log(|b|^2 + |c|^2 + (|d - a|^2 + |tr^2 - 4|) / 2)^(1/2)`` for determinant-one matrices."""
    b2 = np.abs(E[..., 1]) ** 2
    c2 = np.abs(E[..., 2]) ** 2
    da = np.abs(E[..., 3] - E[..., 0]) ** 2
    disc = np.abs(batch_discriminant(E))
    with np.errstate(divide="ignore"):
        return ls + 0.5 * np.log(b2 + c2 + 0.5 * (da + disc))


def fixpoint_potential_field(spec: FamilySpec, w: Word, grid: ParamGrid) -> ScalarField:
    E, ls, _ = _on_grid(spec, w, grid)
    return ScalarField(grid, fixpoint_values(E, ls), {"potential": "fixpoint"})


_PROBES = ((0.3141, -0.2718), (-0.4142, 0.1732), (0.1618, 0.4472))


def probe_points(window) -> np.ndarray:
    """Three fixed pseudo-random parameters inside a window (grid or family window)."""
    c = window.center
    return np.array([c + u * window.width + 1j * v * window.height for u, v in _PROBES])


def _constant(vals, scale_vals) -> bool:
    if not np.all(np.isfinite(vals)):
        return False
    scale = max(1.0, float(np.max(np.abs(scale_vals))))
    diffs = [abs(vals[i] - vals[j]) for i in range(3) for j in range(i + 1, 3)]
    return max(diffs) < 1e-10 * scale


def constant_trace(spec: FamilySpec, w: Word, window) -> complex | None:
    """The constant value of ``tr^2(rho_lam(w))`` if the three-probe rule detects one, else None."""
    E, ls, _ = evaluate_grid(spec, w, probe_points(window))
    with np.errstate(over="ignore", invalid="ignore"):
        t2 = (E[:, 0] + E[:, 3]) ** 2 * np.exp(2 * ls)
    return complex(t2[0]) if _constant(t2, t2) else None


def constant_commutator(spec: FamilySpec, w: Word, h: Word, window) -> complex | None:
    """Constant value of ``tr[w, h] - 2`` under the three-probe rule, else None."""
    pts = probe_points(window)
    E1, l1, _ = evaluate_grid(spec, w, pts)
    E2, l2, _ = evaluate_grid(spec, h, pts)
    with np.errstate(over="ignore", invalid="ignore"):
        v = commutator_values_scaled(E1, E2) * np.exp(2 * (l1 + l2))
    return complex(v[0]) if _constant(v, np.abs(v) + 2.0) else None


def averaged_potential_field(spec: FamilySpec, mu: WordMeasure, t: complex, grid: ParamGrid,
                             n: int, m: int, seed: int = 0) -> ScalarField:
    """``(1/(2 n m)) sum_i log|tr^2(rho_lam(w_i)) - t|`` over shared words ``w_i ~ mu^n``.

    Words whose trace is constant and within 1 of ``t`` contribute nothing
    (they still count in the normalization ``m``).
    """
    t = complex(t)
    words = WalkSampler(mu, seed, 0).walks(m, n)
    acc = np.zeros((grid.ny, grid.nx))
    skipped = 0
    for w in words:
        cst = constant_trace(spec, w, grid)
        if cst is not None and abs(cst - t) <= 1.0:
            skipped += 1
            continue
        acc += 2.0 * trace_potential_field(spec, w, t, grid).values
    vals = acc / (2.0 * n * m)
    meta = {"potential": "averaged_trace", "t": [t.real, t.imag], "n": n, "m": m, "seed": seed,
            "skipped": skipped}
    return ScalarField(grid, vals, meta)


def bif_measure(spec: FamilySpec, mu: WordMeasure, grid: ParamGrid, n: int, m: int, seed: int = 0) -> MassField:
    """``ddc`` of the shared-words Lyapunov field."""
    mf = ddc(chi_field(spec, mu, grid, n, m, seed, shared_words=True))
    mf.metadata.update({"n": n, "m": m, "seed": seed, "kind": "bif_measure"})
    return mf


def grid_window(grid: ParamGrid) -> Window:
    return Window(grid.center, grid.width, grid.height)
