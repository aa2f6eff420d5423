"""Lyapunov exponent estimators and Lyapunov fields over a parameter grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from ._parallel import run_chunks
from .family import FamilySpec, atom_arrays, atom_matrices, word_codes
from .moebius import RiemannPoint, batch_op_norm_log
from .words import WalkSampler, WordMeasure

# generic base point: away from the fixed points of the presets' generators
DEFAULT_Z0 = RiemannPoint.from_homogeneous(0.6 + 0.2j, 0.5 - 0.3j)


@dataclass(frozen=True)
class ParamGrid:
    """Square-pixel grid of parameters; ``lams()[j, i]`` is the center of pixel (row j, column i).

    Row ``j`` runs along the imaginary axis (bottom to top), column ``i``
    along the real axis.
    """

    center: complex
    width: float
    height: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError("grid needs at least 8x8 pixels")
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        if not math.isclose(self.width / self.nx, self.height / self.ny, rel_tol=1e-9):
            raise ValueError("pixels must be square: width/nx == height/ny")

    @classmethod
    def from_bounds(cls, xmin, xmax, ymin, ymax, nx, ny) -> "ParamGrid":
        return cls(complex(0.5 * (xmin + xmax), 0.5 * (ymin + ymax)), xmax - xmin, ymax - ymin, nx, ny)

    @property
    def h(self) -> float:
        return self.width / self.nx

    @property
    def xmin(self) -> float:
        return self.center.real - 0.5 * self.width

    @property
    def ymin(self) -> float:
        return self.center.imag - 0.5 * self.height

    def xs(self) -> np.ndarray:
        return self.xmin + (np.arange(self.nx) + 0.5) * self.h

    def ys(self) -> np.ndarray:
        return self.ymin + (np.arange(self.ny) + 0.5) * self.h

    def lams(self) -> np.ndarray:
        return self.xs()[None, :] + 1j * self.ys()[:, None]

    def cell_of(self, lam: complex):
        """``(row, col)`` of the pixel containing ``lam`` (may be out of range)."""
        i = math.floor((lam.real - self.xmin) / self.h)
        j = math.floor((lam.imag - self.ymin) / self.h)
        return j, i

    def to_dict(self) -> dict:
        return {"center": [self.center.real, self.center.imag], "width": self.width,
                "height": self.height, "nx": self.nx, "ny": self.ny}


@dataclass
class ScalarField:
    """Real values on a grid, ``-inf`` marking sentinel pixels."""

    grid: ParamGrid
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    @property
    def mask(self) -> np.ndarray:
        return np.isneginf(self.values)


@dataclass(frozen=True)
class ChiEstimate:
    value: float
    stderr: float
    n: int
    m: int


def _mean_stderr(x: np.ndarray):
    m = len(x)
    mean = float(np.mean(x))
    if m < 2:
        return mean, 0.0
    sd = float(np.std(x, ddof=1))
    if np.all(x == x[0]):
        sd = 0.0
    return mean, sd / math.sqrt(m)


def walk_matrices(spec: FamilySpec, mu: WordMeasure, lam, n: int, m: int, sampler: WalkSampler):
    """Scaled entries and log scales of ``rho_lam(l_n)`` for ``m`` fresh walks."""
    av, als = atom_matrices(spec, mu, lam)
    steps = sampler.step_indices(m, n)
    out = np.empty((m, 4), complex)
    ls = np.empty(m)
    run_chunks(K.walk_products, m, av, als, steps, out, ls, chunk=1024)
    return out, ls


def chi_norm_estimate(spec: FamilySpec, mu: WordMeasure, lam, n: int, m: int,
                      sampler: WalkSampler | None = None) -> ChiEstimate:
    """Mean of ``log||rho_lam(l_n)|| / n`` over ``m`` independent walks."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    sampler = sampler or WalkSampler(mu)
    E, ls = walk_matrices(spec, mu, lam, n, m, sampler)
    vals = batch_op_norm_log(E, ls) / n
    mean, se = _mean_stderr(vals)
    return ChiEstimate(mean, se, n, m)


def chi_furstenberg_estimate(spec: FamilySpec, mu: WordMeasure, lam, n_burn: int = 100,
                             n_samples: int = 10_000, sampler: WalkSampler | None = None,
                             z0: RiemannPoint = DEFAULT_Z0, batches: int = 20) -> ChiEstimate:
    """Ergodic average of ``log(|g Z| / |Z|)`` along the projective Markov chain.

    The chain is correlated, so the standard error is taken from ``batches``
    batch means rather than from the raw increments.
    """
    if n_burn < 0 or n_samples < 1:
        raise ValueError("need n_burn >= 0 and n_samples >= 1")
    sampler = sampler or WalkSampler(mu)
    av, als = atom_matrices(spec, mu, lam)
    steps = sampler.step_indices(1, n_burn + n_samples)[0]
    inc = K.furstenberg_chain(av, als, steps, complex(z0.x), complex(z0.y))[n_burn:]
    value = float(np.mean(inc))
    nb = min(batches, n_samples // 2)
    if nb >= 2 and not np.all(inc == inc[0]):
        size = n_samples // nb
        bm = inc[: nb * size].reshape(nb, size).mean(axis=1)
        se = float(np.std(bm, ddof=1)) / math.sqrt(nb)
    else:
        se = 0.0
    return ChiEstimate(value, se, n_burn + n_samples, 1)


def chi_at(spec: FamilySpec, mu: WordMeasure, lams, n: int, m: int, seed: int = 0) -> np.ndarray:
    """The shared-words function ``lam -> (1/(n m)) sum_i log||rho_lam(w_i)||`` at arbitrary points.

    Uses the same words as :func:`chi_field` with ``shared_words`` for equal
    ``(n, m, seed)``, so it evaluates that field's underlying function off the grid.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    lams = np.asarray(lams, complex)
    flat = np.ascontiguousarray(lams.ravel())
    codes, ptr = word_codes(WalkSampler(mu, seed, 0).walks(m, n))
    npts = flat.size
    out = np.empty(npts)
    lo = np.zeros(npts, np.int64)
    hi = np.full(npts, m, np.int64)
    run_chunks(K.chi_field_kernel, npts, spec.coef_array(), codes, ptr, lo, hi, flat, out, chunk=64)
    return (out / (n * m)).reshape(lams.shape)


def chi_field(spec: FamilySpec, mu: WordMeasure, grid: ParamGrid, n: int, m: int, seed: int = 0,
              shared_words: bool = True) -> ScalarField:
    """``lam -> (1/(n m)) sum_i log||rho_lam(w_i)||`` over sampled words ``w_i ~ mu^n``.

    With ``shared_words`` the same ``m`` words serve every pixel, so the field
    is an average of log-norms of holomorphic matrix families and therefore
    subharmonic.  Otherwise each pixel draws its own words from a stream
    derived from its index.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    meta = {"potential": "chi_norm", "n": n, "m": m, "seed": seed, "shared_words": shared_words}
    if shared_words:
        return ScalarField(grid, chi_at(spec, mu, grid.lams(), n, m, seed), meta)
    lams = np.ascontiguousarray(grid.lams().ravel())
    npix = lams.size
    words = []
    for p in range(npix):
        words.extend(WalkSampler(mu, seed, 1 + p).walks(m, n))
    lo = np.arange(npix, dtype=np.int64) * m
    hi = lo + m
    codes, ptr = word_codes(words)
    out = np.empty(npix)
    run_chunks(K.chi_field_kernel, npix, spec.coef_array(), codes, ptr, lo, hi, lams, out, chunk=64)
    return ScalarField(grid, (out / (n * m)).reshape(grid.ny, grid.nx), meta)


def chi_vector_fields(spec: FamilySpec, mu: WordMeasure, grid: ParamGrid, ns, m: int, seed: int = 0,
                      z0: RiemannPoint = DEFAULT_Z0) -> list:
    """Vector-cocycle fields ``(1/n) mean_i log(|rho_lam(l_n^i) Z0| / |Z0|)`` for each ``n`` in ``ns``.

    All fields share the same ``m`` walks; the walk for a larger ``n``
    extends the one for a smaller ``n``.
    """
    ns = sorted(int(x) for x in ns)
    if ns[0] < 1 or m < 1:
        raise ValueError("n and m must be positive")
    steps = WalkSampler(mu, seed, 0).step_indices(m, ns[-1])
    flat, ptr = atom_arrays(spec, mu)
    lams = np.ascontiguousarray(grid.lams().ravel())
    npix = lams.size
    cps = np.array(ns, np.int64)
    out = np.empty((len(ns), npix))
    run_chunks(K.vector_walk_kernel, npix, spec.coef_array(), flat, ptr, steps,
               complex(z0.x), complex(z0.y), cps, lams, out, chunk=16)
    fields = []
    for j, n in enumerate(ns):
        meta = {"potential": "chi_vector", "n": n, "m": m, "seed": seed, "shared_words": True}
        fields.append(ScalarField(grid, (out[j] / (n * m)).reshape(grid.ny, grid.nx), meta))
    return fields
