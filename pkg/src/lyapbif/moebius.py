"""Numerical core for PSL(2, C).

A :class:`MoebiusMap` stores a determinant-one matrix as ``exp(log_scale) * E``
where the entries of ``E`` are kept near unit magnitude.  Norms and traces are
computed in log space so that products of thousands of matrices never
overflow.

Distances on the Riemann sphere use the chordal metric
``d(z, w) = 2|z - w| / sqrt((1 + |z|^2)(1 + |w|^2))`` (diameter 2).
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import IdentityMap

LN2 = math.log(2.0)
DEFAULT_TAU = 1e-9


def _renorm(a: complex, b: complex, c: complex, d: complex, log_scale: float):
    # power-of-two rescaling is exact in binary floating point
    mx = max(abs(a.real), abs(a.imag), abs(b.real), abs(b.imag),
             abs(c.real), abs(c.imag), abs(d.real), abs(d.imag))
    if mx == 0.0 or not math.isfinite(mx):
        raise ValueError("degenerate matrix entries")
    e = math.frexp(mx)[1]
    s = math.ldexp(1.0, -e)
    return a * s, b * s, c * s, d * s, log_scale + e * LN2


@dataclass(frozen=True, eq=False)
class MoebiusMap:
    """Projective class of ``exp(log_scale) * [[a, b], [c, d]]`` in PSL(2, C).

    The scaled entries satisfy ``ad - bc = exp(-2 log_scale)``.  Use
    :meth:`from_matrix` or :meth:`from_scaled` rather than the raw constructor.
    """

    a: complex
    b: complex
    c: complex
    d: complex
    log_scale: float = 0.0

    @classmethod
    def from_scaled(cls, a, b, c, d, log_scale=0.0) -> "MoebiusMap":
        return cls(*_renorm(complex(a), complex(b), complex(c), complex(d), float(log_scale)))

    @classmethod
    def from_matrix(cls, m) -> "MoebiusMap":
        """Normalize any invertible 2x2 complex matrix to determinant one."""
        m = np.asarray(m, dtype=complex)
        a, b, c, d = complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1])
        a, b, c, d, _ = _renorm(a, b, c, d, 0.0)
        det = a * d - b * c
        if det == 0:
            raise ValueError("singular matrix")
        r = cmath.sqrt(det)
        # dividing by sqrt(det) fixes the projective scale: nothing left to carry
        return cls.from_scaled(a / r, b / r, c / r, d / r, 0.0)

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls.from_scaled(1, 0, 0, 1)

    @property
    def entries(self):
        return self.a, self.b, self.c, self.d

    def matrix(self) -> np.ndarray:
        """Determinant-one representative as a numpy array (may overflow for huge maps)."""
        s = math.exp(self.log_scale)
        return np.array([[self.a, self.b], [self.c, self.d]]) * s

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a, self.log_scale)

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return compose(self, other)

    def isclose(self, other: "MoebiusMap", tol: float = 1e-9) -> bool:
        """Projective equality (M and -M are the same map)."""
        diff = self.log_scale - other.log_scale
        if abs(diff) > 60:
            return False
        r = math.exp(diff)
        x = np.array(self.entries) * r
        y = np.array(other.entries)
        scale = max(1.0, float(np.max(np.abs(y))))
        return bool(min(np.max(np.abs(x - y)), np.max(np.abs(x + y))) <= tol * scale)

    def __eq__(self, other):
        if not isinstance(other, MoebiusMap):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class RiemannPoint:
    """Point ``[x : y]`` of the Riemann sphere with a unit-norm lift."""

    x: complex
    y: complex

    @classmethod
    def from_homogeneous(cls, x, y) -> "RiemannPoint":
        x, y = complex(x), complex(y)
        n = math.hypot(abs(x), abs(y))
        if n == 0.0 or not math.isfinite(n):
            raise ValueError("homogeneous coordinates must be finite and not both zero")
        return cls(x / n, y / n)

    @classmethod
    def from_complex(cls, z) -> "RiemannPoint":
        z = complex(z)
        if cmath.isinf(z):
            return cls(1.0 + 0j, 0j)
        return cls.from_homogeneous(z, 1.0)

    @classmethod
    def infinity(cls) -> "RiemannPoint":
        return cls(1.0 + 0j, 0j)

    def to_complex(self):
        """Affine coordinate; returns ``complex('inf')`` at infinity."""
        if self.y == 0:
            return complex(math.inf, 0.0)
        return self.x / self.y

    def isclose(self, other: "RiemannPoint", tol: float = 1e-9) -> bool:
        return chordal(self, other) <= tol

    def __eq__(self, other):
        if not isinstance(other, RiemannPoint):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None


def chordal(p: RiemannPoint, q: RiemannPoint) -> float:
    return 2.0 * abs(p.x * q.y - p.y * q.x)


class MapType(enum.Enum):
    IDENTITY = "identity"
    PARABOLIC = "parabolic"
    ELLIPTIC = "elliptic"
    LOXODROMIC = "loxodromic"


def compose(m: MoebiusMap, n: MoebiusMap) -> MoebiusMap:
    a = m.a * n.a + m.b * n.c
    b = m.a * n.b + m.b * n.d
    c = m.c * n.a + m.d * n.c
    d = m.c * n.b + m.d * n.d
    return MoebiusMap.from_scaled(a, b, c, d, m.log_scale + n.log_scale)


def apply(m: MoebiusMap, z: RiemannPoint) -> RiemannPoint:
    return RiemannPoint.from_homogeneous(m.a * z.x + m.b * z.y, m.c * z.x + m.d * z.y)


def _discriminant(m: MoebiusMap) -> complex:
    # (a-d)^2 + 4bc equals tr^2 - 4 det without the cancellation
    return (m.a - m.d) ** 2 + 4 * m.b * m.c


def _scaled_exp(z: complex, log_factor: float) -> complex:
    """``z * exp(log_factor)``, returning an infinite value instead of raising."""
    if z == 0:
        return 0j
    lg = math.log(abs(z)) + log_factor
    if lg > 709.0:
        return complex(math.inf, 0.0) if z.imag == 0 else complex(
            math.copysign(math.inf, z.real), math.copysign(math.inf, z.imag))
    return z * math.exp(log_factor)


def tr_squared(m: MoebiusMap) -> complex:
    return _scaled_exp((m.a + m.d) ** 2, 2 * m.log_scale)


def tr_squared_minus_4(m: MoebiusMap) -> complex:
    return _scaled_exp(_discriminant(m), 2 * m.log_scale)


def log_abs_trace(m: MoebiusMap) -> float:
    t = abs(m.a + m.d)
    return m.log_scale + math.log(t) if t > 0 else -math.inf


def op_norm_log(m: MoebiusMap) -> float:
    """Log of the largest singular value of the determinant-one representative."""
    a, b, c, d = m.entries
    aa, bb, cc, dd = abs(a) ** 2, abs(b) ** 2, abs(c) ** 2, abs(d) ** 2
    p = aa + bb - cc - dd
    q = a * c.conjugate() + b * d.conjugate()
    s2 = 0.5 * (aa + bb + cc + dd + math.sqrt(p * p + 4 * abs(q) ** 2))
    return m.log_scale + 0.5 * math.log(s2)


def frobenius_log(m: MoebiusMap) -> float:
    """Log of the Hilbert-Schmidt norm of the determinant-one representative."""
    n = sum(abs(x) ** 2 for x in m.entries)
    return m.log_scale + 0.5 * math.log(n)


def is_identity(m: MoebiusMap, tau: float = DEFAULT_TAU) -> bool:
    if m.log_scale > 2.0:
        return False
    s = math.exp(m.log_scale)
    a, b, c, d = (x * s for x in m.entries)
    off = max(abs(b), abs(c))
    return off <= tau and min(max(abs(a - 1), abs(d - 1)), max(abs(a + 1), abs(d + 1))) <= tau


def classify(m: MoebiusMap, tau: float = DEFAULT_TAU) -> MapType:
    """Conjugacy type with tolerance ``tau`` relative to ``max(1, |tr^2|)``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if is_identity(m, tau):
        return MapType.IDENTITY
    t2 = tr_squared(m)
    if not cmath.isfinite(t2):
        return MapType.LOXODROMIC
    tol = tau * max(1.0, abs(t2))
    if abs(tr_squared_minus_4(m)) <= tol:
        return MapType.PARABOLIC
    if abs(t2.imag) <= tol and -tol <= t2.real < 4.0:
        return MapType.ELLIPTIC
    return MapType.LOXODROMIC


def _fixed_lifts(a, b, c, d):
    """Homogeneous lifts of the two fixed points plus the stable branch pieces."""
    bb = d - a
    s = cmath.sqrt(bb * bb + 4 * b * c)
    if (bb.conjugate() * s).real < 0:
        s = -s
    q = -0.5 * (bb + s)
    return (q, c), (-b, q), q, s


def fixed_points(m: MoebiusMap, tau: float = DEFAULT_TAU):
    """The two fixed points; a parabolic map returns its double point twice."""
    if is_identity(m, tau):
        raise IdentityMap("identity has no isolated fixed points")
    z1, z2, q, _ = _fixed_lifts(*m.entries)
    if q == 0:
        # B = s = 0 so bc = 0: parabolic (or identity, excluded above)
        lift = z1 if abs(z1[1]) > 0 else z2
        p = RiemannPoint.from_homogeneous(*lift)
        return p, p
    return RiemannPoint.from_homogeneous(*z1), RiemannPoint.from_homogeneous(*z2)


def delta(m: MoebiusMap, tau: float = DEFAULT_TAU) -> float:
    """Chordal distance between the two fixed points, in [0, 2]."""
    if is_identity(m, tau):
        raise IdentityMap("identity has no isolated fixed points")
    a, b, c, d = m.entries
    z1, z2, q, s = _fixed_lifts(a, b, c, d)
    if q == 0:
        return 0.0
    # x1*y2 - x2*y1 = q^2 + bc = -q*s, free of cancellation
    n1 = math.hypot(abs(z1[0]), abs(z1[1]))
    n2 = math.hypot(abs(z2[0]), abs(z2[1]))
    return min(2.0, 2.0 * abs(q) * abs(s) / (n1 * n2))


def commutator_trace(m: MoebiusMap, n: MoebiusMap) -> complex:
    """``tr(M N M^-1 N^-1)`` via ``2 - det(MN - NM)``."""
    return 2.0 - _scaled_exp(_commutator_det(m, n), 2 * (m.log_scale + n.log_scale))


def commutator_trace_minus_2(m: MoebiusMap, n: MoebiusMap) -> complex:
    return -_scaled_exp(_commutator_det(m, n), 2 * (m.log_scale + n.log_scale))


def _commutator_det(m: MoebiusMap, n: MoebiusMap) -> complex:
    a, b, c, d = m.entries
    e, f, g, h = n.entries
    c11 = b * g - f * c
    c12 = a * f + b * h - e * b - f * d
    c21 = c * e + d * g - g * a - h * c
    c22 = c * f - g * b
    return c11 * c22 - c12 * c21


def integrated_log_norm(m: MoebiusMap) -> float:
    """Average of ``log(|M Z| / |Z|)`` over the sphere for the normalized spherical area.

    After a KAK reduction the map is ``diag(s, 1/s)`` and ``|x|^2`` is uniform
    on [0, 1], which leaves the integral of ``log(eps + (1 - eps) u)`` with
    ``eps = s^-4``; it has the closed form used below.
    """
    ls = op_norm_log(m)
    eps = math.exp(-4.0 * ls)
    if eps >= 1.0:
        return 0.0
    # int_0^1 log(eps + (1 - eps) u) du = (eps - 1 - eps log eps) / (1 - eps)
    val = (eps - 1.0 - eps * (-4.0 * ls)) / (1.0 - eps)
    return ls + 0.5 * val


# ---------------------------------------------------------------------------
# Array versions.  ``E`` has trailing axis (a, b, c, d) of scaled entries and
# ``ls`` the matching log scales, as produced by the compiled kernels.

def batch_op_norm_log(E, ls):
    a, b, c, d = E[..., 0], E[..., 1], E[..., 2], E[..., 3]
    aa, bb, cc, dd = (np.abs(x) ** 2 for x in (a, b, c, d))
    p = aa + bb - cc - dd
    q = a * np.conj(c) + b * np.conj(d)
    s2 = 0.5 * (aa + bb + cc + dd + np.sqrt(p * p + 4 * np.abs(q) ** 2))
    return ls + 0.5 * np.log(s2)


def batch_discriminant(E):
    return (E[..., 0] - E[..., 3]) ** 2 + 4 * E[..., 1] * E[..., 2]


def batch_log_abs_trace(E, ls):
    with np.errstate(divide="ignore"):
        return ls + np.log(np.abs(E[..., 0] + E[..., 3]))


def batch_fixed_lifts(E):
    """Unit lifts ``(x1, y1, x2, y2)`` of both fixed points (double point for parabolics)."""
    a, b, c, d = E[..., 0], E[..., 1], E[..., 2], E[..., 3]
    bb = d - a
    s = np.sqrt(bb * bb + 4 * b * c)
    s = np.where((np.conj(bb) * s).real < 0, -s, s)
    q = -0.5 * (bb + s)
    x1, y1, x2, y2 = q, c, -b, q
    zero = q == 0
    # degenerate branch: reuse the non-vanishing lift twice
    use1 = np.abs(c) > 0
    x1 = np.where(zero & ~use1, x2, x1)
    y1 = np.where(zero & ~use1, y2, y1)
    x2 = np.where(zero & use1, x1, x2)
    y2 = np.where(zero & use1, y1, y2)
    with np.errstate(invalid="ignore", divide="ignore"):
        n1 = np.hypot(np.abs(x1), np.abs(y1))
        n2 = np.hypot(np.abs(x2), np.abs(y2))
        return x1 / n1, y1 / n1, x2 / n2, y2 / n2


def batch_delta(E):
    """Chordal fixed-point separation; NaN where the map is the identity."""
    a, b, c, d = E[..., 0], E[..., 1], E[..., 2], E[..., 3]
    bb = d - a
    s = np.sqrt(bb * bb + 4 * b * c)
    s = np.where((np.conj(bb) * s).real < 0, -s, s)
    q = -0.5 * (bb + s)
    n1 = np.hypot(np.abs(q), np.abs(c))
    n2 = np.hypot(np.abs(b), np.abs(q))
    with np.errstate(invalid="ignore", divide="ignore"):
        dl = np.minimum(2.0, 2.0 * np.abs(q) * np.abs(s) / (n1 * n2))
    dl = np.where(q == 0, 0.0, dl)
    return np.where((b == 0) & (c == 0) & (a == d), np.nan, dl)


def batch_is_loxodromic(E, ls, tau: float = DEFAULT_TAU):
    """Vectorized ``classify(...) is LOXODROMIC``."""
    lt2 = 2 * batch_log_abs_trace(E, ls)
    big = lt2 > 700
    with np.errstate(over="ignore", invalid="ignore"):
        f = np.exp(np.where(big, 0.0, 2 * ls))
        t2 = (E[..., 0] + E[..., 3]) ** 2 * f
        tol = tau * np.maximum(1.0, np.abs(t2))
        parab = np.abs(batch_discriminant(E) * f) <= tol
        ell = (np.abs(t2.imag) <= tol) & (t2.real >= -tol) & (t2.real < 4.0)
    return big | ~(parab | ell)
