"""Holomorphic families of representations with polynomial generator matrices.

Each generator is a 2x2 matrix of polynomials in the parameter ``lam`` with
determinant identically one.  The word string ``"ab"`` evaluates to
``rho(a) @ rho(b)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from ._parallel import run_chunks
from .errors import FamilyError, UnknownGenerator, UnknownPreset
from .moebius import MoebiusMap
from .words import Word, WordMeasure


class PolyC:
    """Complex polynomial with ascending coefficients."""

    __slots__ = ("coef",)

    def __init__(self, coef):
        c = np.atleast_1d(np.asarray(coef, dtype=complex))
        nz = np.nonzero(c)[0]
        self.coef = c[: nz[-1] + 1].copy() if nz.size else np.zeros(1, complex)

    @classmethod
    def const(cls, v) -> "PolyC":
        return cls([v])

    @property
    def degree(self) -> int:
        return len(self.coef) - 1 if np.any(self.coef) else -1

    def __call__(self, lam):
        return np.polynomial.polynomial.polyval(lam, self.coef)

    def __add__(self, other):
        other = _as_poly(other)
        return PolyC(np.polynomial.polynomial.polyadd(self.coef, other.coef))

    __radd__ = __add__

    def __neg__(self):
        return PolyC(-self.coef)

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        return PolyC(np.polynomial.polynomial.polymul(self.coef, other.coef))

    __rmul__ = __mul__

    def derivative(self) -> "PolyC":
        return PolyC(np.polynomial.polynomial.polyder(self.coef)) if len(self.coef) > 1 else PolyC([0])

    def __repr__(self):
        return f"PolyC({self.coef.tolist()})"


def _as_poly(x) -> PolyC:
    return x if isinstance(x, PolyC) else PolyC.const(x)


@dataclass(frozen=True)
class Window:
    center: complex = 0j
    width: float = 4.0
    height: float = 4.0


@dataclass(frozen=True)
class FamilySpec:
    names: tuple
    matrices: tuple  # per generator: ((PolyC, PolyC), (PolyC, PolyC))
    window: Window = field(default_factory=Window)
    label: str = "custom"

    def __post_init__(self):
        if len(self.names) != len(self.matrices):
            raise FamilyError("one matrix per generator name is required")
        if len(set(self.names)) != len(self.names):
            raise FamilyError("generator names must be distinct")
        for nm, m in zip(self.names, self.matrices):
            det = m[0][0] * m[1][1] - m[0][1] * m[1][0]
            target = np.zeros(max(1, len(det.coef)), complex)
            target[0] = 1
            padded = np.zeros_like(target)
            padded[: len(det.coef)] = det.coef
            if np.max(np.abs(padded - target)) > 1e-12:
                raise FamilyError(f"generator {nm!r}: determinant is {det.coef.tolist()}, not 1")

    @property
    def ngen(self) -> int:
        return len(self.names)

    def coef_array(self) -> np.ndarray:
        """``coef[2*i + inv, entry, k]`` including adjugate inverses."""
        c = self.__dict__.get("_coef")
        if c is None:
            c = _build_coef(self)
            object.__setattr__(self, "_coef", c)
        return c

    def gen_matrix(self, code: int):
        i, inv = divmod(code, 2)
        (a, b), (c, d) = self.matrices[i]
        if inv:
            return (d, -b), (-c, a)
        return (a, b), (c, d)

    def parse(self, text: str) -> Word:
        return Word.parse(text, self.names)

    def default_measure(self) -> WordMeasure:
        return WordMeasure.symmetric_generators(self.ngen)

    def is_constant(self) -> bool:
        return all(p.degree <= 0 for m in self.matrices for row in m for p in row)

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for nm, m in zip(self.names, self.matrices):
            h.update(nm.encode())
            for row in m:
                for p in row:
                    h.update(np.ascontiguousarray(p.coef).tobytes())
        return h.hexdigest()[:16]


def _build_coef(spec: FamilySpec) -> np.ndarray:
    G = 2 * spec.ngen
    D = max(len(p.coef) for m in spec.matrices for row in m for p in row)
    coef = np.zeros((G, 4, D), complex)
    for g in range(G):
        (a, b), (c, d) = spec.gen_matrix(g)
        for e, p in enumerate((a, b, c, d)):
            coef[g, e, : len(p.coef)] = p.coef
    return coef


def _check_word(spec: FamilySpec, w: Word):
    for x in w.letters:
        if not 0 <= x.index < spec.ngen:
            raise UnknownGenerator(f"generator index {x.index} not in family with {spec.ngen} generators")


def evaluate(spec: FamilySpec, w: Word, lam: complex) -> MoebiusMap:
    """``rho_lam(w)`` with running renormalization into the log scale."""
    _check_word(spec, w)
    lam = complex(lam)
    cache = {}
    m = MoebiusMap.identity()
    for x in w.letters:
        g = x.code
        if g not in cache:
            (a, b), (c, d) = spec.gen_matrix(g)
            cache[g] = MoebiusMap.from_scaled(a(lam), b(lam), c(lam), d(lam))
        m = m @ cache[g]
    return m


class Jet1:
    """First-order jet ``value + d * eps`` with ``eps^2 = 0``."""

    __slots__ = ("value", "d")

    def __init__(self, value, d=0j):
        self.value = complex(value)
        self.d = complex(d)

    def __add__(self, o):
        o = _as_jet(o)
        return Jet1(self.value + o.value, self.d + o.d)

    __radd__ = __add__

    def __sub__(self, o):
        o = _as_jet(o)
        return Jet1(self.value - o.value, self.d - o.d)

    def __rsub__(self, o):
        return _as_jet(o) - self

    def __neg__(self):
        return Jet1(-self.value, -self.d)

    def __mul__(self, o):
        o = _as_jet(o)
        return Jet1(self.value * o.value, self.d * o.value + self.value * o.d)

    __rmul__ = __mul__

    def scale(self, s: float) -> "Jet1":
        return Jet1(self.value * s, self.d * s)

    def __repr__(self):
        return f"Jet1({self.value}, {self.d})"


def _as_jet(x) -> Jet1:
    return x if isinstance(x, Jet1) else Jet1(x, 0)


def evaluate_jet(spec: FamilySpec, w: Word, lam: complex):
    """Entries of ``rho_lam(w)`` and their lam-derivatives.

    Returns ``(jets, log_scale)`` where ``jets`` is a 2x2 nested tuple of
    :class:`Jet1` and the true matrix is ``exp(log_scale) * jets``.
    """
    _check_word(spec, w)
    lam = complex(lam)
    m = ((Jet1(1), Jet1(0)), (Jet1(0), Jet1(1)))
    ls = 0.0
    for x in w.letters:
        (a, b), (c, d) = spec.gen_matrix(x.code)
        g = tuple(tuple(Jet1(p(lam), p.derivative()(lam)) for p in row) for row in ((a, b), (c, d)))
        m = (
            (m[0][0] * g[0][0] + m[0][1] * g[1][0], m[0][0] * g[0][1] + m[0][1] * g[1][1]),
            (m[1][0] * g[0][0] + m[1][1] * g[1][0], m[1][0] * g[0][1] + m[1][1] * g[1][1]),
        )
        mx = max(abs(j.value) for row in m for j in row)
        if mx > 2.0 ** 40 or mx < 2.0 ** -40:
            e = math.frexp(mx)[1]
            s = math.ldexp(1.0, -e)
            m = tuple(tuple(j.scale(s) for j in row) for row in m)
            ls += e * math.log(2.0)
    return m, ls


def evaluate_grid(spec: FamilySpec, w: Word, lams, jet: bool = False):
    """Vectorized evaluation at an array of parameters.

    Returns ``(entries, log_scale, dentries)`` with ``entries`` of shape
    ``lams.shape + (4,)`` holding scaled ``a, b, c, d``; ``dentries`` is
    ``None`` unless ``jet`` is set.
    """
    _check_word(spec, w)
    lams = np.asarray(lams, dtype=complex)
    flat = np.ascontiguousarray(lams.ravel())
    n = flat.size
    out = np.empty((n, 4), complex)
    dout = np.empty((n, 4), complex) if jet else np.empty((1, 4), complex)
    ls = np.empty(n)
    run_chunks(K.eval_word_points, n, spec.coef_array(), w.codes, flat, jet, out, dout, ls, chunk=4096)
    shape = lams.shape
    return out.reshape(shape + (4,)), ls.reshape(shape), (dout.reshape(shape + (4,)) if jet else None)


def atom_arrays(spec: FamilySpec, mu: WordMeasure):
    codes = [w.codes for w in mu.words]
    for w in mu.words:
        _check_word(spec, w)
    ptr = np.zeros(len(codes) + 1, np.int64)
    ptr[1:] = np.cumsum([len(c) for c in codes])
    flat = np.concatenate(codes) if ptr[-1] else np.zeros(0, np.int64)
    return flat.astype(np.int64), ptr


def atom_matrices(spec: FamilySpec, mu: WordMeasure, lam: complex):
    """Scaled entries ``(K, 4)`` and log scales of each atom of ``mu`` at ``lam``."""
    flat, ptr = atom_arrays(spec, mu)
    k = len(mu.atoms)
    av = np.empty((k, 4), complex)
    ad = np.empty((k, 4), complex)
    als = np.empty(k)
    K._atoms_at(spec.coef_array(), flat, ptr, complex(lam), av, ad, als, False)
    return av, als


# ---------------------------------------------------------------- presets

def _mat(a, b, c, d):
    return ((_as_poly(a), _as_poly(b)), (_as_poly(c), _as_poly(d)))


def riley() -> FamilySpec:
    """Free group <a, b> with a = [[1,1],[0,1]] and b = [[1,0],[lam,1]]."""
    return FamilySpec(
        ("a", "b"),
        (_mat(1, 1, 0, 1), _mat(1, 0, PolyC([0, 1]), 1)),
        Window(-3 + 0j, 10.0, 10.0),
        "riley",
    )


def schottky(s: float = 3.0) -> FamilySpec:
    """Two loxodromics of multiplier ``s**2``; ``b`` is a rotated copy of ``a`` translated by ``lam``.

    ``a = diag(s, 1/s)`` fixes 0 and infinity.  ``b = P(lam) b0 P(lam)^-1`` with
    ``b0`` fixing +-i and ``P(lam) = [[1, lam], [0, 1]]``, so ``b`` fixes
    ``lam + i`` and ``lam - i``.  The generators share a fixed point only at
    ``lam = +-i``; for ``lam`` near 0 and ``s`` moderately large the pair
    plays ping-pong.
    """
    s = float(s)
    if s <= 1:
        raise FamilyError("schottky preset needs s > 1")
    ch = 0.5 * (s + 1 / s)
    sh = 0.5 * (s - 1 / s)
    lam = PolyC([0, 1])
    b = _mat(ch - 1j * sh * lam, 1j * sh + 1j * sh * lam * lam, -1j * sh, ch + 1j * sh * lam)
    return FamilySpec(
        ("a", "b"),
        (_mat(s, 0, 0, 1 / s), b),
        Window(0j, 1.0, 1.0),
        "schottky",
    )


def _parse_coef(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise FamilyError(f"complex coefficient must be [re, im], got {x!r}")
        return complex(float(x[0]), float(x[1]))
    return complex(x)


def _parse_matrix(m) -> tuple:
    if len(m) != 2 or any(len(r) != 2 for r in m):
        raise FamilyError("generator matrix must be 2x2")
    return tuple(tuple(PolyC(_coef_list(e)) for e in row) for row in m)


def _coef_list(e):
    # bare number: constant; otherwise a list of coefficients, each a number or [re, im]
    if isinstance(e, (int, float, complex)):
        return [complex(e)]
    if isinstance(e, (list, tuple)) and e:
        return [_parse_coef(c) for c in e]
    raise FamilyError(f"cannot read polynomial entry {e!r}")


def linear_custom(generators: dict, window: Window | None = None) -> FamilySpec:
    """Generators given as ``{name: [[p11, p12], [p21, p22]]}`` of coefficient lists.

    Each entry is a list of ``[re, im]`` coefficients in ascending degree
    (or a bare number for a constant).
    """
    names = tuple(generators)
    mats = tuple(_parse_matrix(generators[n]) for n in names)
    return FamilySpec(names, mats, window or Window(), "linear-custom")


def constant(mats: dict | None = None) -> FamilySpec:
    """A family that does not depend on lam (default: a hyperbolic pair)."""
    if mats is None:
        mats = {"a": [[2, 0], [0, 0.5]], "b": [[1.25, 0.75], [0.75, 1.25]]}
    return FamilySpec(tuple(mats), tuple(_mat(*(np.asarray(m, complex).ravel())) for m in mats.values()),
                      Window(), "constant")


def preset(name: str, **params) -> FamilySpec:
    if name == "riley":
        return riley()
    if name == "schottky":
        return schottky(params.get("s", 3.0))
    if name == "linear-custom":
        if "generators" not in params:
            raise FamilyError("linear-custom needs a 'generators' parameter")
        return linear_custom(params["generators"], _window(params.get("window")))
    if name == "constant":
        return constant(params.get("generators"))
    raise UnknownPreset(f"unknown preset {name!r}")


def _window(w) -> Window | None:
    if w is None:
        return None
    c = w.get("center", [0, 0])
    return Window(complex(float(c[0]), float(c[1])), float(w["width"]), float(w["height"]))


# ------------------------------------------------------------- spec files

def load_family(path) -> FamilySpec:
    """Read the JSON family file format.

    ``{"generators": [{"name": "a", "matrix": [[p11, p12], [p21, p22]]}, ...],
    "window": {"center": [re, im], "width": w, "height": h}}`` where each
    ``p`` is a list of ``[re, im]`` coefficients in ascending degree.
    """
    with open(path) as fh:
        data = json.load(fh)
    return family_from_dict(data)


def family_from_dict(data) -> FamilySpec:
    try:
        gens = data["generators"]
        names = tuple(str(g["name"]) for g in gens)
        mats = tuple(_parse_matrix(g["matrix"]) for g in gens)
    except (KeyError, TypeError) as exc:
        raise FamilyError(f"malformed family spec: {exc}") from exc
    return FamilySpec(names, mats, _window(data.get("window")) or Window(), "file")


def family_to_dict(spec: FamilySpec) -> dict:
    def poly(p):
        return [[float(c.real), float(c.imag)] for c in p.coef]

    return {
        "generators": [
            {"name": n, "matrix": [[poly(p) for p in row] for row in m]}
            for n, m in zip(spec.names, spec.matrices)
        ],
        "window": {
            "center": [spec.window.center.real, spec.window.center.imag],
            "width": spec.window.width,
            "height": spec.window.height,
        },
    }


def word_codes(words: Sequence[Word]):
    """Flatten words into ``(codes, ptr)`` for the compiled kernels."""
    ptr = np.zeros(len(words) + 1, np.int64)
    ptr[1:] = np.cumsum([len(w) for w in words])
    if ptr[-1] == 0:
        return np.zeros(0, np.int64), ptr
    return np.concatenate([w.codes for w in words if len(w)]).astype(np.int64), ptr
