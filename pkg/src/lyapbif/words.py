"""Reduced words, finitely supported measures on a free group and seeded random walks.

A word ``"ab"`` denotes the product ``rho(a) rho(b)``.  The left random walk
``l_n = g_n ... g_1`` therefore prepends each new step on the left.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import CapExceeded, MeasureError, UnknownGenerator


class Letter(NamedTuple):
    index: int
    inverted: bool = False

    @property
    def code(self) -> int:
        return 2 * self.index + int(self.inverted)

    def inverse(self) -> "Letter":
        return Letter(self.index, not self.inverted)


def reduce(letters: Iterable[Letter]) -> "Word":
    """Free reduction by stack cancellation."""
    stack: list[Letter] = []
    for x in letters:
        x = Letter(int(x[0]), bool(x[1]))
        if stack and stack[-1].index == x.index and stack[-1].inverted != x.inverted:
            stack.pop()
        else:
            stack.append(x)
    return Word(tuple(stack))


@dataclass(frozen=True)
class Word:
    """A freely reduced word; build through :func:`reduce` or :meth:`parse`."""

    letters: tuple = ()

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        return reduce(self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(tuple(x.inverse() for x in reversed(self.letters)))

    @property
    def codes(self) -> np.ndarray:
        return np.array([x.code for x in self.letters], dtype=np.int64)

    @classmethod
    def from_codes(cls, codes) -> "Word":
        return reduce(Letter(int(k) // 2, bool(int(k) % 2)) for k in codes)

    @classmethod
    def parse(cls, text: str, names: Sequence[str]) -> "Word":
        """Parse ``"ab'"`` style strings; a trailing ``'`` inverts the preceding generator.

        Generator names are matched greedily (longest first).  Whitespace and
        ``*`` separators are ignored.
        """
        order = sorted(range(len(names)), key=lambda i: -len(names[i]))
        out = []
        i = 0
        text = text.replace(" ", "").replace("*", "")
        if text in ("", "1", "e", "id"):
            return cls()
        while i < len(text):
            for g in order:
                nm = names[g]
                if text.startswith(nm, i):
                    i += len(nm)
                    inv = False
                    while i < len(text) and text[i] == "'":
                        inv = not inv
                        i += 1
                    out.append(Letter(g, inv))
                    break
            else:
                raise UnknownGenerator(f"cannot parse word {text!r} at position {i}")
        return reduce(out)

    def format(self, names: Sequence[str]) -> str:
        return "".join(names[x.index] + ("'" if x.inverted else "") for x in self.letters)


def word_length(w: Word) -> int:
    return len(w)


def left_multiply(w: Word, step: Word) -> Word:
    """Reduced concatenation ``step * w``."""
    return reduce(step.letters + w.letters)


@dataclass(frozen=True)
class WordMeasure:
    """Finitely supported probability measure on the free group."""

    atoms: tuple  # of (Word, weight)

    def __post_init__(self):
        if not self.atoms:
            raise MeasureError("measure needs at least one atom")
        ws = [w for _, w in self.atoms]
        if any(not (w > 0) for w in ws):
            raise MeasureError("weights must be positive")
        if abs(math.fsum(ws) - 1.0) > 1e-12:
            raise MeasureError(f"weights sum to {math.fsum(ws)!r}, expected 1")

    @classmethod
    def normalized(cls, atoms, rel_tol: float = 0.01) -> "WordMeasure":
        """Rescale weights summing to within ``rel_tol`` of one; reject otherwise."""
        atoms = list(atoms)
        total = math.fsum(w for _, w in atoms)
        if not abs(total - 1.0) <= rel_tol:
            raise MeasureError(f"weights sum to {total}, not within {rel_tol} of 1")
        return cls(tuple((w, wt / total) for w, wt in atoms))

    @classmethod
    def uniform(cls, words: Sequence[Word]) -> "WordMeasure":
        k = len(words)
        return cls(tuple((w, 1.0 / k) for w in words))

    @classmethod
    def symmetric_generators(cls, ngen: int) -> "WordMeasure":
        """Uniform measure on the generators and their inverses."""
        ws = []
        for i in range(ngen):
            ws.append(Word((Letter(i, False),)))
            ws.append(Word((Letter(i, True),)))
        return cls.uniform(ws)

    @property
    def words(self) -> list:
        return [w for w, _ in self.atoms]

    @property
    def weights(self) -> np.ndarray:
        return np.array([p for _, p in self.atoms])

    @property
    def max_atom_length(self) -> int:
        return max(len(w) for w in self.words)

    def reversed(self) -> "WordMeasure":
        """Image measure under g -> g^-1."""
        return WordMeasure(tuple((w.inverse(), p) for w, p in self.atoms))

    def mass(self, w: Word) -> float:
        return math.fsum(p for u, p in self.atoms if u == w)


def parse_measure(entries, names: Sequence[str]) -> WordMeasure:
    """Build a measure from config entries ``[{"word": "ab'", "weight": 0.5}, ...]``."""
    atoms = []
    for e in entries:
        atoms.append((Word.parse(str(e["word"]), names), float(e["weight"])))
    return WordMeasure.normalized(atoms)


@dataclass
class WalkSampler:
    """Seeded i.i.d. steps from a :class:`WordMeasure`.

    Each walk drawn gets its own counter-derived stream
    ``SeedSequence(seed, spawn_key=(stream, counter))``, so walk ``k`` is the
    same regardless of how many walks are drawn in total, of walk length, or
    of task scheduling.
    """

    measure: WordMeasure
    seed: int = 0
    stream: int = 0
    counter: int = field(default=0)

    def _rng(self, k: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed & ((1 << 64) - 1), spawn_key=(self.stream & ((1 << 64) - 1), k))
        return np.random.Generator(np.random.PCG64(ss))

    def split(self, stream: int) -> "WalkSampler":
        return WalkSampler(self.measure, self.seed, stream)

    def step_indices(self, m: int, n: int) -> np.ndarray:
        """``(m, n)`` array of atom indices; column ``k`` holds step ``g_{k+1}``."""
        p = self.measure.weights
        cdf = np.cumsum(p)
        cdf[-1] = 1.0
        out = np.empty((m, n), dtype=np.int64)
        for j in range(m):
            u = self._rng(self.counter + j).random(n)
            out[j] = np.searchsorted(cdf, u, side="right")
        self.counter += m
        return np.minimum(out, len(p) - 1)

    def walks(self, m: int, n: int) -> list:
        idx = self.step_indices(m, n)
        return [walk_word(self.measure, row) for row in idx]


def walk_word(measure: WordMeasure, steps) -> Word:
    """Reduced ``l_n = g_n ... g_1`` for a row of atom indices ``g_1, ..., g_n``."""
    words = measure.words
    stack: list[Letter] = []
    for k in reversed(np.asarray(steps).tolist()):
        for x in words[k].letters:
            if stack and stack[-1].index == x.index and stack[-1].inverted != x.inverted:
                stack.pop()
            else:
                stack.append(x)
    return Word(tuple(stack))


def sample_walk(sampler: WalkSampler, n: int) -> Word:
    if n < 0:
        raise ValueError("n must be non-negative")
    return walk_word(sampler.measure, sampler.step_indices(1, n)[0])


def convolution_enumerate(mu: WordMeasure, n: int, cap: int = 10**6) -> WordMeasure:
    """Exact ``mu^n`` with equal reduced words merged."""
    k = len(mu.atoms)
    if n < 0:
        raise ValueError("n must be non-negative")
    if k ** n > cap:
        raise CapExceeded(f"|supp|^n = {k}^{n} exceeds cap {cap}")
    cur: dict = {Word(): 1.0}
    for _ in range(n):
        nxt: dict = defaultdict(float)
        for w, p in cur.items():
            for s, q in mu.atoms:
                nxt[left_multiply(w, s)] += p * q
        cur = nxt
    # sort for deterministic atom order
    items = sorted(cur.items(), key=lambda kv: (len(kv[0]), [x.code for x in kv[0].letters]))
    total = math.fsum(p for _, p in items)
    return WordMeasure(tuple((w, p / total) for w, p in items))
