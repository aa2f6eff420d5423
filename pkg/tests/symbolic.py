"""Exact polynomial expansion of Riley traces, used as an independent oracle for the zero finder."""

import numpy as np
import sympy

from lyapbif.words import Letter, Word

X = sympy.symbols("x")

# integer coefficient lists, ascending degree; codes 0: a, 1: a^-1, 2: b, 3: b^-1
RILEY_GENERATORS = {
    0: [[[1], [1]], [[0], [1]]],
    1: [[[1], [-1]], [[0], [1]]],
    2: [[[1], [0]], [[0, 1], [1]]],
    3: [[[1], [0]], [[0, -1], [1]]],
}


def pmul(p, q):
    r = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                r[i + j] += a * b
    return r


def padd(p, q):
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)]


def matmul(A, B):
    return [[padd(pmul(A[i][0], B[0][j]), pmul(A[i][1], B[1][j])) for j in range(2)] for i in range(2)]


def riley_matrix(w: Word):
    M = [[[1], [0]], [[0], [1]]]
    for c in w.codes.tolist():
        M = matmul(M, RILEY_GENERATORS[c])
    return M


def riley_trace_squared(w: Word):
    M = riley_matrix(w)
    tr = padd(M[0][0], M[1][1])
    return pmul(tr, tr)


def reduced_words(max_len: int):
    out = [Word()]
    cur = [Word()]
    for _ in range(max_len):
        nxt = []
        for w in cur:
            for code in range(4):
                x = Letter(code // 2, bool(code % 2))
                last = w.letters[-1] if w.letters else None
                if last is not None and last.index == x.index and last.inverted != x.inverted:
                    continue
                nxt.append(Word(w.letters + (x,)))
        out += nxt
        cur = nxt
    return out


class RootOracle:
    """Roots with multiplicity via an exact square-free factorization, then numpy per factor."""

    def __init__(self):
        self.cache = {}

    def __call__(self, coefs) -> np.ndarray:
        key = tuple(int(c) for c in coefs)
        while len(key) > 1 and key[-1] == 0:
            key = key[:-1]
        if key not in self.cache:
            self.cache[key] = self._roots(key)
        return self.cache[key]

    @staticmethod
    def _roots(key):
        if len(key) <= 1:
            return np.zeros(0, complex)
        out = []
        for fac, k in sympy.Poly(list(reversed(key)), X).sqf_list()[1]:
            if fac.degree() > 0:
                out += list(np.roots([float(c) for c in fac.all_coeffs()])) * k
        return np.array(out, complex)
