"""Compiled inner loops.

Generators are passed as a coefficient array ``coef[g, e, k]``: generator code
``g`` (``2*index + inverted``), matrix entry ``e`` in row-major order, and
polynomial coefficient ``k`` (ascending degree).  Every kernel works on a
``[start, stop)`` slice of its points so callers can fan chunks out to
threads; each output slot is written by exactly one chunk.
"""

import math

import numpy as np
from numba import njit

LN2 = math.log(2.0)
_BIG = 2.0 ** 40
_SMALL = 2.0 ** -40


@njit(cache=True, nogil=True, inline="always")
def _mx(a, b, c, d):
    m = abs(a.real)
    for v in (a.imag, b.real, b.imag, c.real, c.imag, d.real, d.imag):
        av = abs(v)
        if av > m:
            m = av
    return m


@njit(cache=True, nogil=True)
def gen_values(coef, lam, out, dout):
    G = coef.shape[0]
    D = coef.shape[2]
    for g in range(G):
        for e in range(4):
            v = 0j
            dv = 0j
            for k in range(D - 1, -1, -1):
                dv = dv * lam + v
                v = v * lam + coef[g, e, k]
            out[g, e] = v
            dout[g, e] = dv


@njit(cache=True, nogil=True)
def opnorm_log(a, b, c, d, ls):
    aa = a.real * a.real + a.imag * a.imag
    bb = b.real * b.real + b.imag * b.imag
    cc = c.real * c.real + c.imag * c.imag
    dd = d.real * d.real + d.imag * d.imag
    p = aa + bb - cc - dd
    q = a * c.conjugate() + b * d.conjugate()
    qq = q.real * q.real + q.imag * q.imag
    s2 = 0.5 * (aa + bb + cc + dd + math.sqrt(p * p + 4.0 * qq))
    return ls + 0.5 * math.log(s2)


@njit(cache=True, nogil=True)
def word_product(gv, gd, codes, lo, hi, jet):
    """Product of generator matrices ``codes[lo:hi]`` in word order, with optional jets."""
    a = 1.0 + 0j
    b = 0j
    c = 0j
    d = 1.0 + 0j
    da = 0j
    db = 0j
    dc = 0j
    dd = 0j
    ls = 0.0
    for i in range(lo, hi):
        g = codes[i]
        e0 = gv[g, 0]
        e1 = gv[g, 1]
        e2 = gv[g, 2]
        e3 = gv[g, 3]
        if jet:
            f0 = gd[g, 0]
            f1 = gd[g, 1]
            f2 = gd[g, 2]
            f3 = gd[g, 3]
            nda = da * e0 + db * e2 + a * f0 + b * f2
            ndb = da * e1 + db * e3 + a * f1 + b * f3
            ndc = dc * e0 + dd * e2 + c * f0 + d * f2
            ndd = dc * e1 + dd * e3 + c * f1 + d * f3
            da, db, dc, dd = nda, ndb, ndc, ndd
        na = a * e0 + b * e2
        nb = a * e1 + b * e3
        nc = c * e0 + d * e2
        nd = c * e1 + d * e3
        a, b, c, d = na, nb, nc, nd
        m = _mx(a, b, c, d)
        if m > _BIG or m < _SMALL:
            ex = math.frexp(m)[1]
            s = math.ldexp(1.0, -ex)
            a *= s
            b *= s
            c *= s
            d *= s
            da *= s
            db *= s
            dc *= s
            dd *= s
            ls += ex * LN2
    m = _mx(a, b, c, d)
    ex = math.frexp(m)[1]
    s = math.ldexp(1.0, -ex)
    return (a * s, b * s, c * s, d * s, ls + ex * LN2, da * s, db * s, dc * s, dd * s)


@njit(cache=True, nogil=True)
def eval_word_points(coef, codes, lams, jet, out, dout, ls, start, stop):
    G = coef.shape[0]
    gv = np.empty((G, 4), np.complex128)
    gd = np.empty((G, 4), np.complex128)
    n = codes.shape[0]
    for p in range(start, stop):
        gen_values(coef, lams[p], gv, gd)
        r = word_product(gv, gd, codes, 0, n, jet)
        out[p, 0] = r[0]
        out[p, 1] = r[1]
        out[p, 2] = r[2]
        out[p, 3] = r[3]
        ls[p] = r[4]
        if jet:
            dout[p, 0] = r[5]
            dout[p, 1] = r[6]
            dout[p, 2] = r[7]
            dout[p, 3] = r[8]


@njit(cache=True, nogil=True)
def chi_field_kernel(coef, codes, word_ptr, pix_lo, pix_hi, lams, out, start, stop):
    """``out[p] = sum of op_norm_log over words pix_lo[p]..pix_hi[p]`` at ``lams[p]``."""
    G = coef.shape[0]
    gv = np.empty((G, 4), np.complex128)
    gd = np.empty((G, 4), np.complex128)
    for p in range(start, stop):
        gen_values(coef, lams[p], gv, gd)
        acc = 0.0
        for w in range(pix_lo[p], pix_hi[p]):
            r = word_product(gv, gd, codes, word_ptr[w], word_ptr[w + 1], False)
            acc += opnorm_log(r[0], r[1], r[2], r[3], r[4])
        out[p] = acc


@njit(cache=True, nogil=True)
def _atoms_at(coef, atom_codes, atom_ptr, lam, av, ad, als, jet):
    G = coef.shape[0]
    gv = np.empty((G, 4), np.complex128)
    gd = np.empty((G, 4), np.complex128)
    gen_values(coef, lam, gv, gd)
    K = atom_ptr.shape[0] - 1
    for k in range(K):
        r = word_product(gv, gd, atom_codes, atom_ptr[k], atom_ptr[k + 1], jet)
        av[k, 0] = r[0]
        av[k, 1] = r[1]
        av[k, 2] = r[2]
        av[k, 3] = r[3]
        ad[k, 0] = r[5]
        ad[k, 1] = r[6]
        ad[k, 2] = r[7]
        ad[k, 3] = r[8]
        als[k] = r[4]


@njit(cache=True, nogil=True)
def vector_walk_kernel(coef, atom_codes, atom_ptr, steps, x0, y0, checkpoints, lams, out, start, stop):
    """Shared-walk vector cocycle: ``out[j, p] = sum_i log |l_{cp_j}(walk i) Z0|`` at ``lams[p]``."""
    K = atom_ptr.shape[0] - 1
    av = np.empty((K, 4), np.complex128)
    ad = np.empty((K, 4), np.complex128)
    als = np.empty(K, np.float64)
    m = steps.shape[0]
    nmax = steps.shape[1]
    ncp = checkpoints.shape[0]
    for p in range(start, stop):
        _atoms_at(coef, atom_codes, atom_ptr, lams[p], av, ad, als, False)
        for j in range(ncp):
            out[j, p] = 0.0
        for i in range(m):
            x = x0
            y = y0
            acc = 0.0
            j = 0
            for k in range(nmax):
                g = steps[i, k]
                nx = av[g, 0] * x + av[g, 1] * y
                ny = av[g, 2] * x + av[g, 3] * y
                nn = math.sqrt(nx.real * nx.real + nx.imag * nx.imag + ny.real * ny.real + ny.imag * ny.imag)
                acc += als[g] + math.log(nn)
                x = nx / nn
                y = ny / nn
                while j < ncp and checkpoints[j] == k + 1:
                    out[j, p] += acc
                    j += 1


@njit(cache=True, nogil=True)
def walk_products(av, als, steps, out, ls, start, stop):
    """``l_n = A[steps[i, n-1]] ... A[steps[i, 0]]`` for each walk ``i``."""
    n = steps.shape[1]
    for i in range(start, stop):
        a = 1.0 + 0j
        b = 0j
        c = 0j
        d = 1.0 + 0j
        acc = 0.0
        for k in range(n):
            g = steps[i, k]
            e0 = av[g, 0]
            e1 = av[g, 1]
            e2 = av[g, 2]
            e3 = av[g, 3]
            na = e0 * a + e1 * c
            nb = e0 * b + e1 * d
            nc = e2 * a + e3 * c
            nd = e2 * b + e3 * d
            a, b, c, d = na, nb, nc, nd
            acc += als[g]
            mm = _mx(a, b, c, d)
            if mm > _BIG or mm < _SMALL:
                ex = math.frexp(mm)[1]
                s = math.ldexp(1.0, -ex)
                a *= s
                b *= s
                c *= s
                d *= s
                acc += ex * LN2
        mm = _mx(a, b, c, d)
        ex = math.frexp(mm)[1]
        s = math.ldexp(1.0, -ex)
        out[i, 0] = a * s
        out[i, 1] = b * s
        out[i, 2] = c * s
        out[i, 3] = d * s
        ls[i] = acc + ex * LN2


@njit(cache=True, nogil=True)
def furstenberg_chain(av, als, steps, x0, y0):
    """Increments ``log(|A_k Z_k| / |Z_k|)`` of the projective chain ``z_{k+1} = A_k z_k``."""
    n = steps.shape[0]
    inc = np.empty(n, np.float64)
    x = x0
    y = y0
    for k in range(n):
        g = steps[k]
        nx = av[g, 0] * x + av[g, 1] * y
        ny = av[g, 2] * x + av[g, 3] * y
        nn = math.sqrt(nx.real * nx.real + nx.imag * nx.imag + ny.real * ny.real + ny.imag * ny.imag)
        inc[k] = als[g] + math.log(nn)
        x = nx / nn
        y = ny / nn
    return inc


@njit(cache=True, nogil=True)
def _cell_type(t2, dt2, radius, tau):
    """0 loxodromic, 1 non-loxodromic: the linearized image of the cell meets [0, 4]."""
    if not (math.isfinite(t2.real) and math.isfinite(t2.imag)):
        return 0
    x = t2.real
    if x < 0.0:
        dx = -x
    elif x > 4.0:
        dx = x - 4.0
    else:
        dx = 0.0
    dist = math.hypot(dx, t2.imag)
    at = abs(t2)
    tol = tau * (1.0 if at < 1.0 else at)
    r = abs(dt2) * radius
    if r > tol:
        tol = r
    return 1 if dist <= tol else 0


@njit(cache=True, nogil=True)
def type_walk_kernel(coef, atom_codes, atom_ptr, steps, lams, radius, tau, out, start, stop):
    """``out[i * nmax + k, p]``: cell type of ``l_{k+1}`` of walk ``i`` at pixel ``p``."""
    K = atom_ptr.shape[0] - 1
    av = np.empty((K, 4), np.complex128)
    ad = np.empty((K, 4), np.complex128)
    als = np.empty(K, np.float64)
    m = steps.shape[0]
    nmax = steps.shape[1]
    for p in range(start, stop):
        _atoms_at(coef, atom_codes, atom_ptr, lams[p], av, ad, als, True)
        for i in range(m):
            a = 1.0 + 0j
            b = 0j
            c = 0j
            d = 1.0 + 0j
            da = 0j
            db = 0j
            dc = 0j
            dd = 0j
            ls = 0.0
            for k in range(nmax):
                g = steps[i, k]
                e0 = av[g, 0]
                e1 = av[g, 1]
                e2 = av[g, 2]
                e3 = av[g, 3]
                f0 = ad[g, 0]
                f1 = ad[g, 1]
                f2 = ad[g, 2]
                f3 = ad[g, 3]
                # left multiplication: l_{k+1} = g_{k+1} l_k
                nda = f0 * a + f1 * c + e0 * da + e1 * dc
                ndb = f0 * b + f1 * d + e0 * db + e1 * dd
                ndc = f2 * a + f3 * c + e2 * da + e3 * dc
                ndd = f2 * b + f3 * d + e2 * db + e3 * dd
                na = e0 * a + e1 * c
                nb = e0 * b + e1 * d
                nc = e2 * a + e3 * c
                nd = e2 * b + e3 * d
                a, b, c, d = na, nb, nc, nd
                da, db, dc, dd = nda, ndb, ndc, ndd
                ls += als[g]
                mm = _mx(a, b, c, d)
                if mm > _BIG or mm < _SMALL:
                    ex = math.frexp(mm)[1]
                    s = math.ldexp(1.0, -ex)
                    a *= s
                    b *= s
                    c *= s
                    d *= s
                    da *= s
                    db *= s
                    dc *= s
                    dd *= s
                    ls += ex * LN2
                tr = a + d
                dtr = da + dd
                if 2.0 * ls < 700.0:
                    f = math.exp(2.0 * ls)
                    t2 = tr * tr * f
                    dt2 = 2.0 * tr * dtr * f
                    out[i * nmax + k, p] = _cell_type(t2, dt2, radius, tau)
                else:
                    out[i * nmax + k, p] = 0


@njit(cache=True, nogil=True, inline="always")
def _unscale(v, dv, ls2):
    # multiply back exp(ls2) when representable; otherwise keep the scaled pair
    # (a positive factor changes neither phase nor the Newton ratio)
    if ls2 < 700.0:
        f = math.exp(ls2)
        return v * f, dv * f
    return v, dv


@njit(cache=True, nogil=True)
def trace_points(coef, codes, ptr, pid, lams, t, exact4, val, der, start, stop):
    """``tr^2(w_k) - t`` and its lam-derivative at ``lams[p]`` for word ``k = pid[p]``."""
    G = coef.shape[0]
    gv = np.empty((G, 4), np.complex128)
    gd = np.empty((G, 4), np.complex128)
    for p in range(start, stop):
        gen_values(coef, lams[p], gv, gd)
        k = pid[p]
        a, b, c, d, ls, da, db, dc, dd = word_product(gv, gd, codes, ptr[k], ptr[k + 1], True)
        if exact4:
            u = a - d
            du = da - dd
            v = u * u + 4.0 * b * c
            dv = 2.0 * u * du + 4.0 * (db * c + b * dc)
        else:
            tr = a + d
            v = tr * tr - t * math.exp(-2.0 * ls)
            dv = 2.0 * tr * (da + dd)
        val[p], der[p] = _unscale(v, dv, 2.0 * ls)


@njit(cache=True, nogil=True)
def commutator_points(coef, codes_w, ptr_w, codes_h, ptr_h, pid, lams, val, der, start, stop):
    """``tr[w_k, h_k] - 2 = -det(WH - HW)`` and its derivative at ``lams[p]``."""
    G = coef.shape[0]
    gv = np.empty((G, 4), np.complex128)
    gd = np.empty((G, 4), np.complex128)
    for p in range(start, stop):
        gen_values(coef, lams[p], gv, gd)
        k = pid[p]
        a, b, c, d, l1, da, db, dc, dd = word_product(gv, gd, codes_w, ptr_w[k], ptr_w[k + 1], True)
        e, f, g, h, l2, de, df, dg, dh = word_product(gv, gd, codes_h, ptr_h[k], ptr_h[k + 1], True)
        x11 = b * g - f * c
        x12 = a * f + b * h - e * b - f * d
        x21 = c * e + d * g - g * a - h * c
        dx11 = db * g + b * dg - df * c - f * dc
        dx12 = da * f + a * df + db * h + b * dh - de * b - e * db - df * d - f * dd
        dx21 = dc * e + c * de + dd * g + d * dg - dg * a - g * da - dh * c - h * dc
        v = x11 * x11 + x12 * x21
        dv = 2.0 * x11 * dx11 + dx12 * x21 + x12 * dx21
        val[p], der[p] = _unscale(v, dv, 2.0 * (l1 + l2))
