"""Independent reference computations for the test suite.

Derivatives of hand-written embeddings are taken numerically with mpmath at
high working precision, and the curvature tensors are assembled with plain
loops straight from the coordinate formulas.  Nothing here goes through the
expression language or the vectorized pipeline.
"""

import itertools

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def ellipsoid5(a=(1.0, 1.3, 1.7, 2.1, 2.5)):
    def f(u1, u2, u3, u4):
        return [
            a[0] * mp.cos(u1),
            a[1] * mp.sin(u1) * mp.cos(u2),
            a[2] * mp.sin(u1) * mp.sin(u2) * mp.cos(u3),
            a[3] * mp.sin(u1) * mp.sin(u2) * mp.sin(u3) * mp.cos(u4),
            a[4] * mp.sin(u1) * mp.sin(u2) * mp.sin(u3) * mp.sin(u4),
        ]

    return f


def deformed_desitter(b=(1.0, 1.2, 1.5, 1.8)):
    def f(u1, u2, u3):
        return [
            b[0] * mp.sinh(u1),
            b[1] * mp.cosh(u1) * mp.cos(u2),
            b[2] * mp.cosh(u1) * mp.sin(u2) * mp.cos(u3),
            b[3] * mp.cosh(u1) * mp.sin(u2) * mp.sin(u3),
        ]

    return f


def sphere3(r=1.0):
    def f(u1, u2, u3):
        return [
            r * mp.cos(u1),
            r * mp.sin(u1) * mp.cos(u2),
            r * mp.sin(u1) * mp.sin(u2) * mp.cos(u3),
            r * mp.sin(u1) * mp.sin(u2) * mp.sin(u3),
        ]

    return f


def derivatives(f, u, D, order=3):
    """{sorted multi-index: ambient vector} for all partials up to ``order``."""
    n = len(u)
    out = {}
    for r in range(order + 1):
        for key in itertools.combinations_with_replacement(range(n), r):
            counts = tuple(key.count(i) for i in range(n))
            out[key] = [mp.diff(lambda *x, a=a: f(*x)[a], tuple(mp.mpf(t) for t in u), counts) for a in range(D)]
    return out


def _d(table, *idx):
    return table[tuple(sorted(idx))]


def geometry(f, u, eta):
    """Metric, its first and second derivatives, unit normal and h, all as float arrays."""
    n, D = len(u), len(eta)
    T = derivatives(f, u, D, 3)

    def ip(x, y):
        return sum(eta[a] * x[a] * y[a] for a in range(D))

    g = np.empty((n, n))
    dg = np.empty((n, n, n))
    d2g = np.empty((n, n, n, n))
    for i, j in itertools.product(range(n), repeat=2):
        g[i, j] = float(ip(_d(T, i), _d(T, j)))
        for k in range(n):
            dg[k, i, j] = float(ip(_d(T, k, i), _d(T, j)) + ip(_d(T, i), _d(T, k, j)))
            for l in range(n):
                d2g[l, k, i, j] = float(
                    ip(_d(T, l, k, i), _d(T, j)) + ip(_d(T, k, i), _d(T, l, j))
                    + ip(_d(T, l, i), _d(T, k, j)) + ip(_d(T, i), _d(T, l, k, j))
                )
    # normal: solve eta(N, d_i f) = 0 via the null space of the tangent rows
    J = np.array([[float(x) for x in _d(T, i)] for i in range(n)])
    _, _, Vt = np.linalg.svd(J * np.asarray(eta))
    N = Vt[-1]
    q = float(np.sum(np.asarray(eta) * N * N))
    N = N / np.sqrt(abs(q))
    h = np.array([[sum(eta[a] * float(_d(T, i, j)[a]) * N[a] for a in range(D)) for j in range(n)] for i in range(n)])
    return {"g": g, "dg": dg, "d2g": d2g, "N": N, "eps": np.sign(q), "h": h, "J": J}


def riemann(geo):
    """R[a,b,c,d] = g(R(e_a, e_b) e_c, e_d) from the coordinate formulas, by loops."""
    g, dg, d2g = geo["g"], geo["dg"], geo["d2g"]
    n = len(g)
    gi = np.linalg.inv(g)
    G1 = np.zeros((n, n, n))  # Gamma_{k,ij}
    dG1 = np.zeros((n, n, n, n))  # d_l Gamma_{k,ij}
    for k, i, j in itertools.product(range(n), repeat=3):
        G1[k, i, j] = 0.5 * (dg[i, j, k] + dg[j, i, k] - dg[k, i, j])
        for l in range(n):
            dG1[l, k, i, j] = 0.5 * (d2g[l, i, j, k] + d2g[l, j, i, k] - d2g[l, k, i, j])
    Gam = np.einsum("rk,kij->rij", gi, G1)
    dgi = -np.einsum("ra,lab,bk->lrk", gi, dg, gi)
    dGam = np.einsum("lrk,kij->lrij", dgi, G1) + np.einsum("rk,lkij->lrij", gi, dG1)
    Rup = np.zeros((n, n, n, n))  # R^r_{s m v}
    for r, s, m, v in itertools.product(range(n), repeat=4):
        val = dGam[m, r, v, s] - dGam[v, r, m, s]
        for l in range(n):
            val += Gam[r, m, l] * Gam[l, v, s] - Gam[r, v, l] * Gam[l, m, s]
        Rup[r, s, m, v] = val
    R = np.zeros((n, n, n, n))
    for a, b, c, d in itertools.product(range(n), repeat=4):
        R[a, b, c, d] = sum(g[d, r] * Rup[r, c, a, b] for r in range(n))
    return R, Gam


def scalar_curvature(R, g):
    gi = np.linalg.inv(g)
    S = np.einsum("ad,abcd->bc", gi, R)
    return float(np.einsum("bc,bc->", gi, S)), S
