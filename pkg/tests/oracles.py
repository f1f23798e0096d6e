"""Reference computations written independently of the package internals.

Nothing here imports the quadrature, system or optimiser code; the values
are produced by plain numpy / scipy so they can serve as oracles.
"""

import math

import numpy as np
from scipy import integrate, optimize

SQRT2 = math.sqrt(2.0)


def members(kind, n, t):
    """Members k = 1..n of the exponential, cosine or sine system at points t."""
    k = np.arange(1, n + 1)[:, None]
    t = np.asarray(t, dtype=float)[None, :]
    if kind == "E":
        return np.exp(1j * k * t)
    if kind == "C":
        return SQRT2 * np.cos(k * t)
    return SQRT2 * np.sin(k * t)


def lp_norm(Y, p):
    a = np.abs(Y)
    if p == 1:
        return a.sum(axis=-1)
    if p == math.inf:
        return a.max(axis=-1)
    return (a ** p).sum(axis=-1) ** (1.0 / p)


def midpoint_system_norm(X, kind, p, points=10 ** 6):
    """System norm by a midpoint rule with many points, in chunks."""
    X = np.asarray(X)
    n = X.shape[0]
    total = 0.0
    chunk = 50_000
    for start in range(0, points, chunk):
        j = np.arange(start, min(points, start + chunk))
        t = -math.pi + 2 * math.pi * (j + 0.5) / points
        Y = members(kind, n, t).T @ X
        total += float((lp_norm(Y, p) ** 2).sum())
    return math.sqrt(total / points)


def vp1_l1_norm_closed_form():
    """(1/2pi) int |1 + 2 cos t| dt, split at the zeros t = +-2pi/3."""
    return 1.0 / 3.0 + 2.0 * math.sqrt(3.0) / math.pi


def vp_l1_norm_quad(m):
    def V(t):
        k = np.arange(-(2 * m - 1), 2 * m)
        c = np.where(np.abs(k) <= m, 1.0, (2 * m - np.abs(k)) / m)
        return abs(float(np.sum(c * np.cos(k * t))))

    val, _ = integrate.quad(V, -math.pi, math.pi, limit=400)
    return val / (2 * math.pi)


def subinterval_constant():
    return (4 + SQRT2) / (2 * math.sin(math.pi / 3))


def delta_ratio(f, p, n):
    """||(<f, conj e_k>) | E_n|| / ||f | L_2|| for samples f of shape (N, dim)."""
    f = np.asarray(f)
    N = f.shape[0]
    t = -math.pi + 2 * math.pi * np.arange(N) / N
    E = members("E", n, t)  # (n, N)
    coeff = (np.conj(E) @ f) / N  # (n, dim)
    num = math.sqrt(float(np.mean(lp_norm(E.T @ coeff, p) ** 2)))
    den = math.sqrt(float(np.mean(lp_norm(f, p) ** 2)))
    return num / den


def delta_multistart(p, dim, n, N, starts=12, seed=0):
    """delta(I | E_n, E_n) on complex l_p^dim with f given by N complex samples.

    Plain scipy L-BFGS on -ratio with finite-difference gradients from
    random starts; a lower bound like any other.
    """
    def ratio(v):
        return delta_ratio((v[: N * dim] + 1j * v[N * dim:]).reshape(N, dim), p, n)

    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(starts):
        v0 = rng.standard_normal(2 * N * dim)
        res = optimize.minimize(lambda v: -ratio(v), v0, method="L-BFGS-B",
                                options={"maxiter": 3000, "maxfun": 200000})
        best = max(best, -float(res.fun))
    return best
