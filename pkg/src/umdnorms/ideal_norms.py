"""Lower-bound estimators for the ideal norms rho, delta and mu.

``rho(T | B, A)`` is the best constant in ``||(T x_k) | B|| <= c ||(x_k) | A||``
and ``delta(T | B, A)`` the best constant in
``||(T <f, conj a_k>) | B|| <= c ||f | L_2||``.  Outside Hilbert spaces both
are suprema of nonconvex ratios; we maximise them by projected gradient
ascent with random restarts, which yields certified lower bounds (every
reported value is attained by the returned certificate).

All restarts run in lockstep on stacked arrays, each with its own step size
and its own random stream, so a restart's trajectory does not depend on how
many other restarts run beside it.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .errors import DimensionError, InsufficientBandwidthError, UMDNormsError
from .norms import GridFunction, VectorTuple, resample, tuple_norms
from .spaces import LinearOperator, adjoint
from .systems import (QuadratureGrid, System, TensorSystem, TrigSystem, check_resolution,
                      conjugate, cosine, sine)

ZERO_FLOOR = 1e-14


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    max_iterations: int = 500
    gradient_tolerance: float = 1e-9
    seed: int = 0
    initial_step: float = 0.5
    min_step: float = 1e-12
    stall_tolerance: float = 1e-12
    stall_iterations: int = 25

    def __post_init__(self):
        if self.restarts < 1 or self.max_iterations < 1:
            raise UMDNormsError("restarts and max_iterations must be positive")
        if not (self.gradient_tolerance > 0 and self.initial_step > 0 and self.min_step > 0):
            raise UMDNormsError("optimizer tolerances and steps must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise UMDNormsError("seed must be a 64-bit unsigned integer")


@dataclass
class IdealNormEstimate:
    norm: str
    value: float
    certificate: Optional[Union[VectorTuple, GridFunction]]
    exact: bool
    restarts_used: int = 0
    iterations: int = 0
    best_per_restart: tuple = ()
    doubling_residual: Optional[float] = None
    branches: dict = field(default_factory=dict)


def stream_rng(seed: int, label: str, index: int) -> np.random.Generator:
    """Independent generator for restart ``index`` of the estimate named ``label``."""
    return np.random.default_rng([seed, zlib.crc32(label.encode()), index])


# -- ratio problems -------------------------------------------------------------


def _norm_and_grad(space, Z, V, w):
    """System norm of each stacked tuple and its gradient with respect to the tuple."""
    Y = np.matmul(V.T, Z)
    r = space.norm(Y)
    val = np.sqrt((r * r) @ w)
    G = (w * r)[..., None] * space.subgradient(Y)
    safe = np.where(val > 0, val, 1.0)
    grad = np.matmul(np.conj(V), G) / safe[:, None, None]
    return val, grad


class _RhoProblem:
    def __init__(self, T: LinearOperator, B: System, A: System, grid: QuadratureGrid):
        self.T = T
        self.M = T.matrix
        self.VB, self.wB = B.sample(grid)
        self.VA, self.wA = A.sample(grid)
        self.real = T.domain.field == "real"

    def denominator(self, Z):
        return tuple_norms(self.T.domain, Z, self.VA, self.wA)

    def value(self, Z):
        num = tuple_norms(self.T.codomain, np.matmul(Z, self.M.T), self.VB, self.wB)
        return num / self.denominator(Z)

    def value_and_grad(self, Z):
        num, gnum = _norm_and_grad(self.T.codomain, np.matmul(Z, self.M.T), self.VB, self.wB)
        gnum = np.matmul(gnum, np.conj(self.M))
        den, gden = _norm_and_grad(self.T.domain, Z, self.VA, self.wA)
        ratio = num / den
        grad = (gnum - ratio[:, None, None] * gden) / den[:, None, None]
        if self.real:
            grad = grad.real
        return ratio, grad

    def normalize(self, Z):
        return Z / self.denominator(Z)[:, None, None]

    def inner(self, U, W):
        return np.sum((np.conj(U) * W).real, axis=(1, 2))

    def grad_norm(self, G):
        return np.sqrt(np.sum(np.abs(G) ** 2, axis=(1, 2)))


class _DeltaProblem:
    """Variables are grid samples of f; gradients use the L_2(dt/2pi) metric."""

    def __init__(self, T: LinearOperator, B: System, A: TrigSystem, grid: QuadratureGrid):
        self.T = T
        self.M = T.matrix
        self.grid = grid
        self.VB, self.wB = B.sample(grid)
        self.VA, self.wA = A.sample(grid)
        self.F = np.conj(self.VA) * self.wA
        self.real = T.domain.field == "real"

    def coefficients(self, Z):
        return np.matmul(self.F, Z)

    def denominator(self, Z):
        r = self.T.domain.norm(Z)
        return np.sqrt((r * r) @ self.grid.weights)

    def value(self, Z):
        c = np.matmul(self.coefficients(Z), self.M.T)
        return tuple_norms(self.T.codomain, c, self.VB, self.wB) / self.denominator(Z)

    def value_and_grad(self, Z):
        c = np.matmul(self.coefficients(Z), self.M.T)
        num, gc = _norm_and_grad(self.T.codomain, c, self.VB, self.wB)
        gnum = np.matmul(self.VA.T, np.matmul(gc, np.conj(self.M)))
        r = self.T.domain.norm(Z)
        den = np.sqrt((r * r) @ self.grid.weights)
        gden = r[..., None] * self.T.domain.subgradient(Z) / den[:, None, None]
        ratio = num / den
        grad = (gnum - ratio[:, None, None] * gden) / den[:, None, None]
        if self.real:
            grad = grad.real
        return ratio, grad

    def normalize(self, Z):
        return Z / self.denominator(Z)[:, None, None]

    def inner(self, U, W):
        return np.sum((np.conj(U) * W).real, axis=2) @ self.grid.weights

    def grad_norm(self, G):
        return np.sqrt(np.sum(np.abs(G) ** 2, axis=2) @ self.grid.weights)

    def power_step(self, Z):
        """Norming element of the numerator's derivative, as a unit vector of L_2(X).

        For ``||f|| = 1`` this never lowers the ratio: with ``g`` norming
        ``P f`` and ``f+`` norming ``P* g`` one has
        ``||P f+|| >= <f+, P* g> = ||P* g|| >= <f, P* g> = ||P f||``.
        """
        c = np.matmul(self.coefficients(Z), self.M.T)
        _, gc = _norm_and_grad(self.T.codomain, c, self.VB, self.wB)
        h = np.matmul(self.VA.T, np.matmul(gc, np.conj(self.M)))
        dual = self.T.domain.dual()
        nxt = dual.norm(h)[..., None] * dual.subgradient(h)
        if self.real:
            nxt = nxt.real
        return nxt


def _ascend(problem, Z0: np.ndarray, cfg: OptimizerConfig, memory: int = 8):
    """Projected ascent with backtracking, one independent trajectory per leading index.

    Directions come from the limited-memory BFGS two-loop recursion applied
    to the gradient (plain gradient whenever the memory is empty or the
    direction fails to ascend).  Each trial point is renormalised onto the
    unit sphere of the denominator; a trial is accepted only if it raises
    the ratio, otherwise the step halves.  A trajectory stops when its
    gradient norm drops below the tolerance, when even a gradient step
    shorter than ``min_step`` fails, or when its relative gain stays below
    ``stall_tolerance`` for ``stall_iterations`` accepted steps in a row.
    """
    Z = problem.normalize(Z0)
    val, grad = problem.value_and_grad(Z)
    R = Z.shape[0]
    tail = (None,) * (Z.ndim - 1)
    S = np.zeros((R, memory) + Z.shape[1:], dtype=Z.dtype)
    Y = np.zeros_like(S)
    stored = np.zeros(R, dtype=int)
    gnorm = problem.grad_norm(grad)
    D = cfg.initial_step * grad / np.maximum(gnorm, ZERO_FLOOR)[(slice(None),) + tail]
    alpha = np.ones(R)
    iters = np.zeros(R, dtype=int)
    stall = np.zeros(R, dtype=int)
    active = np.ones(R, dtype=bool)
    for _ in range(cfg.max_iterations):
        active &= gnorm > cfg.gradient_tolerance
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        trial = problem.normalize(Z[idx] + alpha[idx][(slice(None),) + tail] * D[idx])
        tval, tgrad = problem.value_and_grad(trial)
        iters[idx] += 1
        better = tval > val[idx]
        acc, rej = idx[better], idx[~better]
        if acc.size:
            gain = (tval[better] - val[acc]) / np.maximum(val[acc], ZERO_FLOOR)
            stall[acc] = np.where(gain < cfg.stall_tolerance, stall[acc] + 1, 0)
            s = trial[better] - Z[acc]
            y = grad[acc] - tgrad[better]
            keep = problem.inner(s, y) > 1e-12 * np.sqrt(problem.inner(s, s) * problem.inner(y, y))
            upd = acc[keep]
            S[upd] = np.roll(S[upd], -1, axis=1)
            Y[upd] = np.roll(Y[upd], -1, axis=1)
            S[upd, -1] = s[keep]
            Y[upd, -1] = y[keep]
            stored[upd] = np.minimum(stored[upd] + 1, memory)
            Z[acc] = trial[better]
            val[acc] = tval[better]
            grad[acc] = tgrad[better]
            gnorm[acc] = problem.grad_norm(grad[acc])
            D[acc] = _two_loop(problem, grad[acc], S[acc], Y[acc], stored[acc], cfg, gnorm[acc])
            alpha[acc] = 1.0
        if rej.size:
            alpha[rej] *= 0.5
            failed = rej[alpha[rej] < cfg.min_step]
            reset = failed[stored[failed] > 0]
            stored[reset] = 0
            D[reset] = cfg.initial_step * grad[reset] / np.maximum(gnorm[reset], ZERO_FLOOR)[(slice(None),) + tail]
            alpha[reset] = 1.0
            active[np.setdiff1d(failed, reset)] = False
        active &= stall < cfg.stall_iterations
    return Z, val, iters


def _two_loop(problem, g, S, Y, stored, cfg, gnorm):
    """Quasi-Newton ascent directions for a batch; falls back to scaled gradients."""
    R, m = S.shape[:2]
    tail = (None,) * (g.ndim - 1)
    q = g.copy()
    a = np.zeros((R, m))
    rho = np.zeros((R, m))
    for j in range(m - 1, -1, -1):
        live = j >= m - stored
        sy = problem.inner(S[:, j], Y[:, j])
        rho[:, j] = np.where(live, 1.0 / np.where(live, sy, 1.0), 0.0)
        a[:, j] = rho[:, j] * problem.inner(S[:, j], q)
        q = q - a[:, j][(slice(None),) + tail] * Y[:, j]
    last = m - 1
    sy = problem.inner(S[:, last], Y[:, last])
    yy = problem.inner(Y[:, last], Y[:, last])
    gamma = np.where(stored > 0, sy / np.where(yy > 0, yy, 1.0), 0.0)
    r = gamma[(slice(None),) + tail] * q
    for j in range(m):
        b = rho[:, j] * problem.inner(Y[:, j], r)
        r = r + (a[:, j] - b)[(slice(None),) + tail] * S[:, j]
    plain = cfg.initial_step * g / np.maximum(gnorm, ZERO_FLOOR)[(slice(None),) + tail]
    ok = (stored > 0) & (problem.inner(r, g) > 0)
    return np.where(ok[(slice(None),) + tail], r, plain)


def _power(problem, Z0: np.ndarray, cfg: OptimizerConfig):
    """Nonlinear power iteration; each trajectory keeps only improving iterates."""
    Z = problem.normalize(Z0)
    val = problem.value(Z)
    iters = np.zeros(len(Z), dtype=int)
    active = np.ones(len(Z), dtype=bool)
    for _ in range(cfg.max_iterations):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        nxt = problem.power_step(Z[idx])
        den = problem.denominator(nxt)
        ok = den >= ZERO_FLOOR
        nxt[ok] /= den[ok][:, None, None]
        nval = np.where(ok, problem.value(np.where(ok[:, None, None], nxt, Z[idx])), -np.inf)
        iters[idx] += 1
        better = nval > val[idx]
        gain = np.where(better, (nval - val[idx]) / np.maximum(val[idx], ZERO_FLOOR), 0.0)
        Z[idx[better]] = nxt[better]
        val[idx[better]] = nval[better]
        active[idx[gain <= cfg.stall_tolerance]] = False
    return Z, val, iters


def _nonzero_start(make, problem, rng, attempts=8):
    for _ in range(attempts):
        Z = make(rng)
        if problem.denominator(Z[None])[0] >= ZERO_FLOOR:
            return Z
    raise UMDNormsError("could not draw a nonzero starting point")


# -- helpers ------------------------------------------------------------------


def _check_sizes(B: System, A: System):
    if A.size != B.size:
        raise DimensionError(f"dimension mismatch: systems have sizes {B.size} and {A.size}")


def _label(kind, T, B, A, grid):
    return f"{kind}|{B}|{A}|{T.domain}|{T.codomain}|{grid.N}"


def _top_singular(T: LinearOperator):
    M = T.euclidean_matrix()
    U, s, Vh = np.linalg.svd(M)
    v = np.conj(Vh[0])
    if T.domain.weights is not None:
        v = v / np.asarray(T.domain.weights)
    if T.domain.field == "real":
        v = v.real
    return float(s[0]), v


def _is_hilbert_pair(T: LinearOperator) -> bool:
    return T.domain.is_hilbert and T.codomain.is_hilbert


def _single_slot(T, n, v):
    X = np.zeros((n, T.domain.dim), dtype=np.result_type(v.dtype, T.domain.dtype))
    X[0] = v
    return X


def _rho_doubling(T, B, A, grid, X, value):
    if value == 0:
        return 0.0
    fine = _RhoProblem(T, B, A, grid.refined()).value(X[None])[0]
    return float(abs(fine - value) / value)


def _delta_doubling(T, B, A, grid, f: GridFunction, value):
    if value == 0:
        return 0.0
    g = resample(f, grid.refined())
    fine = _DeltaProblem(T, B, A, grid.refined()).value(np.asarray(g.values)[None])[0]
    return float(abs(fine - value) / value)


# -- estimators -------------------------------------------------------------


def rho_estimate(T: LinearOperator, B: System, A: System, grid: Optional[QuadratureGrid] = None,
                 cfg: OptimizerConfig = OptimizerConfig(),
                 starts: Sequence[np.ndarray] = ()) -> IdealNormEstimate:
    """Lower bound for rho(T | B, A) with the tuple attaining it.

    ``starts`` are extra initial tuples tried before the random restarts.
    """
    _check_sizes(B, A)
    n = A.size
    grid = grid or QuadratureGrid.default(max(A.max_frequency, B.max_frequency))
    check_resolution(A, grid)
    check_resolution(B, grid)
    if T.is_zero:
        X = _single_slot(T, n, np.eye(T.domain.dim)[0])
        return IdealNormEstimate("rho", 0.0, VectorTuple(T.domain, X), True, doubling_residual=0.0)
    if _is_hilbert_pair(T):
        s, v = _top_singular(T)
        X = _single_slot(T, n, v)
        return IdealNormEstimate("rho", s, VectorTuple(T.domain, X), True, doubling_residual=0.0)

    problem = _RhoProblem(T, B, A, grid)
    label = _label("rho", T, B, A, grid)
    shape = (n, T.domain.dim)
    pool = [np.asarray(s, dtype=T.domain.dtype).reshape(shape) for s in starts]
    for r in range(cfg.restarts):
        rng = stream_rng(cfg.seed, label, r)
        pool.append(_nonzero_start(lambda g: T.domain.random_vectors(g, (n,)), problem, rng))
    Z, val, iters = _ascend(problem, np.stack(pool), cfg)
    best = int(np.argmax(val))
    X = Z[best]
    value = float(problem.value(X[None])[0])
    return IdealNormEstimate(
        "rho", value, VectorTuple(T.domain, X), False,
        restarts_used=len(pool), iterations=int(iters.sum()),
        best_per_restart=tuple(float(v) for v in val),
        doubling_residual=_rho_doubling(T, B, A, grid, X, value))


def _random_function(space, A: TrigSystem, grid: QuadratureGrid, rng):
    """Random trigonometric polynomial reaching somewhat beyond the band of A."""
    n = A.max_frequency
    top = max(n, min(3 * n, (grid.N - 1) // 2))
    K = int(rng.integers(n, top + 1))
    k = np.arange(-K, K + 1)
    c = rng.standard_normal((k.size, space.dim)) + 1j * rng.standard_normal((k.size, space.dim))
    f = np.exp(1j * np.multiply.outer(grid.nodes, k)) @ c
    return f.real.copy() if space.field == "real" else f


def _embed(T, A, grid, X):
    V, _ = A.sample(grid)
    f = V.T @ np.asarray(X)
    return f.real if T.domain.field == "real" else f.astype(np.complex128)


def delta_estimate(T: LinearOperator, B: System, A: TrigSystem, grid: Optional[QuadratureGrid] = None,
                   cfg: OptimizerConfig = OptimizerConfig(),
                   rho: Optional[IdealNormEstimate] = None,
                   starts: Sequence[np.ndarray] = ()) -> IdealNormEstimate:
    """Lower bound for delta(T | B, A) with the grid function attaining it.

    The ascent is seeded with ``f = sum_k x_k a_k`` built from the rho
    certificate (computed here on the same grid unless ``rho`` is given), so
    the result is never below the rho estimate.  ``starts`` are extra
    sample arrays of shape (N, dim) to seed from.
    """
    if isinstance(A, TensorSystem):
        raise UMDNormsError("delta needs a system on the circle as its second argument")
    _check_sizes(B, A)
    n = A.size
    band = max(A.max_frequency, B.max_frequency)
    grid = grid or QuadratureGrid.default(band)
    if grid.N < 4 * band:
        raise InsufficientBandwidthError(
            f"insufficient bandwidth: delta needs N >= {4 * band} nodes, got {grid.N}")
    check_resolution(B, grid)
    if T.is_zero or _is_hilbert_pair(T):
        r = rho_estimate(T, B, A, grid, cfg)
        f = GridFunction(T.domain, grid, _embed(T, A, grid, r.certificate.entries))
        return IdealNormEstimate("delta", r.value, f, True, doubling_residual=0.0)

    if rho is None:
        rho = rho_estimate(T, B, A, grid, cfg)
    problem = _DeltaProblem(T, B, A, grid)
    label = _label("delta", T, B, A, grid)
    pool = [_embed(T, A, grid, rho.certificate.entries)]
    pool += [np.asarray(s, dtype=T.domain.dtype).reshape(grid.N, T.domain.dim) for s in starts]
    for r in range(cfg.restarts):
        rng = stream_rng(cfg.seed, label, r)
        pool.append(_nonzero_start(lambda g: _random_function(T.domain, A, grid, g), problem, rng))
    Z, val, piters = _power(problem, np.stack(pool), cfg)
    Z, val, iters = _ascend(problem, Z, cfg)
    iters = iters + piters
    best = int(np.argmax(val))
    f = GridFunction(T.domain, grid, Z[best])
    value = float(problem.value(Z[best][None])[0])
    return IdealNormEstimate(
        "delta", value, f, False,
        restarts_used=len(pool), iterations=int(iters.sum()),
        best_per_restart=tuple(float(v) for v in val),
        doubling_residual=_delta_doubling(T, B, A, grid, f, value))


def mu_estimate(T: LinearOperator, n: int, grid: Optional[QuadratureGrid] = None,
                cfg: OptimizerConfig = OptimizerConfig()) -> IdealNormEstimate:
    """max(rho(T | C_n, S_n), rho(T | S_n, C_n)); both branches kept in ``branches``."""
    C, S = cosine(n), sine(n)
    grid = grid or QuadratureGrid.default(n)
    cs = rho_estimate(T, C, S, grid, cfg)
    sc = rho_estimate(T, S, C, grid, cfg)
    win = cs if cs.value >= sc.value else sc
    return IdealNormEstimate(
        "mu", win.value, win.certificate, cs.exact and sc.exact,
        restarts_used=cs.restarts_used + sc.restarts_used,
        iterations=cs.iterations + sc.iterations,
        best_per_restart=cs.best_per_restart + sc.best_per_restart,
        doubling_residual=max(cs.doubling_residual or 0.0, sc.doubling_residual or 0.0),
        branches={"rho_CS": cs, "rho_SC": sc})


def ratio_at(T: LinearOperator, B: System, A: System, certificate, grid: QuadratureGrid) -> float:
    """Re-evaluate the rho or delta ratio at a certificate."""
    if isinstance(certificate, GridFunction):
        return float(_DeltaProblem(T, B, A, grid).value(np.asarray(certificate.values)[None])[0])
    return float(_RhoProblem(T, B, A, grid).value(np.asarray(certificate.entries)[None])[0])


# -- independent oracle ----------------------------------------------------------


def _sphere_net(D: int, resolution: int) -> np.ndarray:
    """Points on the half unit sphere of R^D from a hyperspherical angle grid."""
    if D == 1:
        return np.ones((1, 1))
    axes = [(np.arange(resolution) + 0.5) * np.pi / resolution for _ in range(D - 1)]
    angles = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, D - 1)
    pts = np.ones((angles.shape[0], D))
    for i in range(D - 1):
        pts[:, i] *= np.cos(angles[:, i])
        pts[:, i + 1:] *= np.sin(angles[:, i])[:, None]
    return pts


def brute_force_rho(T: LinearOperator, B: System, A: System, grid: Optional[QuadratureGrid] = None,
                    net_resolution: Optional[int] = None, polish: int = 8) -> float:
    """rho(T | B, A) by exhaustive search over a net on the sphere, then Nelder-Mead polish.

    Only for tiny instances: at most 6 real degrees of freedom.  Shares the
    quadrature with :func:`rho_estimate` but no optimisation code.
    """
    _check_sizes(B, A)
    n, d = A.size, T.domain.dim
    cplx = T.domain.field == "complex"
    D = n * d * (2 if cplx else 1)
    if D > 6:
        raise UMDNormsError(f"oracle scope exceeded: {D} real degrees of freedom (max 6)")
    grid = grid or QuadratureGrid.default(max(A.max_frequency, B.max_frequency))
    VB, wB = B.sample(grid)
    VA, wA = A.sample(grid)

    def to_tuples(P):
        P = np.atleast_2d(P)
        if cplx:
            P = P[:, : D // 2] + 1j * P[:, D // 2:]
        return P.reshape(-1, n, d)

    def ratios(P):
        X = to_tuples(P)
        num = tuple_norms(T.codomain, np.matmul(X, T.matrix.T), VB, wB)
        den = tuple_norms(T.domain, X, VA, wA)
        return num / np.maximum(den, 1e-300)

    if net_resolution is None:
        net_resolution = max(4, int(200_000 ** (1.0 / max(D - 1, 1))))
    net = _sphere_net(D, net_resolution)
    vals = np.concatenate([ratios(net[i:i + 4096]) for i in range(0, len(net), 4096)])
    best = float(vals.max())
    for i in np.argsort(vals)[::-1][:polish]:
        res = minimize(lambda p: -ratios(p)[0], net[i], method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
        best = max(best, -float(res.fun))
    return best


# -- duality -----------------------------------------------------------------------


def duality_pair(T: LinearOperator, B: System, A: TrigSystem, grid: Optional[QuadratureGrid] = None,
                 cfg: OptimizerConfig = OptimizerConfig()):
    """Estimates of delta(T | B, A) and delta(T' | conj A, conj B)."""
    if isinstance(B, TensorSystem):
        raise UMDNormsError("duality needs systems on the circle")
    primal = delta_estimate(T, B, A, grid, cfg)
    dual = delta_estimate(adjoint(T), conjugate(A), conjugate(B), grid, cfg)
    return primal, dual


def duality_gap(T: LinearOperator, B: System, A: TrigSystem, grid: Optional[QuadratureGrid] = None,
                cfg: OptimizerConfig = OptimizerConfig()) -> float:
    primal, dual = duality_pair(T, B, A, grid, cfg)
    return abs(primal.value - dual.value)
