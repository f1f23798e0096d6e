"""Executable checks of the inequalities relating the trigonometric ideal norms.

Checks come in four classes:

``identity``
    exact equalities, passing when the residual is below an absolute floor;
``constructive``
    inequalities that hold for every single input (tuple, function, point),
    so one violation is a genuine failure;
``estimate``
    inequalities between suprema compared through two optimiser lower
    bounds; these can fail spuriously and carry a relative slack ``tau``;
``informational``
    measured values recorded without a verdict.

On the equispaced grids used here every constructive inequality also holds
exactly for the discrete measure (shifts by multiples of ``2pi/N`` preserve
the grid), so no quadrature slack is needed beyond rounding.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .ideal_norms import (OptimizerConfig, delta_estimate, duality_pair, rho_estimate,
                          stream_rng)
from .norms import GridFunction, VectorTuple, fourier_coefficients, modulate, tuple_norms
from .spaces import LinearOperator, NormedSpace, adjoint, compose, lp
from .systems import (SQRT2, QuadratureGrid, TensorSystem, conjugate, cosine, exponential,
                      exponential_range, integrate_subinterval, sine)

TAU = 0.05
TUPLE_SLACK = 1e-8
IDENTITY_TOL = 1e-10

# constants appearing in the chain of estimates
SUBINTERVAL_CONSTANT = (4 + SQRT2) / (2 * math.sin(math.pi / 3))  # 3.1258...
COSINE_SINE_CONSTANT = math.sqrt(25 + 16 + 25)  # sqrt(66) = 8.1240...
COSINE_SINE_REFINED = math.sqrt(SUBINTERVAL_CONSTANT ** 2 + 2 * (SUBINTERVAL_CONSTANT + 1) ** 2)  # 6.6194...

UNIVERSALITY_NOTE = (
    "The equivalence constants are claims about all operators between all Banach spaces; "
    "this report samples finitely many finite-dimensional l_p spaces and operators and "
    "cannot certify universality.")


@dataclass
class CheckResult:
    check_id: str
    check_class: str
    instance: dict
    lhs: float
    rhs: float
    constant: float
    slack: float = 0.0
    abs_tol: float = 0.0
    verdict: str = ""
    ratio: Optional[float] = None
    note: str = ""

    def __post_init__(self):
        self.lhs, self.rhs, self.constant = float(self.lhs), float(self.rhs), float(self.constant)
        if self.ratio is None and self.rhs != 0:
            self.ratio = self.lhs / self.rhs
        if not self.verdict:
            if self.check_class == "informational":
                self.verdict = "informational"
            else:
                bound = self.constant * self.rhs * (1 + self.slack) + self.abs_tol
                self.verdict = "pass" if self.lhs <= bound else "fail"

    @property
    def failed(self) -> bool:
        return self.verdict == "fail"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CheckResult":
        return cls(**d)


def _identity(check_id, instance, residual, note=""):
    return CheckResult(check_id, "identity", instance, residual, 0.0, 0.0,
                       abs_tol=IDENTITY_TOL, note=note)


def _constructive(check_id, instance, lhs, rhs, constant=1.0, note=""):
    tol = TUPLE_SLACK * max(1.0, abs(constant * rhs))
    return CheckResult(check_id, "constructive", instance, lhs, rhs, constant,
                       abs_tol=tol, note=note)


def _estimate(check_id, instance, lhs, rhs, constant, tau=TAU, note=""):
    return CheckResult(check_id, "estimate", instance, lhs, rhs, constant, slack=tau, note=note)


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("UMDNORMS_THREADS", "1")))
    except ValueError:
        return 1


def ordered_map(fn, items: Iterable):
    """``map`` over independent jobs, possibly threaded, results in input order."""
    items = list(items)
    workers = min(thread_count(), len(items)) or 1
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _random_space(rng, dim_max=6, kinds=(1.0, 2.0, math.inf)) -> NormedSpace:
    p = kinds[int(rng.integers(len(kinds)))]
    field_ = "complex" if rng.integers(2) else "real"
    return NormedSpace(int(rng.integers(1, dim_max + 1)), p, field_)


def _norm(space, X, system, grid) -> float:
    V, w = system.sample(grid)
    return float(tuple_norms(space, np.asarray(X), V, w))


def _cos_norm(space, X, freqs, grid) -> float:
    """``||sum_k x_k sqrt2 cos(f_k t) | L_2||`` for arbitrary frequencies (0 allowed)."""
    V = SQRT2 * np.cos(np.multiply.outer(np.asarray(freqs, float), grid.nodes))
    return float(tuple_norms(space, np.asarray(X), V, grid.weights))


# -- exact identities ----------------------------------------------------------


def shift_identity_residuals(X: np.ndarray, t: float):
    """Residuals of the two product-to-sum identities for ``2 sin t`` times a sine/cosine sum."""
    n = X.shape[0]
    pad = np.zeros((n + 4,) + X.shape[1:], dtype=X.dtype)
    pad[2:n + 2] = X  # pad[k + 1] holds x_k for k = -1..n+2

    def x(k):
        return pad[k + 1]

    k = np.arange(1, n + 1)
    lhs_s = 2 * math.sin(t) * (np.sin(k * t) @ X)
    rhs_s = sum((x(j + 1) - x(j - 1)) * math.cos(j * t) for j in range(0, n + 2))
    lhs_c = 2 * math.sin(t) * (np.cos(k * t) @ X)
    rhs_c = sum((x(j - 1) - x(j + 1)) * math.sin(j * t) for j in range(1, n + 2))
    return float(np.max(np.abs(lhs_s - rhs_s))), float(np.max(np.abs(lhs_c - rhs_c)))


def check_identities(trials: int = 100, seed: int = 0, n_max: int = 16) -> List[CheckResult]:
    out = []
    for i in range(trials):
        rng = stream_rng(seed, "identities", i)
        space = _random_space(rng)
        n = int(rng.integers(1, n_max + 1))
        X = space.random_vectors(rng, (n,))
        inst = {"space": space.literal, "field": space.field, "n": n, "seed": seed, "trial": i}
        points = np.concatenate([[0.0], rng.uniform(-np.pi, np.pi, 4)])
        res = np.array([shift_identity_residuals(X, float(t)) for t in points])
        out.append(_identity("shift_identity.sine", inst, res[:, 0].max()))
        out.append(_identity("shift_identity.cosine", inst, res[:, 1].max()))

        grid = QuadratureGrid(8 * (n + 2))
        E = exponential(n)
        a, b = _norm(space, X, E, grid), _norm(space, X, conjugate(E), grid)
        out.append(_identity("conjugation", inst, abs(a - b) / max(a, 1.0)))
        for left, right in ((sine(n), cosine(n)), (exponential(n), cosine(n))):
            u = _norm(space, X, TensorSystem(left, right), grid)
            v = _norm(space, X, TensorSystem(right, left), grid)
            out.append(_identity(f"tensor_symmetry.{left.literal}x{right.literal}", inst,
                                 abs(u - v) / max(u, 1.0)))
    return out


# -- per-input inequalities ---------------------------------------------------------


def _tuple_checks(space: NormedSpace, n: int, rng, inst) -> List[CheckResult]:
    grid = QuadratureGrid(8 * (n + 2))
    N = grid.N
    X = space.random_vectors(rng, (n,))
    C, S, E = cosine(n), sine(n), exponential(n)
    nC, nS, nE = (_norm(space, X, sys_, grid) for sys_ in (C, S, E))
    out = []

    SC = _norm(space, X, TensorSystem(S, C), grid)
    CS = _norm(space, X, TensorSystem(C, S), grid)
    SS = _norm(space, X, TensorSystem(S, S), grid)
    out.append(_constructive("sine_split.squares", inst, nS ** 2, SC ** 2 + CS ** 2))
    out.append(_constructive("sine_split.sqrt2", inst, nS, SC, SQRT2))

    shift = 2 * np.pi * int(rng.integers(N)) / N
    k = np.arange(1, n + 1)
    cs, sn = np.cos(k * shift)[:, None], np.sin(k * shift)[:, None]
    inst2 = dict(inst, s=shift)
    out.append(_constructive("modulation.cos_C_C", inst2, _norm(space, X * cs, C, grid), nC))
    out.append(_constructive("modulation.sin_S_C", inst2, _norm(space, X * sn, S, grid), nC))
    out.append(_constructive("modulation.cos_S_S", inst2, _norm(space, X * cs, S, grid), nS))
    out.append(_constructive("modulation.sin_C_S", inst2, _norm(space, X * sn, C, grid), nS))

    out.append(_constructive("sine_tensor", inst, SS ** 2, nC ** 2, 2.0))

    x0, xn1 = space.random_vectors(rng, (2,))
    full = np.vstack([x0[None], X, xn1[None]])
    rhs = (_cos_norm(space, full, range(0, n + 2), grid)
           + SQRT2 * float(space.norm(x0)) + float(space.norm(xn1)))
    out.append(_constructive("truncation.cosine", inst, nC, rhs))
    up = _norm(space, np.vstack([X, xn1[None]]), sine(n + 1), grid)
    out.append(_constructive("truncation.sine", inst, up, nS + float(space.norm(xn1))))
    zero = np.zeros_like(x0)
    same = _cos_norm(space, np.vstack([zero[None], X, zero[None]]), range(0, n + 2), grid)
    out.append(_identity("truncation.zero_ends", inst, abs(same - nC)))

    out.append(_constructive("trig_vs_exp.C_E", inst, nC, nE, SQRT2))
    out.append(_constructive("trig_vs_exp.S_E", inst, nS, nE, SQRT2))

    top = float(space.norm(X).max())
    for sys_ in (C, S, E, conjugate(E), TensorSystem(S, C)):
        out.append(_constructive(f"single_element.{sys_}", inst, top, _norm(space, X, sys_, grid)))

    # per-function subadditivity behind monotonicity in n, for a random T
    if n >= 3:
        m = int(rng.integers(2, n))
        r = int(rng.integers(1, m))
        r = min(r, n - m) if m + r > n else r
        T = np.eye(space.dim) + 0.5 * space.random_vectors(rng, (space.dim,))
        g = QuadratureGrid(8 * (m + r + 2))
        f = GridFunction(space, g, space.random_vectors(rng, (g.N,)))

        def coeff_norm(h, size, shift=0):
            c = fourier_coefficients(modulate(h, -shift), exponential(size)).entries
            return _norm(space, c @ T.T, exponential(size), g)

        inst3 = dict(inst, m=m, r=r)
        if m + r <= n:
            out.append(_constructive("mono.plus", inst3, coeff_norm(f, m + r),
                                     coeff_norm(f, m) + coeff_norm(f, r, m)))
        out.append(_constructive("mono.minus", inst3, coeff_norm(f, m - r),
                                 coeff_norm(f, m) + coeff_norm(f, r, m - r)))
    return out


def _tensor_lift_checks(dim: int, n: int, rng, inst) -> List[CheckResult]:
    """Integration step of the tensor lift on l_2, where rho(T | B, A) = ||T||_2 exactly."""
    H = lp(dim, 2.0, "complex")
    T = H.random_vectors(rng, (dim,))
    norm_T = float(np.linalg.norm(T, 2))
    X = H.random_vectors(rng, (n,))
    grid = QuadratureGrid(4 * (n + 1))
    out = []
    for B, A, F in ((sine(n), cosine(n), sine(n)), (cosine(n), sine(n), cosine(n)),
                    (exponential(n), cosine(n), sine(n))):
        lhs = _norm(H, X @ T.T, TensorSystem(B, F), grid)
        rhs = _norm(H, X, TensorSystem(A, F), grid)
        out.append(_constructive(f"tensor_lift.{B}.{A}.{F}", inst, lhs, rhs, norm_T))
    return out


def check_tuple_inequalities(trials: int = 100, spaces: Optional[Sequence[NormedSpace]] = None,
                             n_max: int = 16, seed: int = 0) -> List[CheckResult]:
    """Per-input inequalities on random tuples and functions.

    With ``spaces=None`` each trial draws a random l_1, l_2 or l_inf space of
    dimension at most 6 over a random field; otherwise the given spaces are
    used in turn.
    """
    def job(i):
        rng = stream_rng(seed, "tuple", i)
        space = _random_space(rng) if spaces is None else spaces[i % len(spaces)]
        n = int(rng.integers(1, n_max + 1))
        inst = {"space": space.literal, "field": space.field, "n": n, "seed": seed, "trial": i}
        res = _tuple_checks(space, n, rng, inst)
        res += _tensor_lift_checks(space.dim, n, rng, inst)
        return res

    return [r for chunk in ordered_map(job, range(trials)) for r in chunk]


# -- ideal-norm level --------------------------------------------------------------


def subinterval_sides(T: np.ndarray, X: np.ndarray, space_out: NormedSpace, space_in: NormedSpace, grid):
    """Left side over the middle third of (0, pi) and ``||(x_k) | S_n||``."""
    n = X.shape[0]
    k = np.arange(1, n + 1)
    TX = X @ T.T

    def integrand(t):
        vals = np.cos(np.multiply.outer(t, k)) @ TX
        return space_out.norm(vals) ** 2

    lhs = math.sqrt(2 / math.pi * integrate_subinterval(integrand, math.pi / 3, 2 * math.pi / 3))
    return lhs, _norm(space_in, X, sine(n), grid)


def _hilbert_factor_checks(space, n, cfg, grid, inst):
    rng = stream_rng(cfg.seed, f"hilbert-factor|{space}|{n}", 0)
    T = space.random_vectors(rng, (space.dim,))
    norm_T = float(np.linalg.norm(T, 2))
    out = []
    for j in range(4):
        X = space.random_vectors(rng, (n,))
        lhs, nS = subinterval_sides(T, X, space, space, grid)
        out.append(_constructive("subinterval", dict(inst, trial=j), lhs, norm_T * nS, 4.0))
        out.append(_constructive("subinterval.sharp", dict(inst, trial=j), lhs, norm_T * nS, SUBINTERVAL_CONSTANT))
        Xs = space.random_vectors(rng, (2 * n + 1,))  # x_{-n}, ..., x_n
        lhs7 = _norm(space, Xs[n + 1:] @ T.T, exponential(n), grid)
        rhs7 = _norm(space, Xs, exponential_range(-n, n), grid)
        out.append(_constructive("symmetrized", dict(inst, trial=j), lhs7, norm_T * rhs7, 4.0))
    Op = LinearOperator.identity(space)
    C, S = cosine(n), sine(n)
    small = QuadratureGrid(4 * (n + 1))
    r1 = rho_estimate(Op, S, TensorSystem(S, C), small, cfg)
    r3 = rho_estimate(Op, TensorSystem(S, S), C, small, cfg)
    out.append(_constructive("sine_split.ideal", inst, r1.value, 1.0, SQRT2, note=f"exact={r1.exact}"))
    out.append(_constructive("sine_tensor.ideal", inst, r3.value, 1.0, SQRT2, note=f"exact={r3.exact}"))
    return out


def chain_instance(space: NormedSpace, n: int, cfg: OptimizerConfig,
                   operator: Optional[LinearOperator] = None,
                   grid: Optional[QuadratureGrid] = None) -> dict:
    """The five sequence members and mu for one operator, with matched effort."""
    T = operator or LinearOperator.identity(space)
    grid = grid or QuadratureGrid.default(n)
    C, S, E = cosine(n), sine(n), exponential(n)
    rho_sc = rho_estimate(T, S, C, grid, cfg)
    rho_cs = rho_estimate(T, C, S, grid, cfg)
    return {
        "rho_SC": rho_sc,
        "rho_CS": rho_cs,
        "mu": max(rho_sc.value, rho_cs.value),
        "delta_EE": delta_estimate(T, E, E, grid, cfg),
        "delta_SC": delta_estimate(T, S, C, grid, cfg, rho=rho_sc),
        "delta_CS": delta_estimate(T, C, S, grid, cfg, rho=rho_cs),
    }


def chain_results(values: dict, inst: dict, tau: float = TAU) -> List[CheckResult]:
    """Result lines for the equivalence chain, given the values of :func:`chain_instance`."""
    v = {k: (x if isinstance(x, float) else x.value) for k, x in values.items()}
    out = [
        _estimate("swap_SC", inst, v["rho_SC"], v["rho_CS"], 2.0, tau),
        _estimate("swap_CS", inst, v["rho_CS"], v["rho_SC"], 9.0, tau),
        CheckResult("swap_CS.refined", "informational", inst, v["rho_CS"], v["rho_SC"], COSINE_SINE_REFINED),
        _estimate("delta_by_mu", inst, v["delta_EE"], v["mu"], 96.0, tau),
        _constructive("rho_le_delta.SC", inst, v["rho_SC"], v["delta_SC"]),
        _constructive("rho_le_delta.CS", inst, v["rho_CS"], v["delta_CS"]),
        _estimate("delta_pair.SC", inst, v["delta_SC"], v["delta_EE"], 2.0, tau),
        _estimate("delta_pair.CS", inst, v["delta_CS"], v["delta_EE"], 2.0, tau),
    ]
    out[4].abs_tol = out[5].abs_tol = 1e-9
    for r in out[4:6]:
        r.verdict = "pass" if r.lhs <= r.rhs + 1e-9 else "fail"
    lowest = min(v[k] for k in ("rho_SC", "rho_CS", "delta_EE", "delta_SC", "delta_CS"))
    out.append(CheckResult("lower_bound_operator_norm", "informational", inst, lowest, 1.0, 1.0,
                           note="estimates below ||T|| would indicate optimiser failure"))
    residuals = [x.doubling_residual for x in values.values()
                 if not isinstance(x, float) and x.doubling_residual is not None]
    if residuals:
        out.append(CheckResult("doubling_residual", "informational", inst, max(residuals), 1.0, 1e-8))
    return out


def check_constant_chain(spaces: Sequence[NormedSpace], n_list: Sequence[int],
                         cfg: OptimizerConfig = OptimizerConfig(),
                         tau: float = TAU) -> List[CheckResult]:
    def job(item):
        space, n = item
        inst = {"space": space.literal, "field": space.field, "n": n, "seed": cfg.seed,
                "restarts": cfg.restarts}
        grid = QuadratureGrid.default(n)
        res = chain_results(chain_instance(space, n, cfg, grid=grid), inst, tau)
        if space.is_hilbert:
            res += _hilbert_factor_checks(space, n, cfg, grid, inst)
        else:
            T = LinearOperator.identity(space)
            rho_sc = rho_estimate(T, sine(n), cosine(n), grid, cfg).value
            rng = stream_rng(cfg.seed, f"subinterval-info|{space}|{n}", 0)
            X = space.random_vectors(rng, (n,))
            lhs, nS = subinterval_sides(np.eye(space.dim), X, space, space, grid)
            res.append(CheckResult("subinterval.estimated_rho", "informational", inst, lhs, rho_sc * nS, 4.0,
                                   note="rho replaced by a lower bound; not a valid test"))
        return res

    items = [(s, n) for s in spaces for n in n_list]
    return [r for chunk in ordered_map(job, items) for r in chunk]


def _random_isometry(rng, m):
    """Columns of a random (m+1) x m complex matrix with orthonormal columns."""
    A = rng.standard_normal((m + 1, m)) + 1j * rng.standard_normal((m + 1, m))
    q, _ = np.linalg.qr(A)
    return q


def check_duality_and_injectivity(cfg: OptimizerConfig = OptimizerConfig(), n: int = 2,
                                  grid: Optional[QuadratureGrid] = None) -> List[CheckResult]:
    grid = grid or QuadratureGrid.default(n)
    E = exponential(n)
    out = []
    H = lp(3, 2.0)
    primal, dual = duality_pair(LinearOperator.identity(H), E, E, grid, cfg)
    out.append(_identity("duality.l2", {"space": H.literal, "n": n}, abs(primal.value - dual.value)))
    for p in (1.0, math.inf):
        X = lp(2, p)
        primal, dual = duality_pair(LinearOperator.identity(X), E, E, grid, cfg)
        out.append(CheckResult("duality.gap", "informational",
                               {"space": X.literal, "dual": X.dual().literal, "n": n,
                                "restarts": cfg.restarts, "seed": cfg.seed},
                               abs(primal.value - dual.value), primal.value, 0.0,
                               note=f"delta={primal.value!r} dual_delta={dual.value!r}"))

    rng = stream_rng(cfg.seed, "injectivity", 0)
    for m in (2, 3):
        small, big = lp(m, 2.0), lp(m + 1, 2.0)
        T = LinearOperator(small, small, small.random_vectors(rng, (m,)))
        J = LinearOperator(small, big, _random_isometry(rng, m))
        d1 = delta_estimate(T, E, E, grid, cfg).value
        d2 = delta_estimate(compose(J, T), E, E, grid, cfg).value
        out.append(_identity("injectivity.l2", {"m": m, "n": n}, abs(d1 - d2) / max(d1, 1.0)))

    # composition bound, every factor exact on Hilbert spaces
    for m in (2, 3):
        H = lp(m, 2.0)
        ops = [LinearOperator(H, H, H.random_vectors(rng, (m,))) for _ in range(3)]
        C, S = cosine(n), sine(n)
        lhs = delta_estimate(compose(ops[2], compose(ops[1], ops[0])), S, C, grid, cfg).value
        rhs = (rho_estimate(ops[2], S, E, grid, cfg).value
               * delta_estimate(ops[1], E, E, grid, cfg).value
               * rho_estimate(adjoint(ops[0]), conjugate(C), conjugate(E), grid, cfg).value)
        out.append(_constructive("composition", {"m": m, "n": n}, lhs, rhs))
    return out


SUITES = ("identities", "tuple", "chain", "duality", "all")


def run_suite(suite: str, trials: int, seed: int, cfg: Optional[OptimizerConfig] = None,
              n_max: int = 16) -> List[CheckResult]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    cfg = cfg or OptimizerConfig(seed=seed)
    out: List[CheckResult] = []
    if suite in ("identities", "all"):
        out += check_identities(trials, seed, n_max)
    if suite in ("tuple", "all"):
        out += check_tuple_inequalities(trials, None, n_max, seed)
    if suite in ("chain", "all"):
        spaces = [lp(2, 1.0), lp(3, 1.0), lp(2, math.inf), lp(3, math.inf), lp(4, 2.0)]
        out += check_constant_chain(spaces, (2, 4, 8, 12), cfg)
    if suite in ("duality", "all"):
        out += check_duality_and_injectivity(cfg)
    return out
