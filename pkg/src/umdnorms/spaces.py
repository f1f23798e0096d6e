"""Finite-dimensional normed spaces, their duals, and matrices between them.

Vectors are numpy arrays whose last axis has length ``space.dim``; all norm
and subgradient routines broadcast over the leading axes, which is what the
quadrature code relies on (one call evaluates the norm at every node).

The duality pairing is sesquilinear, ``<x, y> = sum_i x_i * conj(y_i)``.
With that convention the adjoint of a matrix operator is its conjugate
transpose, and a subgradient ``g`` of the norm at ``x`` is characterised by
``<x, g> = ||x||`` together with ``||g||_* = 1``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from dataclasses import field as dc_field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DimensionError, InvalidSpaceError, UMDNormsError

FIELDS = ("real", "complex")


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _format_p(p: float) -> str:
    if math.isinf(p):
        return "inf"
    if float(p).is_integer():
        return str(int(p))
    return repr(float(p))


@dataclass(frozen=True)
class NormedSpace:
    """A norm on K^dim.

    ``weights`` scale coordinates before the l_p norm is taken, i.e.
    ``||x|| = ||(w_i x_i)_i||_p``.  Under this convention the dual of a
    weighted l_p space is the weighted l_p' space with reciprocal weights.

    A custom norm is given by ``custom_norm`` and ``custom_subgradient``
    (both vectorised over leading axes) and optionally ``custom_dual``, a
    zero-argument callable returning the dual space.
    """

    dim: int
    p: float = 2.0
    field: str = "complex"
    weights: Optional[tuple] = None
    custom_norm: Optional[Callable] = dc_field(default=None, compare=False)
    custom_subgradient: Optional[Callable] = dc_field(default=None, compare=False)
    custom_dual: Optional[Callable] = dc_field(default=None, compare=False)
    name: Optional[str] = None

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidSpaceError(f"invalid space: dim must be a positive integer, got {self.dim}")
        if self.field not in FIELDS:
            raise InvalidSpaceError(f"invalid space: field must be one of {FIELDS}")
        if self.custom_norm is not None:
            if self.custom_subgradient is None:
                raise InvalidSpaceError("invalid space: custom norm needs a subgradient callback")
            return
        p = float(self.p)
        if not p >= 1:
            raise InvalidSpaceError(f"invalid space: p must lie in [1, inf], got {self.p}")
        object.__setattr__(self, "p", p)
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if len(w) != self.dim:
                raise InvalidSpaceError("invalid space: need one weight per coordinate")
            if not all(v > 0 and math.isfinite(v) for v in w):
                raise InvalidSpaceError("invalid space: weights must be positive and finite")
            object.__setattr__(self, "weights", w)

    # -- description -------------------------------------------------------

    @property
    def kind(self) -> str:
        if self.custom_norm is not None:
            return "custom"
        return "lp" if self.weights is None else "weighted_lp"

    @property
    def is_hilbert(self) -> bool:
        return self.custom_norm is None and self.p == 2.0

    @property
    def dtype(self):
        return np.complex128 if self.field == "complex" else np.float64

    @property
    def literal(self) -> str:
        if self.kind == "custom":
            return self.name or "custom"
        if self.kind == "weighted_lp":
            w = ";".join(_format_p(v) for v in self.weights)
            return f"wlp:p={_format_p(self.p)},w={w}"
        return f"l{_format_p(self.p)}:{self.dim}"

    def __str__(self):
        return self.literal

    # -- norm, subgradient, dual ------------------------------------------

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise DimensionError(
                f"dimension mismatch: expected last axis {self.dim}, got shape {x.shape}")
        return x

    def _scaled(self, x):
        if self.weights is None:
            return x
        return x * np.asarray(self.weights)

    def norm(self, x) -> np.ndarray:
        x = self._check(x)
        if self.custom_norm is not None:
            return np.asarray(self.custom_norm(x), dtype=float)
        a = np.abs(self._scaled(x))
        p = self.p
        if p == 1:
            return a.sum(axis=-1)
        if p == 2:
            return np.sqrt(np.einsum("...i,...i->...", a, a))
        if math.isinf(p):
            return a.max(axis=-1)
        m = a.max(axis=-1, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        return (m * ((a / safe) ** p).sum(axis=-1, keepdims=True) ** (1.0 / p))[..., 0]

    def subgradient(self, x) -> np.ndarray:
        """Subgradient of the norm at ``x``, broadcasting over leading axes.

        Ties are broken deterministically: at a zero coordinate the l_1
        subgradient takes +1, and the l_inf subgradient sits on the lowest
        index of maximal modulus.  Rows equal to zero map to zero here;
        :func:`norm_subgradient` is the checked public entry point.
        """
        x = self._check(x)
        if self.custom_norm is not None:
            return np.asarray(self.custom_subgradient(x))
        y = self._scaled(x)
        a = np.abs(y)
        p = self.p
        if p == 1:
            pos = a > 0
            g = np.divide(y, a, out=np.ones(y.shape, np.result_type(y.dtype, float)), where=pos)
            zero_rows = ~pos.any(axis=-1)
            if zero_rows.any():
                g[zero_rows] = 0.0
        elif math.isinf(p):
            idx = np.argmax(a, axis=-1)[..., None]
            top = np.take_along_axis(y, idx, axis=-1)
            mod = np.abs(top)
            phase = np.where(mod > 0, top / np.where(mod > 0, mod, 1.0), 0.0)
            g = np.zeros_like(y, dtype=np.result_type(y.dtype, float))
            np.put_along_axis(g, idx, phase, axis=-1)
        else:
            nrm = self.norm(x)[..., None]
            safe = np.where(nrm > 0, nrm, 1.0)
            if p == 2:
                g = y / safe
            else:
                g = y * (a / safe) ** (p - 2) / safe
            g = np.where(nrm > 0, g, 0.0)
        if self.weights is not None:
            g = g * np.asarray(self.weights)
        return g

    def dual(self) -> "NormedSpace":
        if self.custom_norm is not None:
            if self.custom_dual is None:
                raise UMDNormsError("no dual available for a custom norm without a dual callback")
            return self.custom_dual()
        w = None if self.weights is None else tuple(1.0 / v for v in self.weights)
        return NormedSpace(self.dim, conjugate_exponent(self.p), self.field, w)

    def random_vectors(self, rng: np.random.Generator, shape=()) -> np.ndarray:
        shape = tuple(shape) + (self.dim,)
        x = rng.standard_normal(shape)
        if self.field == "complex":
            x = x + 1j * rng.standard_normal(shape)
        return x


def pairing(x, y) -> np.ndarray:
    """Sesquilinear pairing ``sum_i x_i conj(y_i)`` over the last axis."""
    return np.einsum("...i,...i->...", np.asarray(x), np.conj(np.asarray(y)))


def norm(space: NormedSpace, x) -> np.ndarray:
    return space.norm(x)


def norm_subgradient(space: NormedSpace, x) -> np.ndarray:
    x = space._check(x)
    if np.any(space.norm(x) == 0):
        raise UMDNormsError("subgradient at zero is not defined")
    return space.subgradient(x)


def dual_space(space: NormedSpace) -> NormedSpace:
    return space.dual()


def lp(dim: int, p: float = 2.0, field: str = "complex") -> NormedSpace:
    return NormedSpace(dim, p, field)


def weighted_lp(p: float, weights: Sequence[float], field: str = "complex") -> NormedSpace:
    return NormedSpace(len(weights), p, field, tuple(weights))


_LP = re.compile(r"^l(?P<p>inf|[0-9]*\.?[0-9]+):(?P<dim>[0-9]+)$")
_WLP = re.compile(r"^wlp:p=(?P<p>inf|[0-9]*\.?[0-9]+),w=(?P<w>[^,]+)$")


def parse_space(text: str, field: str = "complex") -> NormedSpace:
    """Parse ``l1:4``, ``l2:8``, ``linf:3``, ``l3:2`` or ``wlp:p=3,w=1;2;0.5``."""
    s = text.strip()
    m = _LP.match(s)
    if m:
        p = math.inf if m["p"] == "inf" else float(m["p"])
        return NormedSpace(int(m["dim"]), p, field)
    m = _WLP.match(s)
    if m:
        p = math.inf if m["p"] == "inf" else float(m["p"])
        try:
            w = tuple(float(v) for v in m["w"].split(";"))
        except ValueError:
            raise UMDNormsError(f"cannot parse weights in space literal {text!r}") from None
        return NormedSpace(len(w), p, field, w)
    raise UMDNormsError(f"cannot parse space literal {text!r} at position 0")


@dataclass(frozen=True)
class LinearOperator:
    """Matrix operator; ``matrix`` has shape (codomain.dim, domain.dim)."""

    domain: NormedSpace
    codomain: NormedSpace
    matrix: np.ndarray = dc_field(compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.result_type(np.asarray(self.matrix).dtype, float))
        if m.shape != (self.codomain.dim, self.domain.dim):
            raise DimensionError(
                f"dimension mismatch: matrix shape {m.shape} does not map "
                f"{self.domain.dim} -> {self.codomain.dim}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, space: NormedSpace) -> "LinearOperator":
        return cls(space, space, np.eye(space.dim))

    def apply(self, x) -> np.ndarray:
        x = self.domain._check(x)
        return x @ self.matrix.T

    @property
    def is_zero(self) -> bool:
        return not np.any(self.matrix)

    def __eq__(self, other):
        if not isinstance(other, LinearOperator):
            return NotImplemented
        return (self.domain == other.domain and self.codomain == other.codomain
                and np.array_equal(self.matrix, other.matrix))

    def __hash__(self):
        return hash((self.domain, self.codomain, self.matrix.tobytes()))

    def euclidean_matrix(self) -> np.ndarray:
        """Matrix of the operator in coordinates where both weighted norms become plain l_2."""
        m = self.matrix
        if self.codomain.weights is not None:
            m = np.asarray(self.codomain.weights)[:, None] * m
        if self.domain.weights is not None:
            m = m / np.asarray(self.domain.weights)[None, :]
        return m


def adjoint(T: LinearOperator) -> LinearOperator:
    return LinearOperator(T.codomain.dual(), T.domain.dual(), np.conj(T.matrix).T)


def compose(S: LinearOperator, T: LinearOperator) -> LinearOperator:
    """``S o T``; requires ``T.codomain`` to have the dimension of ``S.domain``."""
    if S.domain.dim != T.codomain.dim:
        raise DimensionError("dimension mismatch in composition")
    return LinearOperator(T.domain, S.codomain, S.matrix @ T.matrix)
