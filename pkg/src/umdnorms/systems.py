"""Trigonometric orthonormal systems and the grids they are sampled on.

The normalised measure on the circle is ``dt / 2pi``.  On the equispaced
grid ``t_j = -pi + 2 pi j / N`` with weight ``1/N`` per node, the products
``a_j * conj(a_k)`` of members with maximal frequency ``n`` are integrated
exactly as soon as ``N >= 2n + 1``, so the systems are discretely
orthonormal there.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Tuple, Union

import numpy as np
from scipy.integrate import simpson

from .errors import AliasingError, UMDNormsError

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class QuadratureGrid:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise UMDNormsError(f"grid size must be a positive integer, got {self.N}")

    @classmethod
    def default(cls, n: int) -> "QuadratureGrid":
        return cls(max(256, 8 * (n + 1)))

    @cached_property
    def nodes(self) -> np.ndarray:
        t = -np.pi + 2.0 * np.pi * np.arange(self.N) / self.N
        t.setflags(write=False)
        return t

    @cached_property
    def weights(self) -> np.ndarray:
        w = np.full(self.N, 1.0 / self.N)
        w.setflags(write=False)
        return w

    def refined(self, factor: int = 2) -> "QuadratureGrid":
        return QuadratureGrid(self.N * factor)

    def integrate(self, values) -> np.ndarray:
        """Integral against ``dt/2pi`` of samples given along axis 0."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


_KINDS = ("exponential", "cosine", "sine")


@dataclass(frozen=True)
class TrigSystem:
    """Finite family of exponentials, or of sqrt(2)-normalised cosines or sines.

    ``frequencies[k-1]`` is the frequency of member ``k``.  A conjugated
    system evaluates to the complex conjugate of the underlying members.
    """

    kind: str
    frequencies: Tuple[int, ...]
    conjugated: bool = False

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise UMDNormsError(f"unknown system kind {self.kind!r}")
        object.__setattr__(self, "frequencies", tuple(int(f) for f in self.frequencies))
        if not self.frequencies:
            raise UMDNormsError("a system needs at least one member")

    @property
    def size(self) -> int:
        return len(self.frequencies)

    @property
    def max_frequency(self) -> int:
        return max(abs(f) for f in self.frequencies)

    @property
    def is_real(self) -> bool:
        return self.kind != "exponential"

    def values(self, t) -> np.ndarray:
        """Members evaluated at the points ``t``; shape ``(size,) + t.shape``."""
        t = np.asarray(t, dtype=float)
        kt = np.multiply.outer(np.asarray(self.frequencies, dtype=float), t)
        if self.kind == "exponential":
            v = np.exp(-1j * kt if self.conjugated else 1j * kt)
        elif self.kind == "cosine":
            v = SQRT2 * np.cos(kt)
        else:
            v = SQRT2 * np.sin(kt)
        return v

    def evaluate(self, k: int, t):
        if not 1 <= k <= self.size:
            raise UMDNormsError(f"member index {k} out of range 1..{self.size}")
        return self.values(np.asarray(t))[k - 1]

    def sample(self, grid: QuadratureGrid):
        """Member values at the grid nodes, shape (size, N), and node weights."""
        return self.values(grid.nodes), grid.weights

    @property
    def literal(self) -> str:
        n = self.size
        bar = "bar" if self.conjugated else ""
        if self.kind == "cosine" and self.frequencies == tuple(range(1, n + 1)):
            return f"C{bar}:{n}"
        if self.kind == "sine" and self.frequencies == tuple(range(1, n + 1)):
            return f"S{bar}:{n}"
        if self.kind == "exponential":
            lo, hi = self.frequencies[0], self.frequencies[-1]
            if self.frequencies == tuple(range(lo, hi + 1)):
                if lo == 1:
                    return f"E{bar}:{hi}"
                return f"Erange{bar}:{lo}..{hi}"
        raise UMDNormsError("system has no literal form")

    def __str__(self):
        try:
            return self.literal
        except UMDNormsError:
            return f"{self.kind}{self.frequencies}"


def exponential(n: int) -> TrigSystem:
    return TrigSystem("exponential", tuple(range(1, n + 1)))


def exponential_range(lo: int, hi: int) -> TrigSystem:
    if hi < lo:
        raise UMDNormsError(f"empty frequency range {lo}..{hi}")
    return TrigSystem("exponential", tuple(range(lo, hi + 1)))


def cosine(n: int) -> TrigSystem:
    return TrigSystem("cosine", tuple(range(1, n + 1)))


def sine(n: int) -> TrigSystem:
    return TrigSystem("sine", tuple(range(1, n + 1)))


def conjugate(system: "System") -> "System":
    if isinstance(system, TensorSystem):
        return TensorSystem(conjugate(system.left), conjugate(system.right))
    return TrigSystem(system.kind, system.frequencies, not system.conjugated)


@dataclass(frozen=True)
class TensorSystem:
    """Members ``(s, t) -> left_k(s) * right_k(t)``, sampled on the product grid."""

    left: TrigSystem
    right: TrigSystem

    def __post_init__(self):
        if self.left.size != self.right.size:
            raise UMDNormsError(
                f"tensor size mismatch: {self.left.size} vs {self.right.size}")

    @property
    def size(self) -> int:
        return self.left.size

    @property
    def max_frequency(self) -> int:
        return max(self.left.max_frequency, self.right.max_frequency)

    @property
    def is_real(self) -> bool:
        return self.left.is_real and self.right.is_real

    def evaluate(self, k: int, point):
        s, t = point
        return self.left.evaluate(k, s) * self.right.evaluate(k, t)

    def sample(self, grid: QuadratureGrid):
        a = self.left.values(grid.nodes)
        b = self.right.values(grid.nodes)
        v = (a[:, :, None] * b[:, None, :]).reshape(self.size, -1)
        w = np.full(grid.N * grid.N, 1.0 / (grid.N * grid.N))
        return v, w

    @property
    def literal(self) -> str:
        left, right = self.left.literal, self.right.literal
        lk, ln = left.split(":")
        rk, _ = right.split(":")
        if lk.startswith("Erange") or rk.startswith("Erange"):
            raise UMDNormsError("tensor system has no literal form")
        return f"{lk}x{rk}:{ln}"

    def __str__(self):
        try:
            return self.literal
        except UMDNormsError:
            return f"({self.left})x({self.right})"


System = Union[TrigSystem, TensorSystem]


def tensor(left: TrigSystem, right: TrigSystem) -> TensorSystem:
    return TensorSystem(left, right)


def evaluate(system: System, k: int, point):
    return system.evaluate(k, point)


def check_resolution(system: System, grid: QuadratureGrid) -> None:
    """Raise :class:`AliasingError` unless the grid integrates the Gram matrix exactly."""
    if grid.N < 2 * system.max_frequency + 1:
        raise AliasingError(
            f"aliasing: grid of {grid.N} nodes cannot resolve {system} "
            f"(need N >= {2 * system.max_frequency + 1})")


def gram_deviation(system: System, grid: QuadratureGrid) -> float:
    v, w = system.sample(grid)
    gram = (v * w) @ np.conj(v).T
    return float(np.max(np.abs(gram - np.eye(system.size))))


_BASIC = {"E": ("exponential", False), "Ebar": ("exponential", True),
          "C": ("cosine", False), "Cbar": ("cosine", True),
          "S": ("sine", False), "Sbar": ("sine", True)}


def _basic(key: str, n: int) -> TrigSystem:
    kind, conj = _BASIC[key]
    return TrigSystem(kind, tuple(range(1, n + 1)), conj)


_RANGE = re.compile(r"^Erange(?P<bar>bar)?:(?P<lo>-?[0-9]+)\.\.(?P<hi>-?[0-9]+)$")
_SIMPLE = re.compile(r"^(?P<key>Ebar|Cbar|Sbar|E|C|S):(?P<n>[0-9]+)$")
_TENSOR = re.compile(r"^(?P<l>Ebar|Cbar|Sbar|E|C|S)x(?P<r>Ebar|Cbar|Sbar|E|C|S):(?P<n>[0-9]+)$")


def parse_system(text: str) -> System:
    """Parse ``E:n``, ``C:n``, ``S:n``, ``Ebar:n``, ``Erange:lo..hi`` or ``SxC:n``."""
    s = text.strip()
    m = _SIMPLE.match(s)
    if m and int(m["n"]) >= 1:
        return _basic(m["key"], int(m["n"]))
    m = _RANGE.match(s)
    if m:
        sys_ = exponential_range(int(m["lo"]), int(m["hi"]))
        return conjugate(sys_) if m["bar"] else sys_
    m = _TENSOR.match(s)
    if m and int(m["n"]) >= 1:
        n = int(m["n"])
        return TensorSystem(_basic(m["l"], n), _basic(m["r"], n))
    raise UMDNormsError(f"cannot parse system literal {text!r} at position 0")


def integrate_subinterval(func: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                          rtol: float = 1e-9, intervals: int = 64, max_doublings: int = 16) -> float:
    """Composite Simpson integral of ``func`` over ``[a, b]`` (plain dt, not dt/2pi).

    The number of subintervals doubles until two successive levels agree to
    ``rtol`` relative.
    """
    prev = None
    m = intervals
    for _ in range(max_doublings + 1):
        t = np.linspace(a, b, m + 1)
        val = float(simpson(np.asarray(func(t), dtype=float), x=t))
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        prev = val
        m *= 2
    raise UMDNormsError(f"Simpson refinement did not reach rtol={rtol} on [{a}, {b}]")
