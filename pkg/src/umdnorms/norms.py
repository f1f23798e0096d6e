"""System norms of vector tuples and L_2 norms of vector-valued grid functions.

A :class:`GridFunction` is identified with its trigonometric interpolant of
degree below ``N/2`` (for even ``N`` the Nyquist mode is split evenly
between ``+N/2`` and ``-N/2``).  Under that identification Fourier
coefficients computed by node sums are exact, and resampling onto a finer
grid is well defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import AliasingError, DimensionError, UMDNormsError
from .spaces import NormedSpace
from .systems import QuadratureGrid, System, TensorSystem, check_resolution


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class VectorTuple:
    space: NormedSpace
    entries: np.ndarray = field(compare=False)

    def __post_init__(self):
        e = np.asarray(self.entries)
        if e.ndim != 2 or e.shape[1] != self.space.dim:
            raise DimensionError(
                f"dimension mismatch: tuple entries must have shape (n, {self.space.dim}), got {e.shape}")
        object.__setattr__(self, "entries", _frozen(e))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __eq__(self, other):
        if not isinstance(other, VectorTuple):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.entries, other.entries)

    __hash__ = None


@dataclass(frozen=True)
class GridFunction:
    space: NormedSpace
    grid: QuadratureGrid
    values: np.ndarray = field(compare=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.shape != (self.grid.N, self.space.dim):
            raise DimensionError(
                f"dimension mismatch: samples must have shape ({self.grid.N}, {self.space.dim}), got {v.shape}")
        object.__setattr__(self, "values", _frozen(v))

    def __eq__(self, other):
        if not isinstance(other, GridFunction):
            return NotImplemented
        return (self.space == other.space and self.grid == other.grid
                and np.array_equal(self.values, other.values))

    __hash__ = None


def tuple_norms(space: NormedSpace, X: np.ndarray, V: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``(sum_m w_m ||sum_k X[..., k, :] V[k, m]||^2)^(1/2)`` for a stack of tuples."""
    Y = np.matmul(V.T, X)
    r = space.norm(Y)
    return np.sqrt((r * r) @ w)


def system_norm(xs: VectorTuple, system: System, grid: Optional[QuadratureGrid] = None) -> float:
    if system.size != xs.n:
        raise DimensionError(f"dimension mismatch: system has {system.size} members, tuple has {xs.n}")
    grid = grid or QuadratureGrid.default(system.max_frequency)
    check_resolution(system, grid)
    V, w = system.sample(grid)
    return float(tuple_norms(xs.space, xs.entries, V, w))


def doubling_residual(xs: VectorTuple, system: System, grid: Optional[QuadratureGrid] = None) -> float:
    """Relative change of :func:`system_norm` when the grid is doubled."""
    grid = grid or QuadratureGrid.default(system.max_frequency)
    a = system_norm(xs, system, grid)
    b = system_norm(xs, system, grid.refined())
    return abs(a - b) / max(abs(b), 1e-300)


def l2_norm(f: GridFunction) -> float:
    r = f.space.norm(f.values)
    return float(np.sqrt((r * r) @ f.grid.weights))


def synthesize(xs: VectorTuple, system: System, grid: QuadratureGrid) -> GridFunction:
    """Samples of ``sum_k x_k a_k`` on the grid."""
    if isinstance(system, TensorSystem):
        raise UMDNormsError("grid functions live on the circle; tensor systems are not supported here")
    if system.size != xs.n:
        raise DimensionError(f"dimension mismatch: system has {system.size} members, tuple has {xs.n}")
    V, _ = system.sample(grid)
    return GridFunction(xs.space, grid, V.T @ xs.entries)


def fourier_coefficients(f: GridFunction, system: System) -> VectorTuple:
    if isinstance(system, TensorSystem):
        raise UMDNormsError("grid functions live on the circle; tensor systems are not supported here")
    if 2 * system.max_frequency >= f.grid.N:
        raise AliasingError(
            f"aliasing: {system} has frequency {system.max_frequency} at or above "
            f"the Nyquist limit of a {f.grid.N}-node grid")
    V, w = system.sample(f.grid)
    return VectorTuple(f.space, (np.conj(V) * w) @ f.values)


def modulate(f: GridFunction, l: int) -> GridFunction:
    """Pointwise product with ``e_l(t) = exp(i l t)``."""
    if l == 0:
        return f
    phase = np.exp(1j * l * f.grid.nodes)
    return GridFunction(f.space, f.grid, f.values * phase[:, None])


def interpolant_coefficients(values: np.ndarray):
    """Frequencies and coefficients of the trigonometric interpolant of samples on a grid.

    Returns ``(freqs, coeffs)`` with ``coeffs[i]`` the vector coefficient of
    ``exp(i freqs[i] t)``.  For even ``N`` the Nyquist coefficient appears
    twice, at ``+N/2`` and ``-N/2``, each with half the weight.
    """
    values = np.asarray(values)
    N = values.shape[0]
    F = np.fft.fft(values, axis=0) / N
    k = np.rint(np.fft.fftfreq(N) * N).astype(int)
    # nodes start at -pi: shift by exp(i k pi)
    coeffs = F * ((-1.0) ** (k % 2))[:, None]
    if N % 2 == 0:
        nyq = np.flatnonzero(k == -N // 2)[0]
        coeffs[nyq] *= 0.5
        k = np.append(k, N // 2)
        coeffs = np.vstack([coeffs, coeffs[nyq]])
    return k, coeffs


def resample(f: GridFunction, grid: QuadratureGrid) -> GridFunction:
    """Evaluate the trigonometric interpolant of ``f`` on another grid."""
    k, c = interpolant_coefficients(f.values)
    E = np.exp(1j * np.multiply.outer(grid.nodes, k))
    out = E @ c
    if not np.iscomplexobj(f.values):
        out = out.real
    return GridFunction(f.space, grid, out)
