"""Dirichlet and de la Vallee Poussin kernels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AliasingError, UMDNormsError
from .norms import GridFunction
from .systems import QuadratureGrid


@dataclass(frozen=True)
class KernelSpec:
    kind: str  # "dirichlet" or "vallee_poussin"
    order: int

    def __post_init__(self):
        if self.kind not in ("dirichlet", "vallee_poussin"):
            raise UMDNormsError(f"unknown kernel kind {self.kind!r}")
        if int(self.order) != self.order or self.order < 1:
            raise UMDNormsError("kernel parameter must be a positive integer")

    @property
    def degree(self) -> int:
        return self.order if self.kind == "dirichlet" else 2 * self.order - 1


def dirichlet(k: int) -> KernelSpec:
    return KernelSpec("dirichlet", k)


def vallee_poussin(m: int) -> KernelSpec:
    return KernelSpec("vallee_poussin", m)


def _dirichlet_sum(k: int, t: np.ndarray) -> np.ndarray:
    l = np.arange(-k, k + 1)
    return np.exp(1j * np.multiply.outer(t, l)).sum(axis=-1)


def kernel_eval(spec: KernelSpec, t):
    """Kernel values by direct summation of exponentials."""
    t = np.asarray(t, dtype=float)
    if spec.kind == "dirichlet":
        v = _dirichlet_sum(spec.order, t)
    else:
        m = spec.order
        v = sum(_dirichlet_sum(k, t) for k in range(m, 2 * m)) / m
    scale = max(1.0, float(np.max(np.abs(v.real), initial=0.0)))
    assert np.max(np.abs(v.imag), initial=0.0) < 1e-12 * scale, "kernel sum is not real"
    return v.real


def vp_coefficient(m: int, k) -> np.ndarray:
    """Fourier coefficient of the m-th de la Vallee Poussin kernel at frequency k."""
    a = np.abs(np.asarray(k))
    return np.where(a <= m, 1.0, np.where(a < 2 * m, (2 * m - a) / m, 0.0))


def vp_l1_norm(m: int, grid: QuadratureGrid) -> float:
    """``(1/2pi) int |V_m(t)| dt`` by quadrature on the grid."""
    if grid.N < 8 * (2 * m - 1):
        raise UMDNormsError(f"grid of {grid.N} nodes is too coarse for V_{m} (need N >= {8 * (2 * m - 1)})")
    return float(grid.integrate(np.abs(kernel_eval(vallee_poussin(m), grid.nodes))))


def vp_apply(m: int, f: GridFunction) -> GridFunction:
    """Apply the de la Vallee Poussin operator as a Fourier multiplier."""
    N = f.grid.N
    if 2 * (2 * m - 1) >= N:
        raise AliasingError(f"aliasing: V_{m} has degree {2 * m - 1}, beyond the Nyquist limit of {N} nodes")
    k = np.rint(np.fft.fftfreq(N) * N)
    mult = vp_coefficient(m, k)
    out = np.fft.ifft(np.fft.fft(f.values, axis=0) * mult[:, None], axis=0)
    if not np.iscomplexobj(f.values):
        out = out.real
    return GridFunction(f.space, f.grid, out)
