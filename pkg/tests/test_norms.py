import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from umdnorms.errors import AliasingError, DimensionError, UMDNormsError
from umdnorms.norms import (GridFunction, VectorTuple, doubling_residual, fourier_coefficients,
                            interpolant_coefficients, l2_norm, modulate, resample, synthesize,
                            system_norm)
from umdnorms.spaces import lp
from umdnorms.systems import (QuadratureGrid, conjugate, cosine, exponential, sine, tensor)

from . import oracles

SYSTEMS = {"E": exponential, "C": cosine, "S": sine}
SPACE_P = [1.0, 2.0, math.inf]


@pytest.mark.parametrize("make", [exponential, cosine, sine])
@pytest.mark.parametrize("p", SPACE_P + [3.0])
def test_single_element_value(make, p):
    X = lp(3, p)
    x = np.array([[1.0, -2.0, 0.5j]])
    x = x * 2 / X.norm(x[0])
    assert system_norm(VectorTuple(X, x), make(1)) == pytest.approx(2.0, rel=1e-12)


def test_parseval_examples():
    X = lp(3)
    xs = VectorTuple(X, np.array([[1.0, 0, 0], [0, 1.0, 0]]))
    assert system_norm(xs, cosine(2)) == pytest.approx(math.sqrt(2), rel=1e-14)


@given(kind=st.sampled_from("ECS"), n=st.integers(1, 10), dim=st.integers(1, 4),
       seed=st.integers(0, 2 ** 32 - 1))
def test_hilbert_collapse(kind, n, dim, seed):
    rng = np.random.default_rng(seed)
    X = lp(dim)
    x = X.random_vectors(rng, (n,))
    expected = np.linalg.norm(x)
    assert system_norm(VectorTuple(X, x), SYSTEMS[kind](n), QuadratureGrid(2 * n + 1)) == pytest.approx(expected, rel=1e-10)


def test_scalar_linf_against_fine_midpoint_rule():
    X = lp(1, math.inf)
    x = np.array([[1.0], [1.0]])
    ref = oracles.midpoint_system_norm(x, "C", math.inf)
    assert system_norm(VectorTuple(X, x), cosine(2)) == pytest.approx(ref, abs=1e-6)


@pytest.mark.parametrize("p", [1.0, math.inf])
@pytest.mark.parametrize("kind", ["E", "C", "S"])
def test_non_hilbert_against_fine_midpoint_rule(p, kind, rng):
    X = lp(3, p)
    x = X.random_vectors(rng, (4,))
    ref = oracles.midpoint_system_norm(x, kind, p, points=200_000)
    got = system_norm(VectorTuple(X, x), SYSTEMS[kind](4), QuadratureGrid(4096))
    assert got == pytest.approx(ref, rel=1e-6)


def test_size_mismatch():
    with pytest.raises(DimensionError, match="dimension"):
        system_norm(VectorTuple(lp(2), np.ones((3, 2))), cosine(2))
    with pytest.raises(DimensionError):
        VectorTuple(lp(2), np.ones((3, 3)))


@given(kind=st.sampled_from("ECS"), p=st.sampled_from(SPACE_P), n=st.integers(1, 12),
       seed=st.integers(0, 2 ** 32 - 1))
def test_single_element_bound(kind, p, n, seed):
    rng = np.random.default_rng(seed)
    X = lp(3, p)
    x = X.random_vectors(rng, (n,))
    val = system_norm(VectorTuple(X, x), SYSTEMS[kind](n))
    assert X.norm(x).max() <= val + 1e-10


@given(p=st.sampled_from(SPACE_P), n=st.integers(1, 12), seed=st.integers(0, 2 ** 32 - 1))
def test_conjugation_and_tensor_symmetry(p, n, seed):
    rng = np.random.default_rng(seed)
    X = lp(2, p)
    xs = VectorTuple(X, X.random_vectors(rng, (n,)))
    g = QuadratureGrid(4 * n + 4)
    a, b = system_norm(xs, exponential(n), g), system_norm(xs, conjugate(exponential(n)), g)
    assert a == pytest.approx(b, rel=1e-10)
    u = system_norm(xs, tensor(sine(n), cosine(n)), g)
    v = system_norm(xs, tensor(cosine(n), sine(n)), g)
    assert u == pytest.approx(v, rel=1e-10)


def test_doubling_residual_small_for_smooth_norm(rng):
    X = lp(3, 2.0)
    xs = VectorTuple(X, X.random_vectors(rng, (5,)))
    assert doubling_residual(xs, cosine(5)) < 1e-12
    Y = lp(3, 1.0)
    ys = VectorTuple(Y, Y.random_vectors(rng, (5,)))
    assert doubling_residual(ys, cosine(5)) < 1e-4


def test_l2_norm_examples(rng):
    X = lp(3)
    g = QuadratureGrid(16)
    x = np.array([2.0, -1.0, 2.0])
    assert l2_norm(GridFunction(X, g, np.tile(x, (16, 1)))) == pytest.approx(3.0)
    f = GridFunction(X, g, np.exp(1j * g.nodes)[:, None] * x)
    assert l2_norm(f) == pytest.approx(3.0)
    xs = VectorTuple(X, X.random_vectors(rng, (4,)))
    assert l2_norm(synthesize(xs, cosine(4), g)) == pytest.approx(system_norm(xs, cosine(4), g), rel=1e-10)


def test_grid_function_shape():
    with pytest.raises(DimensionError):
        GridFunction(lp(2), QuadratureGrid(8), np.zeros((7, 2)))


def test_fourier_coefficients_examples(rng):
    X = lp(2, 1.0)
    g = QuadratureGrid(32)
    xs = VectorTuple(X, X.random_vectors(rng, (5,)))
    f = synthesize(xs, exponential(5), g)
    assert np.allclose(fourier_coefficients(f, exponential(5)).entries, xs.entries, atol=1e-12)
    const = GridFunction(X, g, np.tile([1.0, 2.0], (32, 1)))
    assert np.allclose(fourier_coefficients(const, exponential(5)).entries, 0, atol=1e-15)
    x = np.array([1.0, -3.0])
    f = GridFunction(X, g, math.sqrt(2) * np.cos(2 * g.nodes)[:, None] * x)
    assert np.allclose(fourier_coefficients(f, sine(3)).entries, 0, atol=1e-15)
    assert np.allclose(fourier_coefficients(f, cosine(3)).entries, [[0, 0], x, [0, 0]], atol=1e-14)


def test_fourier_coefficients_aliasing():
    f = GridFunction(lp(1), QuadratureGrid(8), np.ones((8, 1)))
    with pytest.raises(AliasingError, match="aliasing"):
        fourier_coefficients(f, exponential(4))
    with pytest.raises(UMDNormsError):
        fourier_coefficients(f, tensor(sine(1), cosine(1)))


def test_modulate_examples(rng):
    X = lp(2, math.inf)
    g = QuadratureGrid(16)
    f = GridFunction(X, g, X.random_vectors(rng, (16,)))
    assert modulate(f, 0) is f
    x = np.array([1.0 + 1j, 2.0])
    f3 = GridFunction(X, g, np.exp(3j * g.nodes)[:, None] * x)
    assert np.allclose(modulate(f3, -3).values, x, atol=1e-14)
    assert l2_norm(modulate(f, 7)) == pytest.approx(l2_norm(f), rel=1e-12)


@pytest.mark.parametrize("N", [9, 16])
def test_interpolant_and_resample(N, rng):
    X = lp(2)
    g = QuadratureGrid(N)
    vals = X.random_vectors(rng, (N,))
    k, c = interpolant_coefficients(vals)
    assert np.allclose(np.exp(1j * np.multiply.outer(g.nodes, k)) @ c, vals, atol=1e-12)
    f = GridFunction(X, g, vals)
    fine = resample(f, g.refined(3))
    assert np.allclose(fine.values[::3], vals, atol=1e-12)
    if N % 2:
        # with an even node count the split Nyquist mode loses half its power
        assert l2_norm(fine) == pytest.approx(l2_norm(f), rel=1e-12)


def test_resample_keeps_real_functions_real():
    g = QuadratureGrid(8)
    f = GridFunction(lp(1, 2.0, "real"), g, np.cos(g.nodes)[:, None])
    out = resample(f, QuadratureGrid(32))
    assert not np.iscomplexobj(out.values)
    assert np.allclose(out.values[:, 0], np.cos(QuadratureGrid(32).nodes))
