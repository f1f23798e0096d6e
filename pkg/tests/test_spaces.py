import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from umdnorms.errors import DimensionError, InvalidSpaceError, UMDNormsError
from umdnorms.spaces import (LinearOperator, NormedSpace, adjoint, compose, dual_space, lp,
                             norm, norm_subgradient, pairing, parse_space, weighted_lp)

P_VALUES = [1.0, 1.5, 2.0, 3.0, math.inf]


def random_space(draw_p, dim, field, weighted, rng):
    w = tuple(rng.uniform(0.2, 3.0, dim)) if weighted else None
    return NormedSpace(dim, draw_p, field, w)


@pytest.mark.parametrize("space, x, expected", [
    (lp(2, 2.0), [3, 4], 5.0),
    (lp(2, 1.0), [3, -4], 7.0),
    (lp(3, math.inf), [1, -2, 0.5], 2.0),
    (lp(2, 3.0), [1, 1], 2 ** (1 / 3)),
    (weighted_lp(1.0, [1, 2]), [1, 1j], 3.0),
])
def test_norm_examples(space, x, expected):
    assert norm(space, np.array(x)) == pytest.approx(expected, rel=1e-15)


def test_norm_rejects_wrong_dimension():
    with pytest.raises(DimensionError, match="dimension"):
        norm(lp(3), np.ones(2))


@pytest.mark.parametrize("weights", [(1.0, -2.0), (0.0, 1.0), (1.0,)])
def test_invalid_weights(weights):
    with pytest.raises(InvalidSpaceError, match="invalid space"):
        NormedSpace(2, 2.0, "complex", weights)


@pytest.mark.parametrize("bad", [dict(dim=0), dict(dim=2, p=0.5), dict(dim=2, field="quaternion")])
def test_invalid_spaces(bad):
    with pytest.raises(InvalidSpaceError):
        NormedSpace(**bad)


@given(p=st.sampled_from(P_VALUES), dim=st.integers(1, 6), field=st.sampled_from(["real", "complex"]),
       weighted=st.booleans(), seed=st.integers(0, 2 ** 32 - 1))
def test_norm_axioms(p, dim, field, weighted, seed):
    rng = np.random.default_rng(seed)
    X = random_space(p, dim, field, weighted, rng)
    x, y = X.random_vectors(rng, (2,))
    lam = complex(rng.standard_normal(), rng.standard_normal()) if field == "complex" else rng.standard_normal()
    assert X.norm(np.zeros(dim)) == 0
    assert X.norm(x) > 1e-14
    assert X.norm(lam * x) == pytest.approx(abs(lam) * X.norm(x), rel=1e-12)
    assert X.norm(x + y) <= (X.norm(x) + X.norm(y)) * (1 + 1e-12)


def test_p2_is_euclidean(rng):
    x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    assert lp(5).norm(x) == pytest.approx(np.linalg.norm(x), rel=1e-15)


def test_norm_broadcasts_over_leading_axes(rng):
    X = lp(3, 1.0)
    v = X.random_vectors(rng, (4, 5))
    out = X.norm(v)
    assert out.shape == (4, 5)
    assert out[2, 3] == X.norm(v[2, 3])


@pytest.mark.parametrize("space, x, expected", [
    (lp(2, 2.0), [3, 4], [0.6, 0.8]),
    (lp(2, math.inf), [2, 2], [1, 0]),
    (lp(2, 1.0), [0, -5], [1, -1]),
    (lp(3, math.inf), [1, -3, 3], [0, -1, 0]),
])
def test_subgradient_examples(space, x, expected):
    x = np.array(x, dtype=float)
    g = norm_subgradient(space, x)
    assert np.allclose(g, expected, atol=1e-15)
    assert pairing(x, g).real == pytest.approx(space.norm(x), rel=1e-14)
    assert space.dual().norm(g) == pytest.approx(1.0, rel=1e-14)


def test_subgradient_at_zero():
    with pytest.raises(UMDNormsError, match="subgradient at zero"):
        norm_subgradient(lp(2, 1.0), np.zeros(2))


@given(p=st.sampled_from(P_VALUES), dim=st.integers(1, 6), weighted=st.booleans(),
       seed=st.integers(0, 2 ** 32 - 1))
def test_subgradient_norming(p, dim, weighted, seed):
    rng = np.random.default_rng(seed)
    X = random_space(p, dim, "complex", weighted, rng)
    x = X.random_vectors(rng)
    g = norm_subgradient(X, x)
    assert abs(pairing(x, g) - X.norm(x)) <= 1e-12 * X.norm(x)
    assert X.dual().norm(g) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("space, expected", [
    (lp(4, 1.0), lp(4, math.inf)),
    (lp(4, math.inf), lp(4, 1.0)),
    (lp(3, 2.0), lp(3, 2.0)),
    (lp(2, 3.0), lp(2, 1.5)),
    (weighted_lp(3.0, [1, 2]), weighted_lp(1.5, [1, 0.5])),
])
def test_dual_space(space, expected):
    assert dual_space(space) == expected


@given(p=st.sampled_from(P_VALUES), dim=st.integers(1, 5), weighted=st.booleans(),
       seed=st.integers(0, 2 ** 32 - 1))
def test_holder_and_bidual(p, dim, weighted, seed):
    rng = np.random.default_rng(seed)
    X = random_space(p, dim, "complex", weighted, rng)
    x, y = X.random_vectors(rng, (2,))
    assert abs(pairing(x, y)) <= X.norm(x) * X.dual().norm(y) * (1 + 1e-12)
    assert X.dual().dual().norm(x) == pytest.approx(X.norm(x), rel=1e-12)


def test_custom_norm_needs_dual_callback():
    X = NormedSpace(2, custom_norm=lambda x: np.abs(x).sum(-1),
                    custom_subgradient=lambda x: np.sign(x), name="mine")
    assert X.kind == "custom"
    assert X.norm(np.array([1.0, -2.0])) == 3.0
    with pytest.raises(UMDNormsError, match="no dual available"):
        dual_space(X)
    with pytest.raises(InvalidSpaceError):
        NormedSpace(2, custom_norm=lambda x: x)


def test_custom_norm_with_dual():
    X = NormedSpace(2, custom_norm=lambda x: np.abs(x).sum(-1), custom_subgradient=np.sign,
                    custom_dual=lambda: lp(2, math.inf))
    assert dual_space(X) == lp(2, math.inf)


@pytest.mark.parametrize("text, expected", [
    ("l1:4", lp(4, 1.0)),
    ("l2:8", lp(8, 2.0)),
    ("linf:3", lp(3, math.inf)),
    ("l3:2", lp(2, 3.0)),
    ("wlp:p=3,w=1;2;0.5", weighted_lp(3.0, [1, 2, 0.5])),
])
def test_parse_space_round_trip(text, expected):
    assert parse_space(text) == expected
    assert parse_space(text).literal == text


@pytest.mark.parametrize("text", ["l1", "lx:3", "l1:-2", "wlp:p=2,w=a;b", "l0.5:2"])
def test_parse_space_errors(text):
    with pytest.raises(UMDNormsError):
        parse_space(text)


def test_adjoint_examples():
    X = lp(3)
    assert adjoint(LinearOperator.identity(X)) == LinearOperator.identity(X)
    T = LinearOperator(lp(2, 1.0), lp(2, 2.0), [[1, 2], [0, 1]])
    Tp = adjoint(T)
    assert Tp.domain == lp(2, 2.0) and Tp.codomain == lp(2, math.inf)
    assert np.array_equal(Tp.matrix, [[1, 0], [2, 1]])


def test_adjoint_pairing(rng):
    dom, cod = lp(2, 1.0), lp(3, 3.0)
    M = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    T = LinearOperator(dom, cod, M)
    for _ in range(20):
        x, y = dom.random_vectors(rng), cod.random_vectors(rng)
        assert abs(pairing(T.apply(x), y) - pairing(x, adjoint(T).apply(y))) < 1e-12 * (1 + abs(pairing(T.apply(x), y)))


def test_operator_linearity(rng):
    X, Y = lp(3, 1.0), lp(2, math.inf)
    T = LinearOperator(X, Y, rng.standard_normal((2, 3)))
    x, y = X.random_vectors(rng, (2,))
    a = 0.3 - 1.2j
    assert np.allclose(T.apply(a * x + y), a * T.apply(x) + T.apply(y), atol=1e-12)
    assert np.array_equal(LinearOperator.identity(X).apply(x), x)


def test_operator_shape_and_immutability():
    with pytest.raises(DimensionError):
        LinearOperator(lp(2), lp(3), np.eye(2))
    T = LinearOperator.identity(lp(2))
    with pytest.raises(ValueError):
        T.matrix[0, 0] = 5
    assert compose(T, T) == T
    assert hash(T) == hash(LinearOperator.identity(lp(2)))


def test_euclidean_matrix_for_weights():
    X = weighted_lp(2.0, [2.0, 1.0])
    T = LinearOperator.identity(X)
    assert np.allclose(T.euclidean_matrix(), np.eye(2))
    S = LinearOperator(lp(2), X, np.eye(2))
    assert np.allclose(S.euclidean_matrix(), np.diag([2.0, 1.0]))
