import numpy as np
import pytest

from helpers import random_sl, random_unipotent, random_unitary
from spinrs.heisenberg import (
    DoublePoint,
    decompose_left,
    decompose_right,
    dressing,
    is_borel,
    moment_map,
    quasi_adjoint,
)


def random_borel(rng, n):
    b = np.triu(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)), 1)
    d = np.exp(0.5 * rng.normal(size=n))
    return b + np.diag(d / np.prod(d) ** (1.0 / n))


def random_point(rng, n):
    return DoublePoint(random_sl(rng, n), random_borel(rng, n))


def test_point_validation():
    with pytest.raises(ValueError):
        DoublePoint(2 * np.eye(2), np.eye(2))
    with pytest.raises(ValueError):
        DoublePoint(np.eye(2), np.array([[1.0, 0.0], [1.0, 1.0]]))


def test_decompositions_of_subgroup_elements(rng):
    u = random_unitary(rng, 3)
    g, b = decompose_right(u)
    np.testing.assert_allclose(g, u, atol=1e-14)
    np.testing.assert_allclose(b, np.eye(3), atol=1e-14)
    b_l, g_r = decompose_left(u)
    np.testing.assert_allclose(b_l, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(g_r, u.conj().T, atol=1e-14)

    bb = random_borel(rng, 3)
    g, b = decompose_right(bb)
    np.testing.assert_allclose(g, np.eye(3), atol=1e-13)
    np.testing.assert_allclose(b, np.linalg.inv(bb), atol=1e-13)
    b_l, g_r = decompose_left(bb)
    np.testing.assert_allclose(b_l, bb, atol=1e-13)
    np.testing.assert_allclose(g_r, np.eye(3), atol=1e-13)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_reassembly_and_cross_consistency(rng, n):
    for _ in range(20):
        k = random_sl(rng, n)
        g_l, b_r = decompose_right(k)
        b_l, g_r = decompose_left(k)
        scale = np.linalg.norm(k)
        assert np.linalg.norm(g_l @ np.linalg.inv(b_r) - k) <= 1e-10 * scale
        assert np.linalg.norm(b_l @ g_r.conj().T - k) <= 1e-10 * scale
        assert is_borel(b_r) and is_borel(b_l)
        np.testing.assert_allclose(g_l @ g_l.conj().T, np.eye(n), atol=1e-12)
        np.testing.assert_allclose(g_r @ g_r.conj().T, np.eye(n), atol=1e-12)
        lhs = g_l.conj().T @ b_l
        rhs = np.linalg.inv(b_r) @ g_r
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(lhs)


def test_left_factor_is_cholesky_of_kkdag(rng):
    k = random_sl(rng, 4)
    b_l, _ = decompose_left(k)
    np.testing.assert_allclose(b_l @ b_l.conj().T, k @ k.conj().T, atol=1e-11)


def test_dressing_trivial_and_equivariant(rng):
    b = random_borel(rng, 3)
    np.testing.assert_allclose(dressing(np.eye(3), b), b, atol=1e-13)
    eta = random_unitary(rng, 3)
    np.testing.assert_allclose(dressing(eta, np.eye(3)), np.eye(3), atol=1e-13)
    d = dressing(eta, b)
    assert is_borel(d)
    np.testing.assert_allclose(d @ d.conj().T, eta @ b @ b.conj().T @ eta.conj().T, atol=1e-11)


def test_quasi_adjoint_identity(rng):
    pt = random_point(rng, 3)
    out = quasi_adjoint(np.eye(3), pt)
    np.testing.assert_allclose(out.K, pt.K, atol=1e-13)
    np.testing.assert_allclose(out.S, pt.S, atol=1e-13)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_action_law_and_equivariance(rng, n):
    for _ in range(20):
        pt = random_point(rng, n)
        e1, e2 = random_unitary(rng, n), random_unitary(rng, n)
        twice = quasi_adjoint(e2, quasi_adjoint(e1, pt))
        once = quasi_adjoint(e2 @ e1, pt)
        assert np.abs(twice.K - once.K).max() < 1e-9
        assert np.abs(twice.S - once.S).max() < 1e-9
        lhs = moment_map(quasi_adjoint(e1, pt))
        rhs = dressing(e1, moment_map(pt))
        assert np.abs(lhs - rhs).max() < 1e-9


def test_hamiltonians_invariant_under_quasi_adjoint(rng):
    pt = random_point(rng, 3)
    eta = random_unitary(rng, 3)
    _, b0 = decompose_right(pt.K)
    _, b1 = decompose_right(quasi_adjoint(eta, pt).K)
    l0, l1 = b0 @ b0.conj().T, b1 @ b1.conj().T
    for k in (1, 2, 3):
        t0 = np.trace(np.linalg.matrix_power(l0, k)).real
        t1 = np.trace(np.linalg.matrix_power(l1, k)).real
        assert abs(t0 - t1) <= 1e-9 * abs(t0)


def test_moment_map_factors(rng):
    assert np.allclose(moment_map(DoublePoint(np.eye(3), np.eye(3))), np.eye(3))
    pt = DoublePoint(random_sl(rng, 3), random_unipotent(rng, 3))
    g_l, b_r = decompose_right(pt.K)
    b_l, g_r = decompose_left(pt.K)
    np.testing.assert_allclose(moment_map(pt), b_l @ b_r @ pt.S, atol=1e-12)
