from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from fracreach.errors import ComplexEigenvalues, DimensionMismatch, NearDefective, SingularOrIllConditioned
from fracreach.interval import Interval, IntervalMatrix, IntervalVector
from fracreach.linalg import (
    TransformPair,
    imat_mat,
    imat_vec,
    midpoint_eigen,
    midpoint_eigvectors,
    transform_state,
    verified_inverse,
)
from fracreach.model import BATTERY_EIGS, BATTERY_X0, battery_closed_loop

from oracle_values import Z0_LARGE, Z0_SMALL


def _point(v):
    return IntervalVector(Interval(float(x)) for x in v)


def _box(bounds):
    return IntervalVector(Interval(lo, hi) for lo, hi in bounds)


def test_identity_times_vector_keeps_widths():
    v = _box([(0, 1), (-2, -1), (3, 3.5)])
    assert imat_vec(IntervalMatrix.identity(3), v) == v


def test_upper_triangular_point_product_is_exact():
    r = imat_vec(IntervalMatrix.from_point([[1.0, 1.0], [0.0, 1.0]]), _point([2.0, 3.0]))
    assert r[0] == Interval(5.0) and r[1] == Interval(3.0)


def test_random_point_product_against_exact_rationals():
    rng = np.random.default_rng(3)
    for _ in range(50):
        A = rng.normal(size=(3, 3))
        x = rng.normal(size=3)
        r = imat_vec(IntervalMatrix.from_point(A), _point(x))
        for i in range(3):
            exact = sum(Fraction(float(A[i, j])) * Fraction(float(x[j])) for j in range(3))
            assert Fraction(r[i].lo) <= exact <= Fraction(r[i].hi)
            assert r[i].width <= 1e-14 * (1 + abs(float(exact)))


def test_imat_mat_contains_point_products():
    rng = np.random.default_rng(4)
    A = rng.normal(size=(3, 3))
    B = rng.normal(size=(3, 3))
    AI = IntervalMatrix([[Interval(v - 0.1, v + 0.1) for v in row] for row in A])
    P = imat_mat(AI, B)
    for _ in range(200):
        Ap = A + rng.uniform(-0.1, 0.1, size=(3, 3))
        assert P.contains_point(Ap @ B)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        imat_vec(IntervalMatrix.identity(2), _point([1.0, 2.0, 3.0]))
    with pytest.raises(DimensionMismatch):
        transform_state(TransformPair.identity(2), _point([1.0]))


def test_eigvectors_of_diagonal_are_unit_columns():
    T = midpoint_eigvectors(np.diag([-1.0, -2.0, -3.0]))
    # a permutation matrix up to column signs
    assert np.array_equal(np.abs(T) > 0.5, np.abs(T) == 1.0)
    assert np.array_equal(np.sort(np.argmax(np.abs(T), axis=0)), np.arange(3))


def test_symmetric_two_by_two():
    w, T = midpoint_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]))
    s = 1 / np.sqrt(2)
    for k in range(2):
        v = T[:, k] * np.sign(T[0, k])
        assert np.allclose(v, [s, s]) or np.allclose(v, [s, -s])
    assert sorted(w) == pytest.approx([-1.0, 1.0])


def test_battery_eigen_residual():
    A, _ = battery_closed_loop()
    w, T = midpoint_eigen(A)
    order = np.argsort(-w)
    D = np.diag(np.array(BATTERY_EIGS)[np.argsort(-np.array(BATTERY_EIGS))])
    assert np.max(np.abs(A @ T[:, order] - T[:, order] @ D)) <= 1e-8
    assert np.max(np.abs(A @ T - T @ np.diag(w))) <= 1e-6 * np.max(np.abs(A).sum(axis=1))


def test_complex_and_defective_are_rejected():
    with pytest.raises(ComplexEigenvalues):
        midpoint_eigen(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    with pytest.raises(NearDefective):
        midpoint_eigen(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_verified_inverse_examples():
    E = verified_inverse(np.eye(3))
    assert E.contains_point(np.eye(3))
    assert max(E[i, j].width for i in range(3) for j in range(3)) <= 1e-14
    E = verified_inverse(np.diag([2.0, 4.0]))
    assert E.contains_point(np.diag([0.5, 0.25]))
    with pytest.raises(SingularOrIllConditioned):
        verified_inverse(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_inverse_certificate_random():
    rng = np.random.default_rng(5)
    for _ in range(20):
        T = rng.normal(size=(5, 5)) + 5 * np.eye(5)
        E = verified_inverse(T)
        assert imat_mat(E, T).contains_point(np.eye(5))


def test_transform_identity():
    x0 = _box([(0, 1), (2, 3)])
    assert transform_state(TransformPair.identity(2), x0) == x0


def test_transform_containment_random_points():
    A, _ = battery_closed_loop()
    tp = TransformPair.from_matrix(midpoint_eigvectors(A))
    x0 = _box(BATTERY_X0["large"])
    z0 = transform_state(tp, x0)
    rng = np.random.default_rng(6)
    Te = [[Fraction(float(v)) for v in row] for row in tp.T]
    for _ in range(1000):
        x = rng.uniform(x0.lo, x0.hi)
        # exact z = inv(T) x through a rational solve
        z = _rational_solve(Te, [Fraction(float(v)) for v in x])
        for i in range(3):
            assert Fraction(z0[i].lo) <= z[i] <= Fraction(z0[i].hi)


def _rational_solve(M, b):
    n = len(b)
    a = [row[:] + [b[i]] for i, row in enumerate(M)]
    for c in range(n):
        p = next(r for r in range(c, n) if a[r][c] != 0)
        a[c], a[p] = a[p], a[c]
        for r in range(n):
            if r != c and a[r][c] != 0:
                f = a[r][c] / a[c][c]
                a[r] = [x - f * y for x, y in zip(a[r], a[c])]
    return [a[i][n] / a[i][i] for i in range(n)]


@pytest.mark.parametrize("which,expected", [("small", Z0_SMALL), ("large", Z0_LARGE)])
def test_battery_initial_box_in_z(which, expected):
    A, _ = battery_closed_loop()
    tp = TransformPair.from_matrix(midpoint_eigvectors(A))
    z0 = transform_state(tp, _box(BATTERY_X0[which]))
    # eigenvectors are matched to the reference coordinates up to order and sign
    got = [(z.lo, z.hi) for z in z0]
    for lo, hi in expected:
        match = [g for g in got + [(-b, -a) for a, b in got] if _close(g, (lo, hi))]
        assert match, (lo, hi, got)


def _close(g, e):
    return all(abs(a - b) <= 1e-3 * abs(b) + 1e-5 for a, b in zip(g, e))
