"""Interval matrix products, midpoint eigenvectors and verified inverses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ComplexEigenvalues,
    DimensionMismatch,
    NearDefective,
    SingularOrIllConditioned,
)
from .interval import Interval, IntervalMatrix, IntervalVector, add_ru, as_interval, mul_ru

COND_LIMIT = 1e12


def _dot(xs, ys) -> Interval:
    acc = Interval(0.0)
    for x, y in zip(xs, ys):
        acc = acc + x * y
    return acc


def _as_imatrix(M) -> IntervalMatrix:
    if isinstance(M, IntervalMatrix):
        return M
    return IntervalMatrix.from_point(M)


def imat_vec(M, v) -> IntervalVector:
    """Natural interval evaluation of ``M @ v``."""
    M = _as_imatrix(M)
    if not isinstance(v, IntervalVector):
        v = IntervalVector(as_interval(x) for x in v)
    if M.shape[1] != len(v):
        raise DimensionMismatch(f"matrix {M.shape} times vector of length {len(v)}")
    return IntervalVector(_dot(row, v) for row in M.rows)


def imat_mat(A, B) -> IntervalMatrix:
    """Natural interval evaluation of ``A @ B``."""
    A, B = _as_imatrix(A), _as_imatrix(B)
    if A.shape[1] != B.shape[0]:
        raise DimensionMismatch(f"{A.shape} times {B.shape}")
    cols = [[B[k, j] for k in range(B.shape[0])] for j in range(B.shape[1])]
    return IntervalMatrix([[_dot(row, col) for col in cols] for row in A.rows])


def midpoint_eigen(A) -> tuple[np.ndarray, np.ndarray]:
    """Floating-point eigenvalues and unit-norm eigenvectors of a real matrix.

    The columns are returned in LAPACK order and sign.  No rigour is claimed:
    ``T`` only has to be a fixed invertible matrix.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch("square matrix required")
    w, V = np.linalg.eig(A)
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    if np.any(np.abs(np.imag(w)) > 1e-12 * scale):
        raise ComplexEigenvalues(f"complex eigenvalues {w}")
    w = np.real(w)
    V = np.real(V)
    V = V / np.linalg.norm(V, axis=0)
    c = np.linalg.cond(V)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise NearDefective(f"eigenvector matrix condition {c:.3g} exceeds {COND_LIMIT:g}")
    return w, V


def midpoint_eigvectors(A) -> np.ndarray:
    return midpoint_eigen(A)[1]


def verified_inverse(T) -> IntervalMatrix:
    """Interval matrix certified to contain ``inv(T)``.

    With ``R ~ inv(T)`` and ``C = I - R T`` (enclosed in interval arithmetic),
    ``||C||_inf = alpha < 1`` gives ``inv(T) - R = C inv(T)`` and
    ``||inv(T)||_inf <= ||R||_inf / (1 - alpha)``, so row ``i`` of ``R`` is
    widened by ``||C_i||_1 ||R||_inf / (1 - alpha)``.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise DimensionMismatch("square matrix required")
    n = T.shape[0]
    try:
        R = np.linalg.inv(T)
    except np.linalg.LinAlgError as exc:
        raise SingularOrIllConditioned(str(exc)) from None
    if not np.all(np.isfinite(R)):
        raise SingularOrIllConditioned("approximate inverse is not finite")
    RT = imat_mat(R, T)
    row_mag = []
    for i in range(n):
        s = 0.0
        for j in range(n):
            c = (Interval(1.0) if i == j else Interval(0.0)) - RT[i, j]
            s = add_ru(s, c.mag)
        row_mag.append(s)
    alpha = max(row_mag)
    if not alpha < 1.0:
        raise SingularOrIllConditioned(f"residual norm bound {alpha:.3g} >= 1")
    r_norm = 0.0
    for i in range(n):
        s = 0.0
        for j in range(n):
            s = add_ru(s, abs(float(R[i, j])))
        r_norm = max(r_norm, s)
    denom = Interval(1.0) - alpha
    scale = (Interval(r_norm) / denom).hi
    rows = []
    for i in range(n):
        d = mul_ru(row_mag[i], scale)
        rows.append([Interval(float(R[i, j])).inflate(0.0, d) for j in range(n)])
    return IntervalMatrix(rows)


@dataclass(frozen=True)
class TransformPair:
    """Similarity transform ``x = T z`` with a certified enclosure of ``inv(T)``."""

    T: np.ndarray
    Tinv: IntervalMatrix

    @classmethod
    def from_matrix(cls, T) -> "TransformPair":
        T = np.array(T, dtype=float)
        T.setflags(write=False)
        return cls(T, verified_inverse(T))

    @classmethod
    def identity(cls, n: int) -> "TransformPair":
        return cls.from_matrix(np.eye(n))

    @property
    def n(self) -> int:
        return self.T.shape[0]

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.T, np.eye(self.n)))

    def to_x(self, z: IntervalVector) -> IntervalVector:
        return imat_vec(self.T, z)

    def to_z(self, x: IntervalVector) -> IntervalVector:
        return imat_vec(self.Tinv, x)

    def similarity(self, A: IntervalMatrix) -> IntervalMatrix:
        """Enclosure of ``inv(T) A T``."""
        return imat_mat(self.Tinv, imat_mat(A, self.T))


def transform_state(tp: TransformPair, x0: IntervalVector) -> IntervalVector:
    """Initial box in transformed coordinates, ``inv(T) x0``."""
    if len(x0) != tp.n:
        raise DimensionMismatch(f"state of length {len(x0)} for transform of size {tp.n}")
    return tp.to_z(x0)
