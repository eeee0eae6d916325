"""Quasi-linear fractional-order systems ``D^nu x = A(x) x`` and the two scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatch,
    DivisionByZeroInterval,
    DomainError,
    EvaluationDomainError,
    Uncontrollable,
)
from .interval import Interval, IntervalMatrix, IntervalVector, as_interval, hull
from .linalg import TransformPair, imat_vec, midpoint_eigen, transform_state

AExpr = Callable[[IntervalVector, Mapping[str, Interval]], IntervalMatrix]
APoint = Callable[[np.ndarray, Mapping[str, np.ndarray]], np.ndarray]


@dataclass(frozen=True)
class QuasiLinearSystem:
    """``D^nu x = A(x, p) x`` with an interval initial box and interval parameters.

    ``A_expr`` is the interval evaluation rule (inclusion isotone by
    construction); ``A_point`` is its vectorised float counterpart used by the
    Monte-Carlo oracle: ``(M, n)`` states and ``(M,)`` parameter arrays map to
    ``(M, n, n)`` matrices.
    """

    name: str
    n: int
    nu: Interval
    x0: IntervalVector
    A_expr: AExpr
    A_point: APoint
    params: Mapping[str, Interval] = field(default_factory=dict)

    def __post_init__(self):
        nu = as_interval(self.nu)
        if not (0.0 < nu.lo <= nu.hi <= 1.0):
            raise DomainError(f"order nu must lie in (0, 1], got {nu}")
        object.__setattr__(self, "nu", nu)
        if len(self.x0) != self.n:
            raise DimensionMismatch(f"x0 has length {len(self.x0)}, expected {self.n}")
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))

    def A_of(self, box: IntervalVector) -> IntervalMatrix:
        return eval_A(self, box)

    def f_of(self, box: IntervalVector) -> IntervalVector:
        return imat_vec(self.A_of(box), box)

    def param_mid(self) -> dict[str, float]:
        return {k: v.mid for k, v in self.params.items()}

    def with_x0(self, x0: IntervalVector) -> "QuasiLinearSystem":
        return replace(self, x0=x0)

    def with_nu(self, nu) -> "QuasiLinearSystem":
        return replace(self, nu=as_interval(nu))


def eval_A(sys: QuasiLinearSystem, box: IntervalVector) -> IntervalMatrix:
    """Interval evaluation of the quasi-linear factor over ``box``."""
    if len(box) != sys.n:
        raise DimensionMismatch(f"box of length {len(box)} for system of order {sys.n}")
    try:
        A = sys.A_expr(box, sys.params)
    except (DivisionByZeroInterval, DomainError) as exc:
        raise EvaluationDomainError(str(exc)) from exc
    if A.shape != (sys.n, sys.n):
        raise DimensionMismatch(f"A has shape {A.shape}, expected {(sys.n, sys.n)}")
    return A


@dataclass(frozen=True)
class DiagDominantSystem:
    """A system in coordinates ``z = inv(T) x`` where ``A_z(z) = inv(T) A(T z) T``.

    ``mu`` inflates the right-hand side componentwise by ``[-mu_i, mu_i]``.
    """

    base: QuasiLinearSystem
    tp: TransformPair
    z0: IntervalVector
    mu: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.mu:
            object.__setattr__(self, "mu", (0.0,) * self.base.n)
        if len(self.mu) != self.base.n or any(not m >= 0.0 for m in self.mu):
            raise DomainError(f"invalid inflation vector {self.mu}")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def nu(self) -> Interval:
        return self.base.nu

    def to_x(self, z: IntervalVector) -> IntervalVector:
        if self.tp.is_identity():
            return z
        return self.tp.to_x(z)

    def A_of(self, zbox: IntervalVector) -> IntervalMatrix:
        A = self.base.A_of(self.to_x(zbox))
        if self.tp.is_identity():
            return A
        return self.tp.similarity(A)

    def off_diagonal_mass(self) -> np.ndarray:
        A = self.A_of(self.z0)
        return np.array(
            [sum(A[i, j].mag for j in range(self.n) if j != i) for i in range(self.n)]
        )

    def with_start(self, z0: IntervalVector, mu) -> "DiagDominantSystem":
        return replace(self, z0=z0, mu=tuple(float(m) for m in mu))


def diagonalize(sys: QuasiLinearSystem, transform: bool = True) -> DiagDominantSystem:
    """Transform with the eigenvectors of ``A`` at the midpoint of ``x0`` and ``p``."""
    if not transform or sys.n == 1:
        tp = TransformPair.identity(sys.n)
        return DiagDominantSystem(sys, tp, sys.x0)
    Am = sys.A_point(sys.x0.mid()[None, :], {k: np.array([v]) for k, v in sys.param_mid().items()})[0]
    _, T = midpoint_eigen(Am)
    tp = TransformPair.from_matrix(T)
    return DiagDominantSystem(sys, tp, transform_state(tp, sys.x0))


# -- cubic scenario -----------------------------------------------------------


CUBIC_CASES = {
    "a": {"z0": (0.99, 1.0), "p": (-2.0, -1.99), "nu": (0.8, 0.81)},
    "b": {"z0": (0.5, 1.0), "p": (-2.0, -1.0), "nu": (0.8, 0.9)},
}


def _cubic_expr(box, params):
    return IntervalMatrix([[params["p"] * box[0].sqr()]])


def _cubic_point(X, P):
    return (P["p"] * X[:, 0] ** 2)[:, None, None]


def build_cubic(case: str) -> QuasiLinearSystem:
    """Scalar system ``D^nu z = p z**3`` written as ``(p z**2) z``."""
    try:
        c = CUBIC_CASES[case]
    except KeyError:
        raise ConfigError(f"unknown cubic case {case!r}; expected 'a' or 'b'") from None
    return QuasiLinearSystem(
        name=f"cubic_{case}",
        n=1,
        nu=Interval(*c["nu"]),
        x0=IntervalVector([Interval(*c["z0"])]),
        A_expr=_cubic_expr,
        A_point=_cubic_point,
        params={"p": Interval(*c["p"])},
    )


def linear_system(A, x0, nu, name: str = "linear") -> QuasiLinearSystem:
    """Constant (possibly interval) matrix system, mainly for checks."""
    AI = A if isinstance(A, IntervalMatrix) else IntervalMatrix.from_point(A)
    if not isinstance(x0, IntervalVector):
        x0 = IntervalVector(as_interval(v) for v in x0)
    lo, hi = AI.lo, AI.hi

    def expr(box, params):
        return AI

    def point(X, P):
        M = X.shape[0]
        if "u" in P:
            u = np.asarray(P["u"]).reshape(M, 1, 1)
            return lo[None] + (hi - lo)[None] * u
        return np.broadcast_to(0.5 * (lo + hi), (M,) + lo.shape).copy()

    return QuasiLinearSystem(name=name, n=AI.shape[0], nu=as_interval(nu), x0=x0, A_expr=expr, A_point=point)


# -- battery scenario ---------------------------------------------------------


@dataclass(frozen=True)
class BatteryParams:
    R0: float = 1.7e-5
    Q: float = 20.591
    R: float = 0.1005
    eta0: float = 1.0
    eta1: float = 0.1
    CN: float = 3.1
    c: tuple[float, ...] = (3.0607, 3.2965, -8.3942, 11.088, -4.8992)
    d0: float = -0.2477
    d1: float = -14.302

    def __post_init__(self):
        if not (self.CN > 0 and self.Q > 0 and self.R > 0):
            raise DomainError("CN, Q and R must be positive")
        if len(self.c) != 5:
            raise DomainError("five OCV coefficients c0..c4 are required")


BATTERY_EIGS = (-0.0001, -0.0002, -0.4832)

BATTERY_X0 = {
    "small": ((0.99, 1.01), (-0.00101, -0.00099), (0.099, 0.101)),
    "large": ((0.9, 1.1), (-0.0011, -0.0009), (0.09, 0.11)),
}


def battery_open_loop(p: BatteryParams, discharge: bool = True) -> tuple[np.ndarray, np.ndarray]:
    sign = 1.0 if discharge else -1.0
    A = np.array(
        [
            [0.0, 1.0, 0.0],
            [p.eta1 * sign / (3600.0 * p.CN), 0.0, 0.0],
            [0.0, 0.0, -1.0 / (p.R * p.Q)],
        ]
    )
    b = np.array([0.0, -p.eta0 / (3600.0 * p.CN), 1.0 / p.Q])
    return A, b


def pole_placement(A, b, desired) -> np.ndarray:
    """Ackermann gain ``k`` such that ``A - b k^T`` has the ``desired`` spectrum."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,) or len(desired) != n:
        raise DimensionMismatch("pole placement needs A (n x n), b (n) and n poles")
    C = np.empty((n, n))
    v = b.copy()
    for j in range(n):
        C[:, j] = v
        v = A @ v
    norms = np.linalg.norm(C, axis=0)
    if np.any(norms == 0.0):
        raise Uncontrollable("controllability matrix has a zero column")
    # column scaling removes the unit disparity between b, Ab, A^2 b
    sv = np.linalg.svd(C / norms, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0]:
        raise Uncontrollable(f"controllability matrix is singular (sigma ratio {sv[-1] / sv[0]:.3g})")
    coeffs = np.poly(np.asarray(desired, dtype=float))  # monic, highest power first
    phi = np.zeros_like(A)
    Ak = np.eye(n)
    for c in coeffs[::-1]:
        phi += c * Ak
        Ak = Ak @ A
    en = np.zeros(n)
    en[-1] = 1.0
    return en @ np.linalg.solve(C, phi)


BATTERY_INFLATED = (("a21", 1, 0), ("a22", 1, 1), ("a23", 1, 2), ("a33", 2, 2))


def battery_closed_loop(p: BatteryParams = BatteryParams(), desired=BATTERY_EIGS, discharge: bool = True):
    A, b = battery_open_loop(p, discharge)
    k = pole_placement(A, b, desired)
    return A - np.outer(b, k), k


def build_battery(
    p: BatteryParams = BatteryParams(),
    desired=BATTERY_EIGS,
    infl_21_22_23: float = 0.01,
    infl_33: float = 0.10,
    discharge: bool = True,
    x0=BATTERY_X0["small"],
    name: str = "battery",
) -> QuasiLinearSystem:
    """Closed-loop battery model with symmetric relative inflation of selected entries."""
    if infl_21_22_23 < 0 or infl_33 < 0:
        raise DomainError("inflation fractions must be >= 0")
    AC, _ = battery_closed_loop(p, desired, discharge)
    params = {}
    for key, i, j in BATTERY_INFLATED:
        frac = infl_33 if key == "a33" else infl_21_22_23
        nom = Interval(float(AC[i, j]))
        params[key] = nom.inflate(frac) if frac else nom
    fixed = AC.copy()
    fixed_iv = [[Interval(float(v)) for v in row] for row in fixed]

    def expr(box, params):
        rows = [list(r) for r in fixed_iv]
        for key, i, j in BATTERY_INFLATED:
            rows[i][j] = params[key]
        return IntervalMatrix(rows)

    def point(X, P):
        M = X.shape[0]
        out = np.broadcast_to(fixed, (M, 3, 3)).copy()
        for key, i, j in BATTERY_INFLATED:
            out[:, i, j] = P[key]
        return out

    if not isinstance(x0, IntervalVector):
        x0 = IntervalVector(Interval(*b) for b in x0)
    return QuasiLinearSystem(
        name=name, n=3, nu=Interval(0.5), x0=x0, A_expr=expr, A_point=point, params=params
    )


def battery_gain(p: BatteryParams = BatteryParams(), desired=BATTERY_EIGS, discharge: bool = True) -> np.ndarray:
    return battery_closed_loop(p, desired, discharge)[1]


def _ocv(s: Interval, c) -> Interval:
    acc = Interval(c[-1])
    for ck in reversed(c[:-1]):
        acc = acc * s + ck
    return acc


def battery_output(x_box: IntervalVector, i, p: BatteryParams = BatteryParams(), subdivisions: int = 64) -> Interval:
    """Terminal voltage ``sum c_k s**k - v1 + (-R0 + d0 exp(d1 s)) i`` over the box.

    The state of charge component is split into ``subdivisions`` slabs to curb
    the dependency effect; the slab results are hulled.
    """
    if subdivisions < 1:
        raise DomainError("subdivisions must be >= 1")
    sigma, v1 = x_box[0], x_box[2]
    cur = as_interval(i)
    if sigma.is_point():
        subdivisions = 1
    lo, w = sigma.lo, sigma.hi - sigma.lo
    edges = [lo] + [lo + w * (j / subdivisions) for j in range(1, subdivisions)] + [sigma.hi]
    out = None
    for a, b in zip(edges[:-1], edges[1:]):
        s = Interval(min(a, b), max(a, b))
        v = _ocv(s, p.c) - v1 + (Interval(-p.R0) + Interval(p.d0) * (s * p.d1).exp()) * cur
        out = v if out is None else hull(out, v)
    return out


def battery_current(x_box: IntervalVector, k) -> Interval:
    """Feedback current ``i = -k^T x`` over the box."""
    acc = Interval(0.0)
    for kj, xj in zip(k, x_box):
        acc = acc - Interval(float(kj)) * xj
    return acc


# -- scenario registry ---------------------------------------------------------


def scenario(name: str, **battery_kw) -> QuasiLinearSystem:
    if name == "cubic_a":
        return build_cubic("a")
    if name == "cubic_b":
        return build_cubic("b")
    if name in ("battery_small", "battery_large"):
        which = name.split("_", 1)[1]
        return build_battery(x0=BATTERY_X0[which], name=name, **battery_kw)
    raise ConfigError(f"unknown scenario {name!r}")


SCENARIOS = ("cubic_a", "cubic_b", "battery_small", "battery_large")
