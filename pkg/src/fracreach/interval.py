"""Outward-rounded real interval arithmetic.

Rounding policy: every elementary operation is evaluated in round-to-nearest
and the result is pushed one ulp outward with :func:`math.nextafter` *unless*
an error-free transformation (TwoSum / Dekker product) proves the rounded value
exact.  This keeps exact results exact ([1,2]+[3,4] is [4,6]) while every
inexact endpoint is strictly outward.  The policy is portable and needs no
control over the FPU rounding mode, so it is safe under threads.

Transcendental functions (exp, log, real powers) are delegated to mpmath's
interval context at 53 bits, whose results are rigorous enclosures; the
endpoints are converted back to floats with directed rounding.
"""

from __future__ import annotations

import math
import threading
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import mpmath.libmp as _libmp
import numpy as np
from mpmath.ctx_iv import MPIntervalContext

from .errors import (
    DimensionMismatch,
    DivisionByZeroInterval,
    DomainError,
    EmptyIntersection,
    IntervalError,
    IntervalOverflow,
    NegativeInflation,
)

_INF = math.inf
_TINY = math.ulp(0.0)
_SPLITTER = 134217729.0  # 2**27 + 1
# Dekker's product is error-free only away from overflow/underflow.
_SAFE_HI = 2.0**995
_SAFE_LO = 2.0**-960


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _two_sum_err(a: float, b: float, s: float) -> float:
    bb = s - a
    return (a - (s - bb)) + (b - bb)


def add_rd(a: float, b: float) -> float:
    s = a + b
    if not math.isfinite(s):
        return s
    return _down(s) if _two_sum_err(a, b, s) < 0.0 else s


def add_ru(a: float, b: float) -> float:
    s = a + b
    if not math.isfinite(s):
        return s
    return _up(s) if _two_sum_err(a, b, s) > 0.0 else s


def sub_rd(a: float, b: float) -> float:
    return add_rd(a, -b)


def sub_ru(a: float, b: float) -> float:
    return add_ru(a, -b)


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _prod_err(a: float, b: float, p: float) -> float | None:
    """Exact error a*b - p, or None when the error-free transform is unsafe."""
    if p == 0.0:
        return None if (a != 0.0 and b != 0.0) else 0.0
    ap, bp, pp = abs(a), abs(b), abs(p)
    if ap > _SAFE_HI or bp > _SAFE_HI or pp > _SAFE_HI or pp < _SAFE_LO:
        return None
    ah, al = _split(a)
    bh, bl = _split(b)
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def mul_rd(a: float, b: float) -> float:
    p = a * b
    if not math.isfinite(p):
        return p
    if p == 0.0:
        # exact zero, or an underflow whose sign is known
        return 0.0 if a == 0.0 or b == 0.0 or (a > 0.0) == (b > 0.0) else -_TINY
    e = _prod_err(a, b, p)
    if e is None or e < 0.0:
        return _down(p)
    return p


def mul_ru(a: float, b: float) -> float:
    p = a * b
    if not math.isfinite(p):
        return p
    if p == 0.0:
        return 0.0 if a == 0.0 or b == 0.0 or (a > 0.0) != (b > 0.0) else _TINY
    e = _prod_err(a, b, p)
    if e is None or e > 0.0:
        return _up(p)
    return p


def _div_dir(a: float, b: float) -> tuple[float, int]:
    """Quotient and sign of (a/b - q): -1, 0, +1, or 2 when unknown."""
    q = a / b
    if not math.isfinite(q):
        return q, 2
    if q == 0.0:
        return q, (0 if a == 0.0 else 2)
    e = _prod_err(q, b, q * b)
    if e is None:
        return q, 2
    p = q * b
    r = (a - p) - e  # sign of a - q*b is exact (Sterbenz + monotone rounding)
    if r == 0.0:
        return q, 0
    s = 1 if r > 0.0 else -1
    return q, (s if b > 0.0 else -s)


def div_rd(a: float, b: float) -> float:
    q, d = _div_dir(a, b)
    return _down(q) if d < 0 or d == 2 else q


def div_ru(a: float, b: float) -> float:
    q, d = _div_dir(a, b)
    return _up(q) if d > 0 else q


def _sqrt_dir(x: float) -> tuple[float, int]:
    s = math.sqrt(x)
    if s == 0.0:
        return s, 0
    e = _prod_err(s, s, s * s)
    if e is None:
        return s, 2
    r = (x - s * s) - e
    return s, (0 if r == 0.0 else (1 if r > 0.0 else -1))


def _ipow_rd(x: float, k: int) -> float:
    # x >= 0: products of non-negative factors are monotone in each factor
    r = 1.0
    for _ in range(k):
        r = mul_rd(r, x)
    return r


def _ipow_ru(x: float, k: int) -> float:
    r = 1.0
    for _ in range(k):
        r = mul_ru(r, x)
    return r


# -- mpmath bridge -----------------------------------------------------------

_tls = threading.local()


def iv_context(prec: int) -> MPIntervalContext:
    """Thread-local mpmath interval context at the given binary precision."""
    cache = getattr(_tls, "contexts", None)
    if cache is None:
        cache = _tls.contexts = {}
    ctx = cache.get(prec)
    if ctx is None:
        ctx = MPIntervalContext()
        ctx.prec = prec
        cache[prec] = ctx
    return ctx


def mpi_bounds(x) -> tuple[float, float]:
    """Outward float bounds of an mpmath interval value."""
    a, b = x._mpi_
    lo = _libmp.to_float(a, rnd=_libmp.round_floor)
    hi = _libmp.to_float(b, rnd=_libmp.round_ceiling)
    return lo, hi


# -- Interval ------------------------------------------------------------------


class Interval:
    """Closed real interval ``[lo, hi]`` with finite float endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = float(lo)
        hi = lo if hi is None else float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise IntervalError("NaN endpoint")
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise IntervalError(f"non-finite endpoint in [{lo}, {hi}]")
        if lo > hi:
            raise IntervalError(f"inverted interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    @classmethod
    def _raw(cls, lo: float, hi: float) -> "Interval":
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise IntervalOverflow(f"interval overflow [{lo}, {hi}]")
        obj = object.__new__(cls)
        object.__setattr__(obj, "lo", lo)
        object.__setattr__(obj, "hi", hi)
        return obj

    @classmethod
    def from_decimal(cls, lo: str, hi: str | None = None) -> "Interval":
        """Smallest float interval containing the decimal numbers given as strings."""
        hi = lo if hi is None else hi
        flo, fhi = Fraction(lo), Fraction(hi)
        a, b = float(flo), float(fhi)
        if Fraction(a) > flo:
            a = _down(a)
        if Fraction(b) < fhi:
            b = _up(b)
        return cls(a, b)

    @classmethod
    def from_mpi(cls, x) -> "Interval":
        return cls(*mpi_bounds(x))

    def to_mpi(self, ctx):
        return ctx.mpf([self.lo, self.hi])

    # basic queries
    @property
    def mid(self) -> float:
        return midpoint(self)

    @property
    def width(self) -> float:
        return width(self)

    @property
    def mag(self) -> float:
        return max(abs(self.lo), abs(self.hi))

    @property
    def mig(self) -> float:
        if self.lo <= 0.0 <= self.hi:
            return 0.0
        return min(abs(self.lo), abs(self.hi))

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    __contains__ = contains

    def subset_of(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def interior_of(self, other: "Interval") -> bool:
        return other.lo < self.lo and self.hi < other.hi

    def intersect(self, other: "Interval") -> "Interval":
        return intersect(self, other)

    def hull(self, other: "Interval") -> "Interval":
        return hull(self, other)

    def inflate(self, rel: float, abs_: float = 0.0) -> "Interval":
        """Widen by ``rel*|x|+abs_`` on each side (epsilon-inflation)."""
        r = add_ru(mul_ru(rel, self.mag), abs_)
        return Interval._raw(sub_rd(self.lo, r), add_ru(self.hi, r))

    # arithmetic
    def __neg__(self):
        return Interval._raw(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __add__(self, other):
        if not isinstance(other, Interval):
            other = _coerce(other)
            if other is NotImplemented:
                return other
        return Interval._raw(add_rd(self.lo, other.lo), add_ru(self.hi, other.hi))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Interval):
            other = _coerce(other)
            if other is NotImplemented:
                return other
        return Interval._raw(sub_rd(self.lo, other.hi), sub_ru(self.hi, other.lo))

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if not isinstance(other, Interval):
            other = _coerce(other)
            if other is NotImplemented:
                return other
        a, b, c, d = self.lo, self.hi, other.lo, other.hi
        if a >= 0.0 and c >= 0.0:
            return Interval._raw(mul_rd(a, c), mul_ru(b, d))
        if self.lo == self.hi and other.lo == other.hi:
            return Interval._raw(mul_rd(a, c), mul_ru(a, c))
        lo = min(mul_rd(a, c), mul_rd(a, d), mul_rd(b, c), mul_rd(b, d))
        hi = max(mul_ru(a, c), mul_ru(a, d), mul_ru(b, c), mul_ru(b, d))
        return Interval._raw(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Interval):
            other = _coerce(other)
            if other is NotImplemented:
                return other
        c, d = other.lo, other.hi
        if c <= 0.0 <= d:
            raise DivisionByZeroInterval(f"division by interval containing zero: {other}")
        a, b = self.lo, self.hi
        lo = min(div_rd(a, c), div_rd(a, d), div_rd(b, c), div_rd(b, d))
        hi = max(div_ru(a, c), div_ru(a, d), div_ru(b, c), div_ru(b, d))
        return Interval._raw(lo, hi)

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return other / self

    def sqr(self) -> "Interval":
        """Square with the even-power rule (no dependency overestimation)."""
        a, b = self.lo, self.hi
        if a >= 0.0:
            return Interval._raw(mul_rd(a, a), mul_ru(b, b))
        if b <= 0.0:
            return Interval._raw(mul_rd(b, b), mul_ru(a, a))
        m = max(-a, b)
        return Interval._raw(0.0, mul_ru(m, m))

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        if k == 0:
            return Interval(1.0)
        if k == 1:
            return self
        if k % 2 == 0:
            return self.sqr() ** (k // 2)
        # odd powers are monotone: map each endpoint with directed rounding
        lo = -_ipow_ru(-self.lo, k) if self.lo < 0.0 else _ipow_rd(self.lo, k)
        hi = -_ipow_rd(-self.hi, k) if self.hi < 0.0 else _ipow_ru(self.hi, k)
        return Interval._raw(lo, hi)

    def __abs__(self):
        if self.lo >= 0.0:
            return self
        if self.hi <= 0.0:
            return -self
        return Interval._raw(0.0, max(-self.lo, self.hi))

    def sqrt(self) -> "Interval":
        if self.lo < 0.0:
            raise DomainError(f"sqrt of interval with negative part {self}")
        s1, d1 = _sqrt_dir(self.lo)
        s2, d2 = _sqrt_dir(self.hi)
        lo = s1 if d1 in (0, 1) else _down(s1)
        hi = s2 if d2 in (0, -1) else _up(s2)
        return Interval._raw(max(lo, 0.0), hi)

    def exp(self) -> "Interval":
        ctx = iv_context(53)
        return Interval.from_mpi(ctx.exp(self.to_mpi(ctx)))

    def log(self) -> "Interval":
        if self.lo <= 0.0:
            raise DomainError(f"log of interval with non-positive part {self}")
        ctx = iv_context(53)
        return Interval.from_mpi(ctx.log(self.to_mpi(ctx)))

    # comparisons and display
    def __eq__(self, other):
        if isinstance(other, Interval):
            return self.lo == other.lo and self.hi == other.hi
        if isinstance(other, (int, float)):
            return self.lo == self.hi == other
        return NotImplemented

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __iter__(self) -> Iterator[float]:
        yield self.lo
        yield self.hi

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __str__(self):
        return f"[{self.lo:.17g}, {self.hi:.17g}]"


def _coerce(x):
    if isinstance(x, Interval):
        return x
    if isinstance(x, (int, float, np.floating, np.integer)):
        v = float(x)
        if isinstance(x, (int, np.integer)) and v != x:
            f = Fraction(int(x))
            lo = v if Fraction(v) <= f else _down(v)
            hi = v if Fraction(v) >= f else _up(v)
            return Interval(lo, hi)
        return Interval(v, v)
    return NotImplemented


def as_interval(x) -> Interval:
    """Point interval from a float, or the interval itself."""
    r = _coerce(x)
    if r is NotImplemented:
        if isinstance(x, (tuple, list)) and len(x) == 2:
            return Interval(x[0], x[1])
        raise TypeError(f"cannot convert {type(x).__name__} to Interval")
    return r


# -- module-level operations --------------------------------------------------

_OPS = {
    "add": Interval.__add__,
    "sub": Interval.__sub__,
    "mul": Interval.__mul__,
    "div": Interval.__truediv__,
}


def arith(a: Interval, b: Interval, op: str) -> Interval:
    try:
        fn = _OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    return fn(as_interval(a), as_interval(b))


def intersect(a: Interval, b: Interval) -> Interval:
    lo = max(a.lo, b.lo)
    hi = min(a.hi, b.hi)
    if lo > hi:
        raise EmptyIntersection(f"{a} and {b} are disjoint")
    return Interval._raw(lo, hi)


def hull(a: Interval, b: Interval) -> Interval:
    return Interval._raw(min(a.lo, b.lo), max(a.hi, b.hi))


def midpoint(a: Interval) -> float:
    if a.lo == a.hi:
        return a.lo
    m = 0.5 * a.lo + 0.5 * a.hi
    return min(max(m, a.lo), a.hi)


def width(a: Interval) -> float:
    return sub_ru(a.hi, a.lo)


def subset_of(a: Interval, b: Interval) -> bool:
    return a.subset_of(b)


def inflate_sym(a: Interval, mu: float) -> Interval:
    """``[a.lo - mu, a.hi + mu]``, outward rounded."""
    if mu < 0.0 or math.isnan(mu):
        raise NegativeInflation(f"inflation radius must be >= 0, got {mu}")
    if mu == 0.0:
        return a
    return Interval._raw(sub_rd(a.lo, mu), add_ru(a.hi, mu))


def _pow_point(ctx, x: float, y: float):
    if x == 0.0:
        return ctx.mpf(0)
    if x == 1.0:
        return ctx.mpf(1)
    return ctx.exp(ctx.mpf(y) * ctx.log(ctx.mpf(x)))


def pow_real(t: Interval, nu: Interval) -> Interval:
    """Enclosure of ``{x**y : x in t, y in nu}`` for ``t >= 0``, ``nu`` in (0, 1]."""
    t, nu = as_interval(t), as_interval(nu)
    if t.lo < 0.0:
        raise DomainError(f"negative base {t}")
    if not (0.0 < nu.lo <= nu.hi <= 1.0):
        raise DomainError(f"exponent {nu} outside (0, 1]")
    ctx = iv_context(53)
    # x**y is increasing in x; in y it increases for x >= 1, decreases for x < 1
    y_lo = nu.hi if t.lo < 1.0 else nu.lo
    y_hi = nu.hi if t.hi >= 1.0 else nu.lo
    lo = mpi_bounds(_pow_point(ctx, t.lo, y_lo))[0]
    hi = mpi_bounds(_pow_point(ctx, t.hi, y_hi))[1]
    return Interval._raw(max(lo, 0.0), hi)


def pow_neg_real(t: Interval, nu: Interval) -> Interval:
    """Enclosure of ``{x**(-y)}`` for ``t > 0``, ``nu`` in (0, 1]."""
    t = as_interval(t)
    if t.lo <= 0.0:
        raise DomainError(f"non-positive base {t} for negative power")
    return 1.0 / pow_real(t, nu)


# -- vectors and matrices -------------------------------------------------------


class IntervalVector(Sequence[Interval]):
    """Fixed-length sequence of intervals."""

    __slots__ = ("_e",)

    def __init__(self, elems: Iterable):
        object.__setattr__(self, "_e", tuple(as_interval(e) for e in elems))

    def __setattr__(self, name, value):
        raise AttributeError("IntervalVector is immutable")

    @classmethod
    def from_bounds(cls, lo: Sequence[float], hi: Sequence[float]) -> "IntervalVector":
        if len(lo) != len(hi):
            raise DimensionMismatch("bound lengths differ")
        return cls(Interval(a, b) for a, b in zip(lo, hi))

    @classmethod
    def point(cls, values: Sequence[float]) -> "IntervalVector":
        return cls(Interval(float(v)) for v in values)

    def __len__(self):
        return len(self._e)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return IntervalVector(self._e[i])
        return self._e[i]

    def __iter__(self):
        return iter(self._e)

    def __eq__(self, other):
        return isinstance(other, IntervalVector) and self._e == other._e

    def __hash__(self):
        return hash(self._e)

    def __repr__(self):
        return "IntervalVector([" + ", ".join(str(e) for e in self._e) + "])"

    @property
    def lo(self) -> np.ndarray:
        return np.array([e.lo for e in self._e])

    @property
    def hi(self) -> np.ndarray:
        return np.array([e.hi for e in self._e])

    def mid(self) -> np.ndarray:
        return np.array([midpoint(e) for e in self._e])

    def widths(self) -> np.ndarray:
        return np.array([width(e) for e in self._e])

    def replace(self, i: int, value: Interval) -> "IntervalVector":
        e = list(self._e)
        e[i] = value
        return IntervalVector(e)

    def _check(self, other):
        if len(other) != len(self):
            raise DimensionMismatch(f"length {len(self)} vs {len(other)}")

    def intersect(self, other: "IntervalVector") -> "IntervalVector":
        self._check(other)
        return IntervalVector(intersect(a, b) for a, b in zip(self, other))

    def hull(self, other: "IntervalVector") -> "IntervalVector":
        self._check(other)
        return IntervalVector(hull(a, b) for a, b in zip(self, other))

    def subset_of(self, other: "IntervalVector") -> bool:
        self._check(other)
        return all(a.subset_of(b) for a, b in zip(self, other))

    def contains_point(self, x: Sequence[float]) -> bool:
        return all(e.lo <= v <= e.hi for e, v in zip(self._e, x))

    def __add__(self, other):
        self._check(other)
        return IntervalVector(a + b for a, b in zip(self, other))

    def __sub__(self, other):
        self._check(other)
        return IntervalVector(a - b for a, b in zip(self, other))


class IntervalMatrix:
    """Dense rectangular matrix of intervals stored row-major."""

    __slots__ = ("_rows", "shape")

    def __init__(self, rows: Iterable[Iterable]):
        r = tuple(tuple(as_interval(e) for e in row) for row in rows)
        if not r:
            raise DimensionMismatch("empty matrix")
        ncol = len(r[0])
        if any(len(row) != ncol for row in r):
            raise DimensionMismatch("ragged rows")
        object.__setattr__(self, "_rows", r)
        object.__setattr__(self, "shape", (len(r), ncol))

    def __setattr__(self, name, value):
        raise AttributeError("IntervalMatrix is immutable")

    @classmethod
    def from_point(cls, a) -> "IntervalMatrix":
        a = np.asarray(a, dtype=float)
        if a.ndim != 2:
            raise DimensionMismatch("expected a 2-D array")
        return cls([[Interval(float(v)) for v in row] for row in a])

    @classmethod
    def from_bounds(cls, lo, hi) -> "IntervalMatrix":
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        if lo.shape != hi.shape:
            raise DimensionMismatch("bound shapes differ")
        return cls([[Interval(a, b) for a, b in zip(r1, r2)] for r1, r2 in zip(lo, hi)])

    @classmethod
    def identity(cls, n: int) -> "IntervalMatrix":
        return cls.from_point(np.eye(n))

    def __getitem__(self, ij):
        i, j = ij
        return self._rows[i][j]

    def row(self, i: int) -> tuple[Interval, ...]:
        return self._rows[i]

    @property
    def rows(self) -> tuple[tuple[Interval, ...], ...]:
        return self._rows

    def __eq__(self, other):
        return isinstance(other, IntervalMatrix) and self._rows == other._rows

    def __hash__(self):
        return hash(self._rows)

    def __repr__(self):
        return "IntervalMatrix(" + repr([[str(e) for e in row] for row in self._rows]) + ")"

    @property
    def lo(self) -> np.ndarray:
        return np.array([[e.lo for e in row] for row in self._rows])

    @property
    def hi(self) -> np.ndarray:
        return np.array([[e.hi for e in row] for row in self._rows])

    def mid(self) -> np.ndarray:
        return np.array([[midpoint(e) for e in row] for row in self._rows])

    def is_point(self) -> bool:
        return all(e.is_point() for row in self._rows for e in row)

    def diag(self) -> IntervalVector:
        n = min(self.shape)
        return IntervalVector(self._rows[i][i] for i in range(n))

    def subset_of(self, other: "IntervalMatrix") -> bool:
        return self.shape == other.shape and all(
            a.subset_of(b) for r1, r2 in zip(self._rows, other._rows) for a, b in zip(r1, r2)
        )

    def contains_point(self, a) -> bool:
        a = np.asarray(a, float)
        return a.shape == self.shape and all(
            e.lo <= a[i, j] <= e.hi for i, row in enumerate(self._rows) for j, e in enumerate(row)
        )
