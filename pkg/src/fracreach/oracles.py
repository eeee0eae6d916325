"""Non-verified reference computations used to test the verified engine.

* a full-memory Grünwald-Letnikov simulator for Caputo systems,
* an extended-precision Mittag-Leffler series,
* Oustaloup's recursive rational approximation of ``s**nu`` together with
  frequency responses of the exact Warburg-type element and of state-space
  realisations.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import BudgetExceeded, DimensionMismatch, DomainError, SingularAtFrequency, StepTooLarge

# -- Grünwald-Letnikov ----------------------------------------------------------

GL_BLOWUP = 1e9
_BLOCK = 64
ORACLE_MAX_DIGITS = 4000


def gl_weights(nu, K: int) -> np.ndarray:
    """``w_j = (-1)**j binom(nu, j)`` for ``j = 0..K``; ``nu`` scalar or ``(M,)``."""
    nu = np.atleast_1d(np.asarray(nu, dtype=float))
    w = np.empty((nu.size, K + 1))
    w[:, 0] = 1.0
    for j in range(1, K + 1):
        w[:, j] = w[:, j - 1] * (1.0 - (nu + 1.0) / j)
    return w


def gl_simulate(
    n: int,
    nu,
    A_fn: Callable[[np.ndarray], np.ndarray],
    x0,
    h: float,
    t_end: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Explicit GL stepping of ``D^nu x = A(x) x`` with untruncated memory.

    ``x0`` may be one state ``(n,)`` or a batch ``(M, n)``; ``nu`` a scalar or
    one order per trajectory.  ``A_fn`` maps ``(M, n)`` states to ``(M, n, n)``.
    Works on ``y = x - x0`` so the scheme matches the Caputo derivative.
    Returns the time grid ``(K+1,)`` and states ``(K+1, M, n)`` (or
    ``(K+1, n)`` for a single trajectory).
    """
    if not h > 0.0:
        raise DomainError("step size must be positive")
    if not t_end > 0.0:
        raise DomainError("t_end must be positive")
    X0 = np.asarray(x0, dtype=float)
    single = X0.ndim == 1
    X0 = np.atleast_2d(X0)
    M = X0.shape[0]
    if X0.shape[1] != n:
        raise DimensionMismatch(f"x0 has {X0.shape[1]} components, expected {n}")
    nus = np.atleast_1d(np.asarray(nu, dtype=float))
    if np.any(nus <= 0.0) or np.any(nus > 1.0):
        raise DomainError("nu must lie in (0, 1]")
    shared = nus.size == 1
    if not shared and nus.size != M:
        raise DimensionMismatch("one order per trajectory expected")
    K = int(round(t_end / h))
    W = gl_weights(nus, K)  # (1 or M, K+1)
    hnu = (h ** nus)[:, None]  # (1 or M, 1)
    Y = np.zeros((K + 1, M, n))
    hist = np.zeros((_BLOCK, M, n))
    for b0 in range(1, K + 1, _BLOCK):
        b1 = min(b0 + _BLOCK, K + 1)
        B = b1 - b0
        # memory from y_0..y_{b0-1} for every step of the block at once
        hist = np.zeros((B, M, n))
        if b0 > 1:
            idx = np.arange(b0, b1)[:, None] - np.arange(b0)[None, :]  # (B, b0)
            if shared:
                T = W[0][idx]
                hist = (T @ Y[:b0].reshape(b0, M * n)).reshape(B, M, n)
            else:
                for c0 in range(0, b0, 512):
                    c1 = min(c0 + 512, b0)
                    T = W[:, idx[:, c0:c1]]  # (M, B, c)
                    hist += np.einsum("mbc,cmn->bmn", T, Y[c0:c1])
        for k in range(b0, b1):
            x_prev = X0 + Y[k - 1]
            f = np.einsum("mij,mj->mi", A_fn(x_prev), x_prev)
            acc = hist[k - b0]
            if k > b0:
                j = np.arange(1, k - b0 + 1)
                if shared:
                    acc = acc + np.tensordot(W[0, j], Y[k - j], axes=1)
                else:
                    acc = acc + np.einsum("mj,jmn->mn", W[:, j], Y[k - j])
            Y[k] = hnu * f - acc
            if not np.all(np.abs(Y[k]) < GL_BLOWUP):
                raise StepTooLarge(f"GL trajectory exceeded {GL_BLOWUP:g} at step {k}")
    t = np.arange(K + 1) * h
    X = X0[None] + Y
    return t, (X[:, 0, :] if single else X)


@dataclass(frozen=True)
class MCSample:
    t: np.ndarray
    X: np.ndarray  # (K+1, M, n)
    x0: np.ndarray
    nu: np.ndarray
    params: dict


def monte_carlo(sys, runs: int, t_end: float, h: float = 1e-3, seed: int = 0, threads: int | None = None) -> MCSample:
    """Random point trajectories of ``sys`` (x0, parameters and order uniform in their boxes)."""
    if runs < 1:
        raise DomainError("runs must be >= 1")
    rng = np.random.default_rng(seed)
    lo = np.array([c.lo for c in sys.x0])
    hi = np.array([c.hi for c in sys.x0])
    x0 = lo + (hi - lo) * rng.random((runs, sys.n))
    nu = sys.nu.lo + (sys.nu.hi - sys.nu.lo) * rng.random(runs)
    if sys.nu.is_point():
        nu = np.full(runs, sys.nu.lo)
    params = {}
    for key in sorted(sys.params):
        p = sys.params[key]
        params[key] = p.lo + (p.hi - p.lo) * rng.random(runs)
    shared_nu = bool(np.all(nu == nu[0]))
    chunk = 50
    starts = list(range(0, runs, chunk))

    def run(s):
        e = min(s + chunk, runs)
        P = {k: v[s:e] for k, v in params.items()}
        return gl_simulate(sys.n, nu[s] if shared_nu else nu[s:e], lambda X: sys.A_point(X, P), x0[s:e], h, t_end)

    if threads is None:
        threads = int(os.environ.get("FRACREACH_THREADS", "1") or 1)
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    t = parts[0][0]
    X = np.concatenate([p[1] for p in parts], axis=1)
    return MCSample(t, X, x0, nu, params)


def gl_allowance(x) -> np.ndarray:
    return 5e-3 * (1.0 + np.abs(x))


@dataclass(frozen=True)
class Containment:
    runs: int
    contained: int
    worst_excess: float
    first_violation: tuple | None

    @property
    def ok(self) -> bool:
        return self.contained == self.runs


def check_containment(tube, mc: MCSample, stride: int = 10) -> Containment:
    """Check every GL sample (every ``stride`` steps) against each tube row covering it."""
    rows = tube.rows
    lo = np.array([[c.lo for c in r.x] for r in rows])
    hi = np.array([[c.hi for c in r.x] for r in rows])
    tl = np.array([r.t_lo for r in rows])
    th = np.array([r.t_hi for r in rows])
    M = mc.X.shape[1]
    bad = np.zeros(M, dtype=bool)
    worst = 0.0
    first = None
    for k in range(0, len(mc.t), stride):
        t = mc.t[k]
        sel = (tl <= t) & (t <= th)
        if not np.any(sel):
            continue
        x = mc.X[k]  # (M, n)
        tol = gl_allowance(x)
        below = lo[sel][:, None, :] - tol[None] - x[None]
        above = x[None] - hi[sel][:, None, :] - tol[None]
        exc = np.maximum(below, above).max(axis=(0, 2))
        viol = exc > 0.0
        if np.any(viol):
            worst = max(worst, float(exc.max()))
            if first is None:
                m = int(np.argmax(viol))
                first = (float(t), m, x[m].tolist())
            bad |= viol
    return Containment(M, int(M - bad.sum()), worst, first)


# -- Mittag-Leffler oracle --------------------------------------------------------


def _fmt(v, digits: int) -> str:
    s = mpmath.nstr(v, digits)
    if s.endswith(".0"):
        s = s[:-2]
    return s


def ml_highprec(nu, beta, z, digits: int = 30) -> str:
    """``E_{nu,beta}(z)`` by direct series summation in extended precision."""
    if not 1 <= digits <= 200:
        raise DomainError("digits must lie in [1, 200]")
    with mpmath.workdps(digits + 20):
        nu_ = mpmath.mpf(nu)
        beta_ = mpmath.mpf(beta)
        z_ = mpmath.mpf(z)
        if nu_ <= 0 or beta_ <= 0:
            raise DomainError("nu and beta must be positive")
        if abs(z_) > 50:
            raise BudgetExceeded("|z| must not exceed 50")
    # cancellation for negative z costs about log10(max term) digits
    # the largest term is about exp(|z|**(1/nu))
    extra = 0
    if z != 0:
        peak = math.log(abs(float(z))) / float(nu)
        if peak > math.log(ORACLE_MAX_DIGITS * math.log(10.0)):
            raise BudgetExceeded("oracle would need more than %d extra digits" % ORACLE_MAX_DIGITS)
        extra = int(math.exp(peak) / math.log(10.0)) + 5
    eps = mpmath.mpf(10) ** (-(digits + 10))
    with mpmath.workdps(digits + 20 + extra):
        nu_, beta_, z_ = mpmath.mpf(nu), mpmath.mpf(beta), mpmath.mpf(z)
        total = mpmath.mpf(0)
        zp = mpmath.mpf(1)
        k = 0
        while True:
            term = zp / mpmath.gamma(nu_ * k + beta_)
            total += term
            if k > 2 and abs(term) < eps and abs(z_) < (nu_ * k + beta_):
                break
            k += 1
            if k > 200000:
                raise BudgetExceeded("series did not settle")
            zp *= z_
        return _fmt(total, digits)


def erfc_series(x, digits: int = 30):
    """Independent ``erfc`` via the Maclaurin series of ``erf`` (moderate ``x`` only)."""
    with mpmath.workdps(digits + 30):
        x = mpmath.mpf(x)
        s = mpmath.mpf(0)
        term = x
        n = 0
        while True:
            add = term / (2 * n + 1)
            s += add
            if abs(add) < mpmath.mpf(10) ** (-(digits + 15)):
                break
            n += 1
            term *= -x * x / n
        return 1 - 2 * s / mpmath.sqrt(mpmath.pi)


def ml_half_closed_form(z, digits: int = 30) -> str:
    """``E_{1/2,1}(z) = exp(z**2) erfc(-z)`` using :func:`erfc_series`."""
    with mpmath.workdps(digits + 20):
        z = mpmath.mpf(z)
        return _fmt(mpmath.exp(z * z) * erfc_series(-z, digits), digits)


# -- frequency domain ---------------------------------------------------------


@dataclass(frozen=True)
class RationalTF:
    """``gain * prod(s - zeros) / prod(s - poles)`` with real zeros and poles."""

    zeros: tuple[float, ...]
    poles: tuple[float, ...]
    gain: float

    def __post_init__(self):
        vals = (*self.zeros, *self.poles, self.gain)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("transfer function entries must be finite")
        for z in self.zeros:
            for p in self.poles:
                if abs(z - p) <= 1e-12 * max(1.0, abs(p)):
                    raise DomainError(f"pole {p} cancels zero {z}")

    @property
    def order(self) -> int:
        return len(self.poles)

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        num = np.ones_like(s) * self.gain
        for z in self.zeros:
            num = num * (s - z)
        den = np.ones_like(s)
        for p in self.poles:
            den = den * (s - p)
        return num / den

    def response(self, omega):
        return self(1j * np.asarray(omega, dtype=float))


def oustaloup(nu: float, wb: float, wh: float, N: int) -> RationalTF:
    """Recursive pole/zero approximation of ``s**nu`` on ``[wb, wh]`` (order ``2N+1``)."""
    if not 0.0 < nu < 1.0:
        raise DomainError("nu must lie in (0, 1)")
    if not 0.0 < wb < wh:
        raise DomainError("need 0 < wb < wh")
    if N < 1:
        raise DomainError("N must be >= 1")
    r = wh / wb
    ks = range(-N, N + 1)
    zw = [wb * r ** ((k + N + 0.5 * (1.0 - nu)) / (2 * N + 1)) for k in ks]
    pw = [wb * r ** ((k + N + 0.5 * (1.0 + nu)) / (2 * N + 1)) for k in ks]
    gain = wh**nu * math.prod(a / b for a, b in zip(zw, pw))
    tf = RationalTF(tuple(-w for w in zw), tuple(-w for w in pw), gain)
    wc = math.sqrt(wb * wh)
    scale = wc**nu / abs(complex(tf.response(wc)))
    return RationalTF(tf.zeros, tf.poles, gain * scale)


def freq_exact(omega, nu: float = 0.5):
    """``1 / (1 + (j omega)**nu)`` on the principal branch."""
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0.0)):
        raise DomainError("omega must be positive")
    jw = w**nu * np.exp(1j * nu * np.pi / 2)
    return 1.0 / (1.0 + jw)


def freq_feedback(tf: RationalTF, omega):
    """``1 / (1 + H(j omega))`` for an approximation ``H`` of ``s**nu``."""
    return 1.0 / (1.0 + tf.response(omega))


def oustaloup_warburg(nu: float, wb: float, wh: float, N: int, margin_decades: float = 1.0) -> RationalTF:
    """Approximation of ``s**nu`` built on ``[wb, wh]`` widened by ``margin_decades`` each side."""
    if margin_decades < 0:
        raise DomainError("margin must be >= 0")
    f = 10.0**margin_decades
    return oustaloup(nu, wb / f, wh * f, N)


@dataclass(frozen=True)
class StateSpace:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        b = np.array(self.b, dtype=float).reshape(-1)
        c = np.array(self.c, dtype=float).reshape(-1)
        n = A.shape[0]
        if A.shape != (n, n) or b.shape != (n,) or c.shape != (n,):
            raise DimensionMismatch("A must be n x n with b, c of length n")
        for name, v in (("A", A), ("b", b), ("c", c)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        object.__setattr__(self, "d", float(self.d))

    @property
    def order(self) -> int:
        return self.A.shape[0]


def freq_ss(ss: StateSpace, omega) -> complex:
    """``c^T (j omega I - A)^{-1} b + d``."""
    n = ss.order
    M = 1j * float(omega) * np.eye(n) - ss.A
    if np.linalg.cond(M) > 1e14:
        raise SingularAtFrequency(f"j*{omega} is (nearly) an eigenvalue of A")
    x = np.linalg.solve(M, ss.b.astype(complex))
    return complex(ss.c @ x + ss.d)


_REF_A_ROW = (
    -559.71, -277.1, -76.197, -24.835, -9.9316, -2.4829,
    -0.77609, -0.29764, -0.067652, -0.017081, -0.0039062,
)
_REF_SUBDIAG = (256.0, 128.0, 32.0, 8.0, 4.0, 1.0, 0.25, 0.125, 0.03125, 0.0078125)
_REF_C = (
    1.7692, 2.3998, 1.3484, 0.77563, 0.48601, 0.16983,
    0.066826, 0.029657, 0.0073522, 0.0019502, 0.00045835,
)


def load_paper_ss() -> StateSpace:
    """Reference 11th-order realisation of ``1 / (1 + s**0.5)``."""
    n = 11
    A = np.zeros((n, n))
    A[0] = _REF_A_ROW
    for i, v in enumerate(_REF_SUBDIAG):
        A[i + 1, i] = v
    b = np.zeros(n)
    b[0] = 8.0
    return StateSpace(A, b, np.array(_REF_C), 0.030653)


SWEEP_COLUMNS = (
    "omega", "re_exact", "im_exact", "re_approx", "im_approx",
    "mag_db_exact", "mag_db_approx", "phase_deg_exact", "phase_deg_approx",
)


def _db(v):
    return 20.0 * np.log10(np.abs(v))


def sweep(approx: Callable[[np.ndarray], np.ndarray], wb: float, wh: float, points: int, nu: float = 0.5):
    """Rows of :data:`SWEEP_COLUMNS` over ``points`` log-spaced frequencies."""
    if points < 2:
        raise DomainError("need at least two frequencies")
    w = np.logspace(math.log10(wb), math.log10(wh), points)
    ex = freq_exact(w, nu)
    ap = np.asarray(approx(w), dtype=complex)
    return [
        (float(w[k]), ex[k].real, ex[k].imag, ap[k].real, ap[k].imag,
         float(_db(ex[k])), float(_db(ap[k])),
         math.degrees(np.angle(ex[k])), math.degrees(np.angle(ap[k])))
        for k in range(points)
    ]


def max_deviation(rows) -> tuple[float, float]:
    """Largest magnitude (dB) and phase (degrees) gap of a sweep."""
    dm = max(abs(r[5] - r[6]) for r in rows)
    dp = max(abs((r[7] - r[8] + 180.0) % 360.0 - 180.0) for r in rows)
    return dm, dp


def write_sweep(path, rows: Sequence[tuple]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
