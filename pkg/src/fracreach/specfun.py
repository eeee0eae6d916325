"""Rigorous Gamma and two-parameter Mittag-Leffler enclosures for real arguments.

Gamma
    ``ln Gamma`` is lifted by the recurrence to an argument ``w >= W`` and
    expanded with the Stirling series.  The remainder after ``M`` terms and each
    of its derivatives lies between zero and the corresponding derivative of the
    first omitted term (``(-1)**M R_M`` is completely monotonic), so Taylor jets
    of ``ln Gamma`` in the argument are enclosed with a certified remainder.

Mittag-Leffler
    ``E_{nu,beta}(z) = sum_i z**i / Gamma(nu*i + beta)``.  An interval order is
    split into pieces; on each piece with centre ``c`` every coefficient
    ``1/Gamma(nu*i + beta)`` is replaced by its Taylor polynomial in
    ``u = nu - c`` (point coefficients up to order ``K-1``, a Lagrange remainder
    coefficient evaluated over the whole piece).  The series is summed
    coefficient-wise for the given ``z`` and the range of the resulting
    polynomial over the piece is bounded.  The tail uses log-convexity of Gamma:
    the term ratios decrease, so the tail is at most ``t_{N+1} / (1 - q)``.

Jets are computed on raw ``mpmath.libmp`` interval tuples, which avoids the
object overhead of the high-level interval context.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import mpmath.libmp as L
import numpy as np
from mpmath.libmp.libmpi import mpi_add, mpi_div, mpi_exp, mpi_log, mpi_mul, mpi_sub

from .errors import BudgetExceeded, DomainError
from .interval import Interval, add_ru, as_interval, hull, intersect, mul_ru, sub_rd

_U = 2.0**-53
Z_MAX = 50.0
MAX_TERMS = 1500
BASE_PREC = 80

# Certified bracket of the positive minimiser of Gamma (psi changes sign inside).
X_STAR = Interval(1.46163214496, 1.46163214497)

_ZERO = (L.fzero, L.fzero)
_ONE = (L.fone, L.fone)


# -- tuple-level interval helpers ---------------------------------------------


def _iv(lo: float, hi: float | None = None):
    hi = lo if hi is None else hi
    return (L.from_float(lo), L.from_float(hi))


def _ivint(k: int):
    v = L.from_int(k)
    return (v, v)


def _bounds(x) -> tuple[float, float]:
    return L.to_float(x[0], rnd=L.round_floor), L.to_float(x[1], rnd=L.round_ceiling)


def _to_interval(x) -> Interval:
    return Interval(*_bounds(x))


def _hull0(x):
    a, b = x
    lo = a if L.mpf_lt(a, L.fzero) else L.fzero
    hi = b if L.mpf_gt(b, L.fzero) else L.fzero
    return (lo, hi)


# -- jets: truncated Taylor series with interval coefficients -------------------


def _jlog(a, prec):
    n = len(a)
    out = [mpi_log(a[0], prec)]
    for k in range(1, n):
        s = mpi_mul(a[k], _ivint(k), prec)
        for j in range(1, k):
            s = mpi_sub(s, mpi_mul(mpi_mul(out[j], a[k - j], prec), _ivint(j), prec), prec)
        out.append(mpi_div(s, mpi_mul(a[0], _ivint(k), prec), prec))
    return out


def _jexp(a, prec):
    n = len(a)
    out = [mpi_exp(a[0], prec)]
    for k in range(1, n):
        s = _ZERO
        for j in range(1, k + 1):
            s = mpi_add(s, mpi_mul(mpi_mul(a[j], out[k - j], prec), _ivint(j), prec), prec)
        out.append(mpi_div(s, _ivint(k), prec))
    return out


def _log2_int(v) -> float:
    v = int(v)
    shift = max(0, v.bit_length() - 60)
    return math.log2(v >> shift) + shift


@lru_cache(maxsize=None)
def _stirling_params(prec: int) -> tuple[int, int]:
    """(M, W): Stirling terms and lift threshold for ~2**-(prec+8) truncation.

    Cost is roughly M + W multiplications, minimised over M.
    """
    best = None
    for M in range(6, 400, 2):
        num, den = L.bernfrac(2 * M + 2)
        c = _log2_int(abs(num)) - _log2_int(den) - math.log2((2 * M + 2) * (2 * M + 1))
        # smallest W with c - (2M+1) log2 W <= -(prec+8)
        W = max(8, math.ceil(2.0 ** ((c + prec + 8) / (2 * M + 1))))
        while c - (2 * M + 1) * math.log2(W) > -(prec + 8):
            W += 1
        if best is None or M + W < best[0] + best[1]:
            best = (M, W)
    return best


@lru_cache(maxsize=None)
def _stirling_table(prec: int, n: int):
    """D[m][k]: coefficient of w**-(2m-1+k) in the k-th jet coefficient (m = 1..M+1)."""
    M, _ = _stirling_params(prec)
    D = []
    for m in range(1, M + 2):
        num, den = L.bernfrac(2 * m)
        row = []
        for k in range(n):
            c = math.comb(2 * m - 2 + k, k) * (-1 if k % 2 else 1)
            row.append(mpi_div(_ivint(num * c), _ivint(den * (2 * m) * (2 * m - 1)), prec))
        D.append(row)
    pi = (L.mpf_pi(prec, L.round_floor), L.mpf_pi(prec, L.round_ceiling))
    half_log_2pi = mpi_div(mpi_log(mpi_mul(pi, _ivint(2), prec), prec), _ivint(2), prec)
    return D, half_log_2pi


def lgamma_jet(x, order: int, prec: int = BASE_PREC):
    """Taylor coefficients of ``u -> ln Gamma(x + u)`` at ``u = 0`` up to ``order``.

    ``x`` is a libmp interval tuple with positive lower endpoint; the returned
    coefficients enclose the true ones for every point of ``x``.
    """
    n = order + 1
    M, W = _stirling_params(prec)
    xlo = _bounds(x)[0]
    if xlo <= 0.0:
        raise DomainError("lgamma_jet needs a positive argument")
    lift = max(0, math.ceil(W - xlo))
    w = mpi_add(x, _ivint(lift), prec) if lift else x
    winv = mpi_div(_ONE, w, prec)
    winv2 = mpi_mul(winv, winv, prec)
    half = (L.from_man_exp(1, -1), L.from_man_exp(1, -1))
    # ln(w + u) = ln w + sum_k (-1)**(k+1) u**k / (k w**k)
    lw = [mpi_log(w, prec)]
    p = _ONE
    for k in range(1, n):
        p = mpi_mul(p, winv, prec)
        t = mpi_div(p, _ivint(k if k % 2 else -k), prec)
        lw.append(t)
    wh = mpi_sub(w, half, prec)
    D, hl2pi = _stirling_table(prec, n)
    s = [mpi_add(mpi_sub(mpi_mul(wh, lw[0], prec), w, prec), hl2pi, prec)]
    for k in range(1, n):
        s.append(mpi_add(mpi_mul(wh, lw[k], prec), lw[k - 1], prec))
    if n > 1:
        s[1] = mpi_sub(s[1], _ONE, prec)
    wk = winv  # w**-(1+k)
    wr = winv  # w**-(2M+1+k)
    for _ in range(M):
        wr = mpi_mul(wr, winv2, prec)
    for k in range(n):
        # sum_m D[m][k] w**-(2m-1+k) by Horner in w**-2
        acc = D[M - 1][k]
        for m in range(M - 2, -1, -1):
            acc = mpi_add(mpi_mul(acc, winv2, prec), D[m][k], prec)
        s[k] = mpi_add(s[k], mpi_mul(acc, wk, prec), prec)
        s[k] = mpi_add(s[k], _hull0(mpi_mul(D[M][k], wr, prec)), prec)
        wk = mpi_mul(wk, winv, prec)
        wr = mpi_mul(wr, winv, prec)
    if lift:
        prod = [_ONE] + [_ZERO] * (n - 1)
        for j in range(lift):
            xj = mpi_add(x, _ivint(j), prec) if j else x
            new = [mpi_mul(prod[0], xj, prec)]
            for k in range(1, n):
                new.append(mpi_add(mpi_mul(prod[k], xj, prec), prod[k - 1], prec))
            prod = new
        lp = _jlog(prod, prec)
        s = [mpi_sub(s[k], lp[k], prec) for k in range(n)]
    return s


def rgamma_jet(x, order: int, prec: int = BASE_PREC):
    """Taylor coefficients of ``u -> 1/Gamma(x + u)``."""
    lg = lgamma_jet(x, order, prec)
    return _jexp([(L.mpf_neg(b), L.mpf_neg(a)) for a, b in lg], prec)


def _gamma_iv(x, prec):
    return mpi_exp(lgamma_jet(x, 0, prec)[0], prec)


def gamma_enclosure(x, prec: int = 64) -> Interval:
    """Enclosure of ``{Gamma(t) : t in x}`` for ``x.lo > 0``."""
    x = as_interval(x)
    if x.lo <= 0.0:
        raise DomainError(f"gamma_enclosure needs x.lo > 0, got {x}")
    g_a = _bounds(_gamma_iv(_iv(x.lo), prec))
    if x.is_point():
        return Interval(*g_a)
    g_b = _bounds(_gamma_iv(_iv(x.hi), prec))
    if x.hi <= X_STAR.lo:
        return Interval(g_b[0], g_a[1])
    if x.lo >= X_STAR.hi:
        return Interval(g_a[0], g_b[1])
    # Gamma(clamp(x*, a, b)) is the minimum; the clamp lies in this sliver
    g_m = _bounds(_gamma_iv(_iv(max(x.lo, X_STAR.lo), min(x.hi, X_STAR.hi)), prec))
    return Interval(g_m[0], max(g_a[1], g_b[1]))


def rgamma_enclosure(x, prec: int = 64) -> Interval:
    """Enclosure of ``{1/Gamma(t) : t in x}`` for ``x.lo > 0``."""
    return 1.0 / gamma_enclosure(x, prec)


def digamma_enclosure(x, prec: int = 64) -> Interval:
    """Enclosure of psi over ``x`` (psi is increasing on the positive axis)."""
    x = as_interval(x)
    if x.lo <= 0.0:
        raise DomainError("digamma needs a positive argument")
    lo = _bounds(lgamma_jet(_iv(x.lo), 1, prec)[1])[0]
    hi = _bounds(lgamma_jet(_iv(x.hi), 1, prec)[1])[1]
    return Interval(lo, hi)


# -- Mittag-Leffler -----------------------------------------------------------


@dataclass(frozen=True)
class MLQuery:
    nu: Interval
    beta: float
    z: Interval
    tol: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "nu", as_interval(self.nu))
        object.__setattr__(self, "z", as_interval(self.z))
        _check_nu(self.nu)
        if not self.tol > 0.0:
            raise DomainError(f"tol must be positive, got {self.tol}")
        if not self.beta > 0.0:
            raise DomainError(f"beta must be positive, got {self.beta}")


@dataclass(frozen=True)
class MLResult:
    """Enclosure plus the diagnostics of one series evaluation."""

    enclosure: Interval
    terms: int
    tail_bound: float
    pieces: int
    path: str
    prec: int
    width_ok: bool


def _check_nu(nu: Interval) -> None:
    if not (0.0 < nu.lo <= nu.hi <= 1.0):
        raise DomainError(f"order nu must lie in (0, 1], got {nu}")


class _PieceTable:
    """Coefficient table ``g[i][k]`` of the Taylor model in nu on one piece."""

    def __init__(self, lo: float, hi: float, K: int, beta: float, prec: int):
        self.lo, self.hi, self.K, self.beta, self.prec = lo, hi, K, beta, prec
        self.c = lo if K == 0 else 0.5 * lo + 0.5 * hi
        self.g: list[list] = []
        self.fmid = np.zeros((K + 1, 0))
        self.frad = np.zeros((K + 1, 0))
        self._lock = threading.Lock()
        self.U = Interval(sub_rd(lo, self.c), -sub_rd(self.c, hi)) if K else Interval(0.0)

    def ensure(self, N: int) -> None:
        if len(self.g) > N:
            return
        with self._lock:
            if len(self.g) > N:
                return
            prec, K = self.prec, self.K
            c = _iv(self.c)
            piece = _iv(self.lo, self.hi)
            beta = _iv(self.beta)
            new = []
            for i in range(len(self.g), N + 1):
                if i == 0:
                    new.append([rgamma_jet(beta, 0, prec)[0]] + [_ZERO] * K)
                    continue
                ii = _ivint(i)
                xc = mpi_add(mpi_mul(c, ii, prec), beta, prec)
                if K == 0:
                    new.append([rgamma_jet(xc, 0, prec)[0]])
                    continue
                jc = rgamma_jet(xc, K - 1, prec)
                xr = mpi_add(mpi_mul(piece, ii, prec), beta, prec)
                jr = rgamma_jet(xr, K, prec)[K]
                row = []
                ip = _ONE
                for k in range(K):
                    row.append(mpi_mul(jc[k], ip, prec))
                    ip = mpi_mul(ip, ii, prec)
                row.append(mpi_mul(jr, ip, prec))
                new.append(row)
            g = self.g + new
            mid = np.empty((K + 1, len(g)))
            rad = np.empty((K + 1, len(g)))
            for i, row in enumerate(g):
                for k, v in enumerate(row):
                    lo, hi = _bounds(v)
                    m = 0.5 * lo + 0.5 * hi
                    mid[k, i] = m
                    rad[k, i] = max(hi - m, m - lo) * (1.0 + 4 * _U)
            self.fmid, self.frad = mid, rad
            self.g = g


class _NuTable:
    def __init__(self, nu_lo: float, nu_hi: float, beta: float, prec: int, npieces: int, K: int):
        if nu_lo == nu_hi:
            self.pieces = [_PieceTable(nu_lo, nu_hi, 0, beta, prec)]
        else:
            inner = [nu_lo + (nu_hi - nu_lo) * j / npieces for j in range(1, npieces)]
            edges = [nu_lo] + inner + [nu_hi]
            self.pieces = [_PieceTable(a, b, K, beta, prec) for a, b in zip(edges[:-1], edges[1:])]

    def ensure(self, N: int) -> None:
        for p in self.pieces:
            p.ensure(N)


_tables: dict = {}
_tables_lock = threading.Lock()

PIECE_WIDTH = 0.01
TAYLOR_ORDER = 8
MAX_REFINE = 8
# refine nu-pieces until the Taylor remainder is below this share of the width
REMAINDER_SHARE = 1e-3


def _base_pieces(nu: Interval) -> int:
    return max(1, math.ceil((nu.hi - nu.lo) / PIECE_WIDTH - 1e-9))


def _choose_pieces(az: float, nu: Interval, beta: float, N: int, target: float) -> int:
    """Smallest ``base * 2**m`` whose estimated Taylor remainder is below ``target``."""
    if nu.is_point():
        return 1
    base = _base_pieces(nu)
    K = TAYLOR_ORDER
    lk = math.lgamma(K + 1)
    for m in range(MAX_REFINE + 1):
        delta = 0.5 * (nu.hi - nu.lo) / (base * 2**m)
        est = 0.0
        for i in range(1, N + 1):
            x = nu.lo * i + beta
            psi = abs(math.log(x + 0.5)) + 1.0 / x
            v = i * math.log(az) - math.lgamma(x) + K * math.log(i * delta * (psi + 1.0)) - lk
            est += math.exp(min(v, 700.0))
        if est <= target:
            return base * 2**m
    return base * 2**MAX_REFINE


def _nu_table(nu: Interval, beta: float, prec: int, npieces: int) -> _NuTable:
    K = 0 if nu.is_point() else TAYLOR_ORDER
    if K == 0:
        npieces = 1
    key = (nu.lo, nu.hi, beta, prec, npieces, K)
    with _tables_lock:
        t = _tables.get(key)
        if t is None:
            t = _tables[key] = _NuTable(nu.lo, nu.hi, beta, prec, npieces, K)
    return t


def clear_tables() -> None:
    """Drop cached coefficient tables (they are otherwise kept for reuse)."""
    with _tables_lock:
        _tables.clear()


def _estimate_terms(az: float, nu_lo: float, beta: float, tol: float) -> tuple[int, float]:
    """Float estimate of the term count and of log2 sum |t_i|."""
    target = math.log(tol) - 3.0
    logs = []
    i = 0
    la = math.log(az)
    while True:
        lt = i * la - math.lgamma(nu_lo * i + beta)
        logs.append(lt)
        x = nu_lo * (i + 1) + beta
        if i > 2 and lt < target and x > 2.0:
            # geometric tail with ratio |z| exp(-nu psi(x)), psi(x) ~ log x - 1/(2x)
            q = az * math.exp(-nu_lo * (math.log(x) - 0.5 / x))
            first = (i + 1) * la - math.lgamma(x)
            if q < 0.95 and first - math.log1p(-q) < target:
                break
        i += 1
        if i > MAX_TERMS:
            raise BudgetExceeded(f"Mittag-Leffler series needs more than {MAX_TERMS} terms at |z|={az}")
    m = max(logs)
    s = m + math.log(sum(math.exp(v - m) for v in logs))
    return i, s / math.log(2.0)


def _tail_bound(az: float, nu_lo: float, beta: float, N: int) -> float:
    """Rigorous bound on sum_{i>N} |z|**i / Gamma(nu*i + beta) for all nu >= nu_lo.

    For ``x = nu_lo*(N+1) + beta >= x*`` the first omitted term is largest at
    ``nu_lo`` and the ratio bound ``|z| exp(-nu psi(x))`` (log-convexity) is
    largest there as well.
    """
    prec = 64
    a = N + 1
    x = mpi_add(mpi_mul(_iv(nu_lo), _ivint(a), prec), _iv(beta), prec)
    if _bounds(x)[0] < X_STAR.hi:
        return math.inf
    jet = lgamma_jet(x, 1, prec)
    psi = jet[1]
    if _bounds(psi)[0] <= 0.0:
        return math.inf
    q = mpi_mul(_iv(az), mpi_exp(mpi_mul(mpi_sub(_ZERO, _iv(nu_lo), prec), psi, prec), prec), prec)
    if _bounds(q)[1] >= 1.0:
        return math.inf
    la = mpi_log(_iv(az), prec)
    t = mpi_exp(mpi_sub(mpi_mul(la, _ivint(a), prec), jet[0], prec), prec)
    return _bounds(mpi_div(t, mpi_sub(_ONE, q, prec), prec))[1]


def _poly_range(P: list[Interval], U: Interval) -> Interval:
    """Range enclosure of sum_k P[k] u**k over u in U."""
    K = len(P) - 1
    if K == 0 or U.is_point():
        return P[0]

    def horner(u):
        acc = P[K]
        for k in range(K - 1, -1, -1):
            acc = acc * u + P[k]
        return acc

    deriv = P[K] * float(K)
    for k in range(K - 1, 0, -1):
        deriv = deriv * U + P[k] * float(k)
    if deriv.lo > 0.0 or deriv.hi < 0.0:
        return hull(horner(Interval(U.lo)), horner(Interval(U.hi)))
    acc = P[0]
    for k in range(1, K + 1):
        acc = acc + P[k] * (U**k)
    return acc


def _sum_float(tab: _PieceTable, z: float, N: int) -> tuple[list[Interval], float]:
    """Coefficient sums in floats with an a-priori rounding-error bound."""
    n = N + 1
    zp = np.full(n, z)
    zp[0] = 1.0
    mid = tab.fmid[:, :n]
    rad = tab.frad[:, :n]
    gam = (2 * n + 8) * _U * 1.01
    with np.errstate(over="ignore", invalid="ignore"):
        zp = np.cumprod(zp)
        t = zp * mid
        s = t.sum(axis=1)
        a = np.abs(t).sum(axis=1)
        r = (np.abs(zp) * rad).sum(axis=1)
    e = (gam * a + r * (1.0 + gam)) * (1.0 + 1e-9) + 1e-300 * n
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(e))):
        return [], math.inf
    out = [Interval(sub_rd(float(s[k]), float(e[k])), add_ru(float(s[k]), float(e[k]))) for k in range(len(s))]
    # the remainder row carries genuine width in nu, not rounding error
    avoid = gam * a + r
    if tab.K:
        avoid[tab.K] = gam * a[tab.K]
    umag = max(abs(tab.U.lo), abs(tab.U.hi))
    err_total = float(sum(avoid[k] * umag**k for k in range(len(s))))
    return out, err_total


def _sum_mp(tab: _PieceTable, z: float, N: int) -> list[Interval]:
    prec = tab.prec
    zz = _iv(z)
    acc = [_ZERO] * (tab.K + 1)
    zp = _ONE
    for i in range(N + 1):
        row = tab.g[i]
        for k in range(tab.K + 1):
            acc[k] = mpi_add(acc[k], mpi_mul(zp, row[k], prec), prec)
        zp = mpi_mul(zp, zz, prec)
    return [_to_interval(v) for v in acc]


def ml_eval(nu, beta: float, z: float, tol: float = 1e-12) -> MLResult:
    """Rigorous enclosure of ``{E_{n,beta}(z) : n in nu}`` with diagnostics."""
    nu = as_interval(nu)
    _check_nu(nu)
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta}")
    z = float(z)
    if not math.isfinite(z):
        raise DomainError("z must be finite")
    if not tol > 0.0:
        raise DomainError("tol must be positive")
    az = abs(z)
    if az > Z_MAX:
        raise BudgetExceeded(f"|z| = {az} exceeds the series range {Z_MAX}")
    if z == 0.0:
        enc = Interval(1.0) if beta == 1.0 else rgamma_enclosure(Interval(beta))
        return MLResult(enc, 1, 0.0, 1, "exact", 64, enc.width <= tol)
    tol = max(tol, 1e-30)
    N, log2_sum = _estimate_terms(az, nu.lo, beta, tol)
    tail = _tail_bound(az, nu.lo, beta, N)
    while not tail <= tol / 8:
        N = int(N * 1.25) + 2
        if N > MAX_TERMS:
            raise BudgetExceeded(f"tail bound not reached within {MAX_TERMS} terms")
        tail = _tail_bound(az, nu.lo, beta, N)

    npieces = _choose_pieces(az, nu, beta, N, max(tol, 1e-6) / 4)
    mp_prec = 64 + max(0, math.ceil(log2_sum)) + math.ceil(math.log2(1.0 / tol))
    mp_prec = int(math.ceil(mp_prec / 32.0) * 32)
    use_float = log2_sum < 900
    while True:
        enc, rem, path, prec, npieces_used = _evaluate(nu, beta, z, N, tol, npieces, use_float, mp_prec)
        use_float = path == "float"
        if nu.is_point() or rem <= max(tol, REMAINDER_SHARE * enc.width):
            break
        if npieces >= _base_pieces(nu) * 2**MAX_REFINE:
            break
        npieces *= 2
    enc = Interval(sub_rd(enc.lo, tail), add_ru(enc.hi, tail))
    return MLResult(enc, N + 1, tail, npieces_used, path, prec, enc.width <= tol)


def _evaluate(nu, beta, z, N, tol, npieces, use_float, mp_prec):
    """Hull over pieces; also returns the largest Taylor-remainder contribution."""
    parts = None
    path, prec = "float", BASE_PREC
    if use_float:
        tab = _nu_table(nu, beta, prec, npieces)
        tab.ensure(N)
        parts, sums = [], []
        for p in tab.pieces:
            P, err = _sum_float(p, z, N)
            if not P or err > tol / 4:
                parts = None
                break
            sums.append(P)
            parts.append(_poly_range(P, p.U))
    if parts is None:
        path, prec = "mp", mp_prec
        tab = _nu_table(nu, beta, prec, npieces)
        tab.ensure(N)
        sums = [_sum_mp(p, z, N) for p in tab.pieces]
        parts = [_poly_range(P, p.U) for P, p in zip(sums, tab.pieces)]
    enc = parts[0]
    for q in parts[1:]:
        enc = hull(enc, q)
    rem = 0.0
    for P, p in zip(sums, tab.pieces):
        if p.K:
            rem = max(rem, mul_ru(P[p.K].mag, max(abs(p.U.lo), abs(p.U.hi)) ** p.K))
    return enc, rem, path, prec, len(tab.pieces)


@lru_cache(maxsize=1 << 16)
def _ml_cached(nu_lo: float, nu_hi: float, beta: float, z: float, tol: float) -> Interval:
    return ml_eval(Interval(nu_lo, nu_hi), beta, z, tol).enclosure


def ml_point(nu, beta: float, z: float, tol: float = 1e-12) -> Interval:
    """Enclosure of ``E_{n,beta}(z)`` over all orders ``n`` in ``nu``."""
    nu = as_interval(nu)
    return _ml_cached(nu.lo, nu.hi, float(beta), float(z), float(tol))


def crude_envelope(nu, zeta: float) -> Interval:
    """Coarse enclosure ``[exp(-zeta), 1/(1+zeta)]`` of ``E_{nu,1}(-zeta)``."""
    zeta = float(zeta)
    if not zeta >= 0.0:
        raise DomainError(f"zeta must be >= 0, got {zeta}")
    if zeta == 0.0:
        return Interval(1.0)
    lo = Interval(-zeta).exp().lo
    hi = (1.0 / (Interval(1.0) + zeta)).hi
    return Interval(lo, hi)


def ml_interval(q: MLQuery) -> Interval:
    """Enclosure of ``{E_{n,beta}(x) : n in nu, x in z}``.

    Uses that ``E_{nu,beta}`` is increasing on the real line for
    ``0 < nu <= 1`` and ``beta >= nu``, so the endpoint values suffice.
    """
    nu, z = q.nu, q.z
    if q.beta < nu.hi:
        raise DomainError("endpoint evaluation needs beta >= nu")
    lo = _ml_endpoint(nu, q.beta, z.lo, q.tol)
    hi = lo if z.is_point() else _ml_endpoint(nu, q.beta, z.hi, q.tol)
    return Interval(lo.lo, hi.hi)


def _ml_endpoint(nu: Interval, beta: float, x: float, tol: float) -> Interval:
    enc = ml_point(nu, beta, x, tol)
    if beta == 1.0:
        if x < 0.0:
            # only the rational upper bound holds for all zeta; exp(-zeta)
            # exceeds E(-zeta) for small zeta once nu < 1
            enc = intersect(enc, Interval(0.0, crude_envelope(nu, -x).hi))
        elif x > 0.0:
            enc = intersect(enc, Interval(1.0, max(enc.hi, 1.0)))
    return enc


def ml_interval_from_float(approx: float, eps: float) -> Interval:
    """Wrap a floating-point ML value with the tolerance ``eps`` of its evaluation."""
    if not eps > 0.0:
        raise DomainError("eps must be positive")
    r = mul_ru((Interval(eps) / (Interval(1.0) + eps)).hi, add_ru(1.0, abs(approx)))
    return Interval(sub_rd(approx, r), add_ru(approx, r))
