"""Verified reachability via Mittag-Leffler type enclosures.

Each state component of the (transformed) system is enclosed as
``z_i(t) in E_{nu,1}([lambda_i] t**nu) [z_i](0)`` on a slice ``[t_k, t_k + T]``.
The parameter intervals come from the Picard-type iteration

    lambda_i <- a_ii(Z) + sum_{j != i} a_ij(Z) Z_j / Z_i + [-mu_i, mu_i] / Z_i

where ``Z`` is the state box over the slice.  The result is accepted once an
iterate is mapped into itself; further iterations then only contract.

Restarting at ``t_k > 0`` discards memory; the right-hand side is inflated by
``[-mu, mu]`` to account for it.  A reference enclosure computed from ``t = 0``
over the whole horizon is intersected with every slice and drives the
parameter contractor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import (
    BudgetExceeded,
    DomainError,
    EmptyIntersection,
    EvaluationDomainError,
    HorizonExceeded,
    NotConverged,
    NotConvergedEnclosure,
    ZeroCrossingInitialState,
)
from .interval import (
    Interval,
    IntervalVector,
    add_ru,
    hull,
    intersect,
    mul_ru,
    pow_neg_real,
    pow_real,
)
from .linalg import TransformPair, imat_vec
from .model import DiagDominantSystem, QuasiLinearSystem, diagonalize
from .specfun import MLQuery, ml_interval, rgamma_enclosure

log = logging.getLogger(__name__)

EPS_REL = 1e-6
EPS_ABS = 1e-12
BLOWUP = 1e8
# iterates whose ML argument exceeds this are treated as divergent
ARG_LIMIT = 8.0
# after the first step, a jump in total width by this factor counts as divergence
GROWTH_LIMIT = 4.0
STALL_AFTER = 10
WIDTH_INFL = 1e-2


@dataclass(frozen=True)
class IterOptions:
    max_iter: int = 200
    stall_tol: float = 1e-4
    max_contract: int = 50
    ml_tol: float = 1e-13


@dataclass(frozen=True)
class MLEnclosure:
    """Componentwise enclosure ``E([lambda_i] (t - t_start)**nu) z0_i`` on ``[t_start, t_start + T]``."""

    lambdas: IntervalVector
    z0: IntervalVector
    nu: Interval
    horizon: Interval
    converged: bool
    iterations: int
    t_start: float = 0.0

    @property
    def T(self) -> float:
        return self.horizon.hi

    @property
    def t_end(self) -> float:
        return self.t_start + self.horizon.hi


@dataclass(frozen=True)
class SliceResult:
    t_start: float
    t_end: float
    enclosure: MLEnclosure | None
    mu: tuple[float, ...]
    Z_sup: tuple[float, ...]
    status: str = "ok"


def _ml_box(lams, z0, nu: Interval, tnu: Interval, tol: float) -> IntervalVector:
    out = []
    for lam, z in zip(lams, z0):
        arg = lam * tnu
        E = ml_interval(MLQuery(nu, 1.0, arg, tol))
        out.append(E * z)
    return IntervalVector(out)


def _rhs_ratio(sys: DiagDominantSystem, zb: IntervalVector) -> IntervalVector:
    A = sys.A_of(zb)
    n = sys.n
    out = []
    for i in range(n):
        acc = A[i, i]
        for j in range(n):
            if j != i:
                acc = acc + A[i, j] * (zb[j] / zb[i])
        mu = sys.mu[i]
        if mu > 0.0:
            acc = acc + Interval(-mu, mu) / zb[i]
        out.append(acc)
    return IntervalVector(out)


def _check_z0(z0: IntervalVector) -> None:
    for i, c in enumerate(z0):
        if c.lo <= 0.0 <= c.hi:
            raise ZeroCrossingInitialState(i, c)


def _widen(x: Interval, it: int) -> Interval:
    # a fixed relative inflation stalls when the map is only weakly
    # contracting, so a width-proportional term kicks in after a while
    extra = 0.0
    if it > STALL_AFTER:
        extra = x.width * WIDTH_INFL * 2.0 ** ((it - STALL_AFTER - 1) // STALL_AFTER)
    return x.inflate(EPS_REL, add_ru(EPS_ABS, extra))


def _blown(lams: IntervalVector, tnu_hi: float) -> bool:
    for l in lams:
        m = max(abs(l.lo), abs(l.hi))
        if not (m < BLOWUP and m * tnu_hi <= ARG_LIMIT):
            return True
    return False


def iterate_lambda(
    sys: DiagDominantSystem,
    z0: IntervalVector | None = None,
    T: float = 1.0,
    opts: IterOptions = IterOptions(),
    t_start: float = 0.0,
) -> MLEnclosure:
    """Fixed-point iteration for the parameter intervals on ``[0, T]``."""
    z0 = sys.z0 if z0 is None else z0
    if not T > 0.0:
        raise DomainError(f"slice length must be positive, got {T}")
    _check_z0(z0)
    nu = sys.nu
    horizon = Interval(0.0, T)
    tnu = pow_real(horizon, nu)
    A0 = sys.A_of(z0)
    lam = IntervalVector(A0[i, i].inflate(EPS_REL, EPS_ABS) for i in range(sys.n))

    if _blown(lam, tnu.hi):
        raise NotConverged("seed parameters already exceed the argument limit")

    def F(l):
        zb = _ml_box(l, z0, nu, tnu, opts.ml_tol)
        return _rhs_ratio(sys, zb)

    new = None
    it = 0
    try:
        for it in range(1, opts.max_iter + 1):
            new = F(lam)
            if _blown(new, tnu.hi):
                raise NotConverged(f"parameter enclosure blew up after {it} iterations")
            if new.subset_of(lam):
                break
            w_old = sum(c.width for c in lam)
            w_new = sum(c.width for c in new)
            if it >= 2 and w_new > GROWTH_LIMIT * w_old:
                raise NotConverged(f"parameter enclosure diverging at iteration {it}")
            lam = IntervalVector(_widen(hull(a, b), it) for a, b in zip(lam, new))
        else:
            raise NotConverged(f"no self-inclusion after {opts.max_iter} iterations")
        # contraction phase: every further image stays inside the last one
        lam = new
        for _ in range(opts.max_contract):
            nxt = F(lam).intersect(lam)
            it += 1
            old_w = sum(c.width for c in lam)
            new_w = sum(c.width for c in nxt)
            lam = nxt
            if old_w - new_w <= opts.stall_tol * max(old_w, 1e-300):
                break
    except (BudgetExceeded, EvaluationDomainError, OverflowError) as exc:
        raise NotConverged(f"enclosure evaluation failed: {exc}") from exc
    return MLEnclosure(lam, z0, nu, horizon, True, it, t_start)


def evaluate_enclosure(e: MLEnclosure, t: Interval, tol: float = 1e-13) -> IntervalVector:
    """State box over slice-local times ``t`` (a subinterval of the horizon)."""
    if not e.converged:
        raise NotConvergedEnclosure("enclosure did not pass the self-inclusion test")
    t = t if isinstance(t, Interval) else Interval(t)
    if not t.subset_of(e.horizon):
        raise HorizonExceeded(f"time {t} outside the horizon {e.horizon}")
    if t.hi == 0.0:
        return e.z0
    return _ml_box(e.lambdas, e.z0, e.nu, pow_real(t, e.nu), tol)


def evaluate_at(e: MLEnclosure, t: Interval, tol: float = 1e-13) -> IntervalVector:
    """Like :func:`evaluate_enclosure` but with absolute times."""
    lo = max(t.lo - e.t_start, 0.0)
    hi = min(t.hi - e.t_start, e.horizon.hi)
    if t.lo - e.t_start < -1e-12 * max(1.0, abs(t.lo)) or t.hi - e.t_start > e.horizon.hi * (1 + 1e-12):
        raise HorizonExceeded(f"time {t} outside [{e.t_start}, {e.t_end}]")
    return evaluate_enclosure(e, Interval(lo, max(lo, hi)), tol)


def truncation_mu(Z_sup, t_k: float, T: float, nu: Interval) -> np.ndarray:
    """Inflation radius for restarting at ``t_k`` with slice length ``T``.

    Both ``Z (t_k + T)**-nu / Gamma(1 - nu)`` and ``Z T**-nu / Gamma(1 - nu)``
    are evaluated over the order interval and the larger upper bound is used.
    """
    if not T > 0.0:
        raise DomainError(f"slice length must be positive, got {T}")
    if t_k < 0.0:
        raise DomainError("t_k must be >= 0")
    Z = np.asarray(Z_sup, dtype=float)
    if np.any(Z < 0.0):
        raise DomainError("Z_sup must be >= 0")
    if nu.lo >= 1.0:
        return np.zeros_like(Z)
    # 1/Gamma is increasing on (0, 1], so the supremum sits at 1 - nu.lo
    rg = rgamma_enclosure((Interval(1.0) - Interval(nu.lo))).hi
    v1 = pow_neg_real(Interval(t_k) + T, nu).hi
    v2 = pow_neg_real(Interval(T), nu).hi
    fac = mul_ru(max(v1, v2), rg)
    return np.array([mul_ru(float(z), fac) for z in Z])


def restart(sys: DiagDominantSystem, prev: SliceResult, T: float | None = None) -> DiagDominantSystem:
    """System for the slice following ``prev`` with the inflated right-hand side."""
    if prev.enclosure is None:
        raise NotConvergedEnclosure("previous slice has no enclosure")
    e = prev.enclosure
    T = e.T if T is None else T
    z0 = evaluate_enclosure(e, Interval(e.T))
    mu = truncation_mu(prev.Z_sup, prev.t_end, T, sys.nu)
    return sys.with_start(z0, mu)


def _f_tilde(sys: DiagDominantSystem, box: IntervalVector) -> IntervalVector:
    f = imat_vec(sys.A_of(box), box)
    return IntervalVector(
        fi + Interval(-m, m) if m > 0.0 else fi for fi, m in zip(f, sys.mu)
    )


def contract_lambda(
    curr: MLEnclosure, ref: MLEnclosure, sys: DiagDominantSystem, t_window: Interval
) -> MLEnclosure:
    """Intersect ``[lambda_i]`` with ``(f_i(Z) & f_i(Z_ref)) / (Z_i & Z_ref_i)``."""
    ze = evaluate_at(curr, t_window)
    zr = evaluate_at(ref, t_window)
    fe = _f_tilde(sys, ze)
    fr = _f_tilde(sys, zr)
    out = []
    for i, lam in enumerate(curr.lambdas):
        num = intersect(fe[i], fr[i])
        den = intersect(ze[i], zr[i])
        if den.lo <= 0.0 <= den.hi:
            out.append(lam)
            continue
        out.append(intersect(lam, num / den))
    return replace(curr, lambdas=IntervalVector(out))


# -- driver -------------------------------------------------------------------


@dataclass(frozen=True)
class Slicing:
    """``uniform`` (one length T), ``grid`` (explicit breakpoints) or ``multi_horizon``."""

    mode: str
    values: tuple[float, ...]

    @classmethod
    def uniform(cls, T: float) -> "Slicing":
        return cls("uniform", (float(T),))

    @classmethod
    def grid(cls, times: Sequence[float]) -> "Slicing":
        return cls("grid", tuple(float(t) for t in times))

    @classmethod
    def multi_horizon(cls, horizons: Sequence[float]) -> "Slicing":
        return cls("multi_horizon", tuple(sorted(float(t) for t in horizons)))

    def breakpoints(self, t_end: float) -> list[float]:
        if self.mode == "uniform":
            T = self.values[0]
            if not T > 0.0:
                raise DomainError("slice length must be positive")
            k = max(1, round(t_end / T))
            if abs(k * T - t_end) > 1e-12 * t_end:
                k = math.ceil(t_end / T - 1e-12)
            pts = [min(j * T, t_end) for j in range(k)] + [t_end]
        elif self.mode in ("grid", "multi_horizon"):
            pts = sorted({0.0, *self.values, t_end})
            pts = [p for p in pts if 0.0 <= p <= t_end]
        else:
            raise DomainError(f"unknown slicing mode {self.mode!r}")
        out = [pts[0]]
        for p in pts[1:]:
            if p > out[-1]:
                out.append(p)
        return out


@dataclass(frozen=True)
class SimOptions:
    samples_per_slice: int = 8
    transform: bool = True
    x_space: bool = True
    reference: bool = True
    contractor: bool = True
    strict: bool = False
    iter: IterOptions = IterOptions()


@dataclass(frozen=True)
class TubeRow:
    t_lo: float
    t_hi: float
    x: IntervalVector
    z: IntervalVector


@dataclass(frozen=True)
class _Frame:
    kind: str  # "z" or "x"
    encl: MLEnclosure


@dataclass
class Tube:
    """Sampled enclosure tube in transformed (z) and original (x) coordinates."""

    name: str
    nu: Interval
    mode: str
    transform: TransformPair
    rows: list[TubeRow]
    slices: list[SliceResult]
    frames: list[_Frame] = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    def _frames_covering(self, t: Interval):
        for f in self.frames:
            e = f.encl
            if e.t_start <= t.lo and t.hi <= e.t_end:
                yield f

    def enclose(self, t: Interval) -> tuple[IntervalVector, IntervalVector]:
        """Intersection of every enclosure valid on ``t``: (x box, z box)."""
        z = x = None
        for f in self._frames_covering(t):
            b = evaluate_at(f.encl, t)
            if f.kind == "z":
                z = b if z is None else z.intersect(b)
            else:
                x = b if x is None else x.intersect(b)
        if z is None and x is None:
            raise HorizonExceeded(f"no enclosure covers {t}")
        if z is not None:
            xz = z if self.transform.is_identity() else self.transform.to_x(z)
            x = xz if x is None else x.intersect(xz)
        else:
            z = self.transform.to_z(x)
        return x, z

    def at(self, t: float) -> IntervalVector:
        return self.enclose(Interval(t))[0]

    def sup_at(self, t: float, component: int = 0) -> float:
        return self.at(t)[component].hi

    @property
    def t_end(self) -> float:
        return self.rows[-1].t_hi


def _run_frame(dsys: DiagDominantSystem, t_end: float, slicing: Slicing, opts: SimOptions):
    """Enclosures in one coordinate frame: (frames, slices, diagnostics)."""
    io = opts.iter
    diag = {"iterations": [], "fallback_slices": [], "reference": None}
    pts = slicing.breakpoints(t_end)
    frames: list[MLEnclosure] = []
    if slicing.mode == "multi_horizon":
        slices = []
        Z = np.zeros(dsys.n)
        for k, Tm in enumerate(pts[1:]):
            try:
                e = iterate_lambda(dsys, dsys.z0, Tm, io)
            except NotConverged as exc:
                if opts.strict:
                    raise NotConverged(str(exc), k) from exc
                diag["fallback_slices"].append(k)
                slices.append(SliceResult(0.0, Tm, None, tuple(0.0 for _ in Z), tuple(Z), "failed"))
                continue
            frames.append(e)
            diag["iterations"].append(e.iterations)
            box = evaluate_enclosure(e, e.horizon)
            Z = np.maximum(Z, [c.mag for c in box])
            slices.append(SliceResult(0.0, Tm, e, tuple(0.0 for _ in Z), tuple(Z)))
        if not frames:
            raise NotConverged("no horizon produced an enclosure", 0)
        return frames, slices, diag

    ref = None
    if opts.reference:
        try:
            ref = iterate_lambda(dsys, dsys.z0, t_end, io)
            frames.append(ref)
            diag["reference"] = ref.iterations
        except NotConverged as exc:
            log.info("reference enclosure unavailable: %s", exc)
    slices = []
    sys_k = dsys
    Z = np.zeros(dsys.n)
    for k, (a, b) in enumerate(zip(pts[:-1], pts[1:])):
        T = b - a
        e = None
        status = "ok"
        try:
            e = iterate_lambda(sys_k, sys_k.z0, T, io, t_start=a)
        except (NotConverged, ZeroCrossingInitialState) as exc:
            if opts.strict or ref is None or k == 0 and ref is None:
                if isinstance(exc, ZeroCrossingInitialState):
                    raise
                raise NotConverged(str(exc), k) from exc
            status = "reference"
            diag["fallback_slices"].append(k)
        if e is not None and ref is not None and opts.contractor and ref is not e:
            e = contract_lambda(e, ref, sys_k, Interval(a, b))
        if e is not None:
            frames.append(e)
            diag["iterations"].append(e.iterations)
        # state over the slice and at its end, intersected with the reference
        window = Interval(a, b)
        boxes, ends = [], []
        if e is not None:
            boxes.append(evaluate_at(e, window))
            ends.append(evaluate_at(e, Interval(b)))
        if ref is not None:
            boxes.append(evaluate_at(ref, window))
            ends.append(evaluate_at(ref, Interval(b)))
        box, end = boxes[0], ends[0]
        for bx in boxes[1:]:
            box = box.intersect(bx)
        for en in ends[1:]:
            end = end.intersect(en)
        Z = np.maximum(Z, [c.mag for c in box])
        slices.append(SliceResult(a, b, e, tuple(sys_k.mu), tuple(Z), status))
        if k + 1 < len(pts) - 1:
            T_next = pts[k + 2] - b
            mu = truncation_mu(Z, b, T_next, dsys.nu)
            sys_k = dsys.with_start(end, mu)
    return frames, slices, diag


def simulate(
    sys: QuasiLinearSystem,
    t_end: float,
    slicing: Slicing,
    opts: SimOptions = SimOptions(),
) -> Tube:
    """Verified tube for ``sys`` on ``[0, t_end]``."""
    if not t_end > 0.0:
        raise DomainError("t_end must be positive")
    if opts.samples_per_slice < 1:
        raise DomainError("samples_per_slice must be >= 1")
    dsys = diagonalize(sys, opts.transform)
    z_frames, slices, diag = _run_frame(dsys, t_end, slicing, opts)
    frames = [_Frame("z", e) for e in z_frames]
    transformed = not dsys.tp.is_identity()
    diag["x_space"] = "skipped"
    if opts.x_space and transformed:
        if any(c.lo <= 0.0 <= c.hi for c in sys.x0):
            diag["x_space"] = "zero in x0"
        else:
            xsys = diagonalize(sys, transform=False)
            try:
                x_frames, _, xdiag = _run_frame(xsys, t_end, slicing, replace(opts, strict=False))
                frames += [_Frame("x", e) for e in x_frames]
                diag["x_space"] = f"{len(x_frames)} enclosures"
            except (NotConverged, ZeroCrossingInitialState) as exc:
                diag["x_space"] = f"failed: {exc}"
    tube = Tube(sys.name, sys.nu, slicing.mode, dsys.tp, [], slices, frames, diag)
    pts = slicing.breakpoints(t_end)
    m = opts.samples_per_slice
    rows = []
    for a, b in zip(pts[:-1], pts[1:]):
        edges = [a] + [a + (b - a) * j / m for j in range(1, m)] + [b]
        for lo, hi in zip(edges[:-1], edges[1:]):
            try:
                x, z = tube.enclose(Interval(lo, hi))
            except HorizonExceeded as exc:
                k = next(i for i, sl in enumerate(slices) if sl.t_end >= hi)
                raise NotConverged(f"no enclosure covers [{lo}, {hi}]", k) from exc
            rows.append(TubeRow(lo, hi, x, z))
    tube.rows = rows
    return tube
