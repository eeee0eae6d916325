"""End-to-end acceptance checks; each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` or as a script.
"""

from __future__ import annotations

import itertools
import math
import sys

import mpmath
import numpy as np
import pytest

from fracreach.cli import EXIT_OK, main
from fracreach.interval import Interval, IntervalMatrix, IntervalVector
from fracreach.linalg import TransformPair, midpoint_eigvectors, transform_state
from fracreach.model import (
    BATTERY_EIGS,
    battery_closed_loop,
    build_cubic,
    diagonalize,
    linear_system,
    scenario,
)
from fracreach.oracles import (
    check_containment,
    freq_exact,
    freq_feedback,
    freq_ss,
    load_paper_ss,
    max_deviation,
    ml_highprec,
    monte_carlo,
    oustaloup_warburg,
    sweep,
)
from fracreach.reach import MLEnclosure, Slicing, contract_lambda, iterate_lambda, simulate
from fracreach.specfun import crude_envelope, ml_point

from conftest import record
from oracle_values import Z0_LARGE, Z0_SMALL

STEPS = [2.0**-k for k in range(6)]
MC_RUNS = 200

_tubes: dict = {}


def cubic_tube(case: str, T: float):
    key = (case, T)
    if key not in _tubes:
        _tubes[key] = simulate(build_cubic(case), 1.0, Slicing.uniform(T))
    return _tubes[key]


# -- 1 ---------------------------------------------------------------------------


def test_criterion_01_soundness():
    report = []
    ok = True
    for case in ("a", "b"):
        mc = monte_carlo(build_cubic(case), MC_RUNS, 1.0, h=1e-3, seed=0)
        for T in STEPS:
            res = check_containment(cubic_tube(case, T), mc, stride=1)
            ok &= res.ok
            report.append(f"{case}/T={T:g}:{res.contained}/{res.runs}")
    for name in ("battery_small", "battery_large"):
        sys_ = scenario(name)
        tube = simulate(sys_, 10.0, Slicing.multi_horizon(range(1, 11)))
        mc = monte_carlo(sys_, MC_RUNS, 10.0, h=1e-3, seed=0)
        res = check_containment(tube, mc, stride=1)
        ok &= res.ok
        report.append(f"{name}:{res.contained}/{res.runs}")
    record(1, ok, "soundness " + " ".join(report))
    assert ok


# -- 2, 3 ------------------------------------------------------------------------


def test_criterion_02_step_size_ordering():
    sups = [cubic_tube("a", T).sup_at(1.0) for T in STEPS[:5]]
    monotone = all(b <= a for a, b in zip(sups, sups[1:]))
    gain = 1.0 - sups[-1] / sups[0]
    ok = monotone and gain >= 0.05
    detail = ", ".join(f"{s:.6f}" for s in sups)
    record(2, ok, f"sup x(1) over T=1..1/16: [{detail}] non-increasing={monotone} reduction={gain:.2%}")
    assert monotone
    assert gain >= 0.05


def test_criterion_03_case_b_saturation():
    a, b = cubic_tube("b", 2.0**-3), cubic_tube("b", 2.0**-4)
    worst = 0.0
    for t in np.linspace(0.1, 1.0, 91):
        sa, sb = a.sup_at(float(t)), b.sup_at(float(t))
        worst = max(worst, abs(sa - sb) / max(abs(sa), abs(sb)))
    ok = worst <= 0.05
    record(3, ok, f"max relative sup difference T=1/8 vs 1/16 on [0.1, 1]: {worst:.3%}")
    assert ok


# -- 4, 5 ------------------------------------------------------------------------


def test_criterion_04_ml_identity():
    bad = 0
    worst = 0.0
    with mpmath.workdps(40):
        for z in np.linspace(-5.0, 5.0, 101):
            r = ml_point(Interval(1.0), 1.0, float(z), 1e-12)
            e = mpmath.exp(mpmath.mpf(float(z)))
            allowed = 1e-10 * (1.0 + float(e))
            worst = max(worst, r.width / allowed)
            bad += not (mpmath.mpf(r.lo) <= e <= mpmath.mpf(r.hi) and r.width <= allowed)
    record(4, bad == 0, f"E_1,1 vs exp on 101 points: {bad} failures, max width/allowed {worst:.2e}")
    assert bad == 0


def test_criterion_05_envelope():
    failures = []
    for nu in (0.5, 0.8):
        for zeta in np.linspace(0.0, 10.0, 50):
            zeta = float(zeta)
            r = ml_point(Interval(nu), 1.0, -zeta, 1e-10)
            env = crude_envelope(Interval(nu), zeta)
            v = mpmath.mpf(ml_highprec(nu, 1.0, -zeta, 50))
            lo, hi = max(r.lo, env.lo), min(r.hi, env.hi)
            contains = lo <= hi and mpmath.mpf(lo) <= v <= mpmath.mpf(hi)
            lower_ok = r.lo >= math.exp(-zeta) - 1e-12
            upper_ok = r.hi <= 1.0 / (1.0 + zeta) + 1e-6
            if not (contains and lower_ok and upper_ok):
                failures.append((nu, round(zeta, 4)))
    ok = not failures
    detail = f"{len(failures)}/100 grid points fail"
    if failures:
        detail += f", first {failures[0]}"
    record(5, ok, "envelope: " + detail)
    assert ok


# -- 6, 7, 8 ---------------------------------------------------------------------


def _matches_up_to_order_and_sign(got: IntervalVector, ref) -> float:
    # the eigenvector basis is only fixed up to ordering and sign
    worst = math.inf
    for perm in itertools.permutations(range(len(ref))):
        err = 0.0
        for i, j in enumerate(perm):
            lo, hi = ref[j]
            c = got[i]
            cands = []
            for s in (1.0, -1.0):
                a, b = (c.lo, c.hi) if s > 0 else (-c.hi, -c.lo)
                cands.append(max(abs(a - lo) / abs(lo), abs(b - hi) / abs(hi)))
            err = max(err, min(cands))
        worst = min(worst, err)
    return worst


def test_criterion_06_battery_transform():
    A, _ = battery_closed_loop()
    tp = TransformPair.from_matrix(midpoint_eigvectors(A))
    errs = []
    for name, ref in (("battery_small", Z0_SMALL), ("battery_large", Z0_LARGE)):
        errs.append(_matches_up_to_order_and_sign(transform_state(tp, scenario(name).x0), ref))
    ok = max(errs) <= 1e-3
    record(6, ok, f"z(0) max relative endpoint error small={errs[0]:.2e} large={errs[1]:.2e}")
    assert ok


def test_criterion_07_pole_placement():
    AC, _ = battery_closed_loop()
    got, want = np.poly(AC), np.poly(np.array(BATTERY_EIGS))
    rel = float(np.max(np.abs(got - want) / np.abs(want)))
    a33 = float(AC[2, 2])
    ok = rel <= 1e-6 and abs(a33 + 0.4832) <= 5e-4
    record(7, ok, f"char poly max relative error {rel:.2e}, A_C33={a33:.7f}")
    assert ok


def test_criterion_08_oustaloup():
    ss = load_paper_ss()
    dm, dp = max_deviation(sweep(lambda w: np.array([freq_ss(ss, x) for x in w]), 0.01, 100.0, 200))
    H = oustaloup_warburg(0.5, 0.01, 100.0, 5)
    om, op = max_deviation(sweep(lambda w: freq_feedback(H, w), 0.01, 100.0, 200))
    assert np.isfinite(abs(freq_exact(1.0)))
    ok = dm <= 1.0 and dp <= 6.0 and om <= 2.0 and op <= 10.0
    record(8, ok, f"built-in order 11: {dm:.4f} dB / {dp:.3f} deg; own N=5: {om:.3f} dB / {op:.3f} deg")
    assert ok


# -- 9 ---------------------------------------------------------------------------


def _random_contractor_case(rng):
    n = int(rng.integers(1, 3))
    nu = Interval(float(rng.uniform(0.4, 1.0)))
    centre = rng.uniform(-3.0, -0.1, n)
    rad = rng.uniform(0.0, 0.3, n)
    A = IntervalMatrix(
        [[Interval(centre[i] - rad[i], centre[i] + rad[i]) if i == j else Interval(0.0) for j in range(n)] for i in range(n)]
    )
    z0 = []
    for _ in range(n):
        lo = float(rng.uniform(0.1, 2.0))
        z0.append(Interval(lo, lo + float(rng.uniform(0.0, 0.5))))
    sys_ = diagonalize(linear_system(A, z0, nu), transform=False)
    T = float(rng.uniform(0.05, 1.0))
    lam_c = IntervalVector(A[i, i].inflate(0.0, float(rng.uniform(0.0, 1.0))) for i in range(n))
    lam_r = IntervalVector(A[i, i].inflate(0.0, float(rng.uniform(0.0, 1.0))) for i in range(n))
    curr = MLEnclosure(lam_c, IntervalVector(z0), nu, Interval(0.0, T), True, 1)
    ref = MLEnclosure(lam_r, IntervalVector(z0), nu, Interval(0.0, T * float(rng.uniform(1.0, 2.0))), True, 1)
    lo = float(rng.uniform(0.0, T))
    return curr, ref, sys_, Interval(lo, float(rng.uniform(lo, T)))


def test_criterion_09_contractor_and_iteration():
    rng = np.random.default_rng(9)
    bad = 0
    for _ in range(1000):
        curr, ref, sys_, tau = _random_contractor_case(rng)
        bad += not contract_lambda(curr, ref, sys_, tau).lambdas.subset_of(curr.lambdas)

    lam_ok = True
    for a in (-2.0, -0.5, -3.7):
        e = iterate_lambda(diagonalize(linear_system([[a]], [1.0], 0.7), transform=False), T=1.0)
        lam_ok &= a in e.lambdas[0] and e.lambdas[0].width <= 1e-9

    worst = 0.0
    lam = (-1.0, -0.5)
    tube = simulate(linear_system(np.diag(lam), [1.0, 2.0], 1.0), 2.0, Slicing.uniform(2.0))
    deg_ok = True
    for t in (0.25, 1.0, 2.0):
        x = tube.at(t)
        for i, (l, x0) in enumerate(zip(lam, (1.0, 2.0))):
            exact = x0 * math.exp(l * t)
            deg_ok &= x[i].lo <= exact <= x[i].hi
            worst = max(worst, x[i].width / exact)
    deg_ok &= worst <= 1e-8

    ok = bad == 0 and lam_ok and deg_ok
    record(9, ok, f"contractor violations {bad}/1000, linear lambda ok={lam_ok}, nu=1 max rel width {worst:.1e}")
    assert ok


# -- 10 --------------------------------------------------------------------------


def test_criterion_10_determinism(tmp_path):
    runs = [
        ["simulate", "--scenario", "cubic_b", "--uniform-T", "0.25", "--t-end", "1"],
        ["simulate", "--scenario", "battery_small", "--multi-horizon", "1,2,3", "--t-end", "3"],
        ["oustaloup", "--nu", "0.5", "--wb", "0.01", "--wh", "100", "--N", "5", "--sweep", "200"],
    ]
    same = True
    for k, argv in enumerate(runs):
        blobs = []
        for rep in range(2):
            p = tmp_path / f"r{k}_{rep}.csv"
            assert main(argv + ["-o", str(p)]) == EXIT_OK
            blobs.append(p.read_bytes())
        same &= blobs[0] == blobs[1]
    a = monte_carlo(build_cubic("b"), 50, 0.5, h=1e-3, seed=3)
    b = monte_carlo(build_cubic("b"), 50, 0.5, h=1e-3, seed=3)
    same &= np.asarray(a.X).tobytes() == np.asarray(b.X).tobytes()
    record(10, same, f"{len(runs)} CLI outputs and one seeded Monte-Carlo batch byte-identical on rerun")
    assert same


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-s", "-q", "-p", "no:cacheprovider"]))
