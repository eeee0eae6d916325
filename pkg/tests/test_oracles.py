from __future__ import annotations

import csv
import math

import mpmath
import numpy as np
import pytest

from fracreach.errors import BudgetExceeded, DomainError, SingularAtFrequency, StepTooLarge
from fracreach.model import build_cubic
from fracreach.oracles import (
    SWEEP_COLUMNS,
    RationalTF,
    StateSpace,
    check_containment,
    erfc_series,
    freq_exact,
    freq_feedback,
    freq_ss,
    gl_simulate,
    gl_weights,
    load_paper_ss,
    max_deviation,
    ml_half_closed_form,
    ml_highprec,
    monte_carlo,
    oustaloup,
    oustaloup_warburg,
    sweep,
    write_sweep,
)
from fracreach.reach import Slicing, simulate

from oracle_values import E_ERFC_1, F_J1, ML, REF_SS_MAX_DB, REF_SS_MAX_DEG


def linear(a):
    return lambda X: np.full((X.shape[0], 1, 1), a)


# -- Grunwald-Letnikov -----------------------------------------------------------


def test_gl_weights_recursion():
    w = gl_weights(0.5, 4)[0]
    assert w[0] == 1.0 and w[1] == -0.5
    assert w[2] == pytest.approx(-0.125) and w[3] == pytest.approx(-0.0625)
    assert np.all(gl_weights(1.0, 5)[0, 2:] == 0.0)


def test_gl_integer_order_exponential():
    t, x = gl_simulate(1, 1.0, linear(-1.0), [1.0], 1e-3, 1.0)
    assert abs(x[-1, 0] - math.exp(-1)) <= 1e-3
    assert t[-1] == pytest.approx(1.0)


def test_gl_half_order_matches_series():
    t, x = gl_simulate(1, 0.5, linear(-1.0), [1.0], 1e-4, 1.0)
    assert abs(x[-1, 0] - float(ML[(0.5, -1.0)])) <= 5e-3


def test_gl_zero_rhs_is_constant():
    _, x = gl_simulate(2, 0.7, lambda X: np.zeros((X.shape[0], 2, 2)), [1.5, -2.0], 1e-2, 1.0)
    assert np.all(x == np.array([1.5, -2.0]))


def test_gl_integer_order_is_forward_euler():
    h, a = 1e-2, -0.7
    _, x = gl_simulate(1, 1.0, lambda X: a * X[:, :, None] ** 2, [1.0], h, 0.5)
    y = 0.0
    for k in range(1, 51):
        xp = 1.0 + y
        y = h * (a * xp * xp * xp) + y
        assert x[k, 0] == 1.0 + y


def test_gl_batch_with_per_run_orders():
    x0 = np.array([[1.0], [1.0]])
    _, X = gl_simulate(1, np.array([0.5, 1.0]), linear(-1.0), x0, 1e-3, 0.5)
    _, a = gl_simulate(1, 0.5, linear(-1.0), [1.0], 1e-3, 0.5)
    _, b = gl_simulate(1, 1.0, linear(-1.0), [1.0], 1e-3, 0.5)
    assert np.allclose(X[:, 0, 0], a[:, 0], rtol=1e-12) and np.allclose(X[:, 1, 0], b[:, 0], rtol=1e-12)


def test_gl_errors():
    with pytest.raises(StepTooLarge):
        gl_simulate(1, 0.9, linear(50.0), [1.0], 1e-2, 5.0)
    with pytest.raises(DomainError):
        gl_simulate(1, 0.5, linear(-1.0), [1.0], 0.0, 1.0)
    with pytest.raises(DomainError):
        gl_simulate(1, 1.5, linear(-1.0), [1.0], 0.1, 1.0)


def test_monte_carlo_is_seeded():
    sys = build_cubic("b")
    a = monte_carlo(sys, 20, 0.2, h=1e-2, seed=4)
    b = monte_carlo(sys, 20, 0.2, h=1e-2, seed=4)
    assert np.array_equal(a.X, b.X)
    assert np.all((a.nu >= 0.8) & (a.nu <= 0.9))
    assert np.all((a.params["p"] >= -2.0) & (a.params["p"] <= -1.0))


def test_containment_check_flags_violations():
    sys = build_cubic("a")
    tube = simulate(sys, 0.5, Slicing.uniform(0.5))
    mc = monte_carlo(sys, 30, 0.5, h=1e-3, seed=1)
    assert check_containment(tube, mc).ok
    shifted = type(mc)(mc.t, mc.X + 1.0, mc.x0, mc.nu, mc.params)
    res = check_containment(tube, shifted)
    assert not res.ok and res.worst_excess > 0.5 and res.first_violation is not None


# -- extended precision ------------------------------------------------------------


def test_highprec_examples():
    assert ml_highprec(1.0, 1.0, 1.0, 21) == "2.71828182845904523536"
    assert ml_highprec(0.5, 1.0, 0.0) == "1"
    assert ml_highprec(0.5, 1.0, -1.0) == ML[(0.5, -1.0)]


def test_highprec_against_erfc_identity():
    assert ml_half_closed_form(-1.0) == E_ERFC_1
    with mpmath.workdps(40):
        assert abs(erfc_series(1.0) - mpmath.erfc(1)) < mpmath.mpf(10) ** -30
    for z in (-2.0, -0.5, 0.3, 1.0):
        a = mpmath.mpf(ml_highprec(0.5, 1.0, z, 25))
        b = mpmath.mpf(ml_half_closed_form(z, 25))
        assert abs(a - b) <= abs(b) * mpmath.mpf(10) ** -23


def test_highprec_guards():
    with pytest.raises(BudgetExceeded):
        ml_highprec(0.5, 1.0, 60.0)
    with pytest.raises(DomainError):
        ml_highprec(0.5, 1.0, 1.0, digits=500)


# -- frequency domain ---------------------------------------------------------------


def test_oustaloup_orders():
    assert oustaloup(0.5, 0.01, 100.0, 2).order == 5
    assert oustaloup(0.5, 0.01, 100.0, 5).order == 11
    with pytest.raises(DomainError):
        oustaloup(1.2, 0.01, 100.0, 2)
    with pytest.raises(DomainError):
        oustaloup(0.5, 100.0, 0.01, 2)


def test_oustaloup_centre_and_slope():
    H = oustaloup(0.5, 0.01, 100.0, 5)
    assert abs(H.response(1.0)) == pytest.approx(1.0, rel=1e-6)
    mag = lambda w: 20 * math.log10(abs(H.response(w)))
    slope = mag(10 ** 0.5) - mag(10 ** -0.5)
    assert abs(slope - 20 * 0.5) <= 0.5


def test_oustaloup_phase_flat():
    H = oustaloup(0.5, 0.01, 100.0, 5)
    w = np.logspace(-1, 1, 41)
    ph = np.angle(freq_feedback(H, w))
    assert np.all(ph >= -math.pi / 4 - 0.1) and np.all(ph <= 0.1)
    ph_h = np.angle(H.response(w))
    assert np.all(np.abs(ph_h - math.pi / 4) <= 0.1)


def test_rational_tf_validation():
    with pytest.raises(DomainError):
        RationalTF((-1.0,), (-1.0,), 1.0)
    assert RationalTF((), (-2.0,), 2.0).response(0.0) == pytest.approx(1.0)


def test_freq_exact_limits_and_value():
    assert abs(freq_exact(1e-12)) == pytest.approx(1.0, abs=1e-5)
    assert abs(np.angle(freq_exact(1e-12))) < 1e-5
    assert np.angle(freq_exact(1e16)) == pytest.approx(-math.pi / 4, abs=1e-6)
    v = complex(freq_exact(1.0))
    assert abs(v.real - F_J1[0]) <= 1e-14 and abs(v.imag - F_J1[1]) <= 1e-14
    with pytest.raises(DomainError):
        freq_exact(0.0)


def test_reference_state_space():
    ss = load_paper_ss()
    assert ss.order == 11 and ss.d == 0.030653
    assert ss.A[0, 0] == -559.71 and ss.A[0, -1] == -0.0039062 and ss.b[0] == 8.0
    rows = sweep(lambda w: np.array([freq_ss(ss, x) for x in w]), 0.01, 100.0, 200)
    dm, dp = max_deviation(rows)
    assert dm <= REF_SS_MAX_DB and dp <= REF_SS_MAX_DEG
    hf = freq_ss(ss, 1e6)
    assert np.isfinite(hf.real) and abs(hf - ss.d) < 1e-3


def test_singular_frequency():
    ss = StateSpace(np.zeros((1, 1)), [1.0], [1.0], 0.0)
    with pytest.raises(SingularAtFrequency):
        freq_ss(ss, 0.0)


def test_own_construction_over_band():
    H = oustaloup_warburg(0.5, 0.01, 100.0, 5)
    dm, dp = max_deviation(sweep(lambda w: freq_feedback(H, w), 0.01, 100.0, 200))
    assert dm <= 2.0 and dp <= 10.0


def test_sweep_csv(tmp_path):
    H = oustaloup_warburg(0.5, 0.01, 100.0, 2)
    rows = sweep(lambda w: freq_feedback(H, w), 0.01, 100.0, 400)
    path = tmp_path / "sweep.csv"
    write_sweep(path, rows)
    with open(path) as fh:
        data = list(csv.reader(fh))
    assert tuple(data[0]) == SWEEP_COLUMNS and len(data) == 401
    w = [float(r[0]) for r in data[1:]]
    assert w == sorted(w) and w[0] == pytest.approx(0.01) and w[-1] == pytest.approx(100.0)
