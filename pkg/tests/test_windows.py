import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardpinn.autodiff import Jet2, KinkError
from hardpinn.windows import (Polynomial, WindowConstructionError, WindowSpec, constraint_table, eval_window,
                              make_window, window_samples, window_samples_csv)

from oracles import WINDOW_CLOSED_FORMS, poly_eval

CASES = sorted(WINDOW_CLOSED_FORMS)


@pytest.mark.parametrize("kind,k", CASES)
def test_matches_closed_form(kind, k):
    got = make_window(kind, k).coeffs
    want = np.asarray(WINDOW_CLOSED_FORMS[kind, k], dtype=float)
    assert got.shape == want.shape
    assert np.max(np.abs(got - want)) <= 1e-12


@pytest.mark.parametrize("kind,k", CASES + [("interior", 5), ("dirichlet", 4), ("neumann", 6)])
def test_constraint_table_satisfied(kind, k):
    p = make_window(kind, k)
    for tau, d, value in constraint_table(kind, k):
        assert abs(poly_eval(p.coeffs, tau, d) - value) <= 1e-12


def test_minimal_degree():
    for kind, k in CASES:
        assert make_window(kind, k).degree == len(constraint_table(kind, k)) - 1


@pytest.mark.parametrize("kind", ["dirichlet", "neumann"])
def test_second_derivative_at_outer_edge(kind):
    assert abs(make_window(kind, 1).derivative(2)(1.0)) > 1.0
    for k in (2, 3):
        assert abs(make_window(kind, k).derivative(2)(1.0)) <= 1e-12


def test_bad_order_and_kind():
    with pytest.raises(WindowConstructionError):
        make_window("interior", 0)
    with pytest.raises(WindowConstructionError):
        make_window("corner", 1)
    with pytest.raises(WindowConstructionError):
        WindowSpec("interior", 1, 0.0, 0.0)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=7), st.floats(0, 1))
def test_polynomial_derivatives_consistent(coeffs, t):
    p = Polynomial(coeffs)
    ref = np.polynomial.Polynomial(coeffs)
    v, d1, d2 = p.eval2(t)
    for got, want in ((v, ref(t)), (d1, ref.deriv(1)(t)), (d2, ref.deriv(2)(t))):
        assert got == pytest.approx(want, abs=1e-10)


def _jet(x):
    return Jet2(np.asarray(x, dtype=float), 1.0, 0.0)


def test_interior_center_and_edge():
    spec = WindowSpec("interior", 1, 0.25, 0.25)
    for eps in (1e-3, 1e-6):
        j = eval_window(spec, _jet([0.25 + eps]))
        assert abs(j.value[0] - 1) < 100 * eps and abs(j.d1[0]) < 100 * eps
    j = eval_window(spec, _jet([0.5]))
    assert j.value[0] == 0 and j.d1[0] == 0


def test_interior_half_tau():
    spec = WindowSpec("interior", 1, 0.0, 1.0)
    assert eval_window(spec, _jet([0.5])).value[0] == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("kind", ["interior", "dirichlet", "neumann"])
def test_outside_support_is_exact_zero(kind):
    spec = WindowSpec(kind, 2, 0.3, 0.1, normal_sign=1)
    j = eval_window(spec, _jet([0.0, 0.41, 0.9]))
    assert np.all(j.value == 0) and np.all(j.d1 == 0) and np.all(j.d2 == 0)


def test_chain_rule_against_fd():
    spec = WindowSpec("dirichlet", 2, 0.2, 0.3)
    x0, h = 0.33, 1e-5
    j = eval_window(spec, _jet([x0]))
    f = lambda x: eval_window(spec, Jet2(np.array([x]))).value[0]
    assert j.d1[0] == pytest.approx((f(x0 + h) - f(x0 - h)) / (2 * h), rel=1e-8)
    assert j.d2[0] == pytest.approx((f(x0 + h) - 2 * f(x0) + f(x0 - h)) / h**2, rel=1e-4)


@pytest.mark.parametrize("ns", [1, -1])
def test_neumann_slope_at_center(ns):
    spec = WindowSpec("neumann", 1, 1.0, 0.25, normal_sign=ns)
    # approached from the domain side the slope is +1 whatever the normal
    j = eval_window(spec, _jet([1.0]), side=-ns)
    assert j.value[0] == 0.0
    assert j.d1[0] == pytest.approx(1.0, rel=1e-14)


def test_interface_neumann_window_is_odd():
    spec = WindowSpec("neumann", 1, 0.5, 0.25, normal_sign=0)
    a = eval_window(spec, _jet([0.6]))
    b = eval_window(spec, _jet([0.4]))
    assert a.value[0] == pytest.approx(-b.value[0], rel=1e-15)
    left = eval_window(spec, _jet([0.5]), side=-1).d1[0]
    right = eval_window(spec, _jet([0.5]), side=1).d1[0]
    assert left == pytest.approx(1.0) and right == pytest.approx(1.0)


def test_kink_at_center_requires_side():
    with pytest.raises(KinkError):
        eval_window(WindowSpec("neumann", 1, 0.0, 1.0), _jet([0.0]))
    # C1 interior window is smooth enough at its center
    j = eval_window(WindowSpec("interior", 1, 0.0, 1.0), _jet([0.0]))
    assert j.value[0] == 1.0


def test_samples_csv():
    rows = window_samples("interior", 1, 5)
    np.testing.assert_allclose(rows[:, 1], [1, 1 - 3 / 16 + 2 / 64, 0.5, 1 - 27 / 16 + 54 / 64, 0])
    text = window_samples_csv("neumann", 2, 3)
    assert text.splitlines()[0] == "tau,w,dw,d2w"
    assert len(text.splitlines()) == 4
