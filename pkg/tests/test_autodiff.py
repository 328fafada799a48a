import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardpinn import autodiff as ad
from hardpinn.autodiff import EvaluationError, Jet2, KinkError, NanError, Tape, grad_params, jet2_eval, value_and_grad
from hardpinn.nn import Mlp

from oracles import central_difference_gradient


def test_cubic_jet():
    j = jet2_eval(lambda x: x * x * x, 2.0)
    assert (j.value, j.d1, j.d2) == (8.0, 12.0, 12.0)


def test_constant_jet():
    j = jet2_eval(lambda x: 3.5, 0.7)
    assert (j.value, j.d1, j.d2) == (3.5, 0.0, 0.0)


def test_tanh_matches_finite_difference():
    j = jet2_eval(lambda x: x.tanh(), 0.3)
    h = 1e-5
    fd = (np.tanh(0.3 + h) - np.tanh(0.3 - h)) / (2 * h)
    assert abs(j.d1 - fd) < 1e-7
    assert j.d2 == pytest.approx(-2 * np.tanh(0.3) * (1 - np.tanh(0.3) ** 2), rel=1e-14)


@pytest.mark.parametrize("name,f,df,d2f", [
    ("exp", lambda j: j.exp(), np.exp, np.exp),
    ("sigmoid", lambda j: j.sigmoid(), lambda x: np.exp(-x) / (1 + np.exp(-x)) ** 2,
     lambda x: np.exp(-x) * (np.exp(-x) - 1) / (1 + np.exp(-x)) ** 3),
    ("sqrt", lambda j: j.sqrt(), lambda x: 0.5 / np.sqrt(x), lambda x: -0.25 * x ** -1.5),
    ("recip", lambda j: 1.0 / j, lambda x: -1 / x**2, lambda x: 2 / x**3),
])
def test_primitives(name, f, df, d2f):
    x0 = 0.8
    j = jet2_eval(f, x0)
    assert j.d1 == pytest.approx(df(x0), rel=1e-13)
    assert j.d2 == pytest.approx(d2f(x0), rel=1e-12)


def test_erf_derivative():
    j = jet2_eval(lambda x: x.erf(), 0.4)
    assert j.d1 == pytest.approx(2 / np.sqrt(np.pi) * np.exp(-0.16), rel=1e-14)
    assert j.d2 == pytest.approx(-0.8 * 2 / np.sqrt(np.pi) * np.exp(-0.16), rel=1e-13)


def test_vector_argument_needs_direction():
    with pytest.raises(ValueError):
        jet2_eval(lambda xs: xs[0] * xs[1], [1.0, 2.0])
    j = jet2_eval(lambda xs: xs[0] * xs[0] * xs[1], [1.5, 2.0], direction=1)
    assert (j.value, j.d1, j.d2) == (4.5, 2.25, 0.0)


def test_division_by_zero_is_an_evaluation_error():
    with pytest.raises(EvaluationError):
        jet2_eval(lambda x: 1.0 / (x - x), 1.0)


def test_abs_kink_rejected():
    tape = Tape()
    v = tape.input(np.array([0.0, 1.0]))
    with pytest.raises(KinkError):
        ad.absolute(v)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=6), st.floats(-2, 2))
def test_polynomial_jets_match_symbolic(coeffs, x0):
    def f(x):
        acc = Jet2.constant(0.0)
        for c in reversed(coeffs):
            acc = acc * x + c
        return acc

    j = jet2_eval(f, x0)
    P = np.polynomial.Polynomial(coeffs)
    for got, want in zip((j.value, j.d1, j.d2), (P(x0), P.deriv(1)(x0), P.deriv(2)(x0))):
        scale = sum(abs(c) * (abs(x0) + 1) ** 6 for c in coeffs) + 1
        assert abs(got - want) <= 8 * np.finfo(float).eps * scale


@given(st.floats(-1.5, 1.5), st.floats(0.2, 2.0))
def test_product_rule_three_terms(x0, a):
    w = jet2_eval(lambda x: 1 - 3 * x * x + 2 * x * x * x, x0)
    n = jet2_eval(lambda x: (a * x).tanh(), x0)
    prod = jet2_eval(lambda x: (1 - 3 * x * x + 2 * x * x * x) * (a * x).tanh(), x0)
    expanded = w.d2 * n.value + 2 * w.d1 * n.d1 + w.value * n.d2
    assert abs(prod.d2 - expanded) <= 8 * np.finfo(float).eps * (abs(expanded) + 1)


def test_grad_square():
    g = grad_params(lambda th: th[0] * th[0], np.array([3.0]))
    assert g.tolist() == [6.0]


def test_unused_parameter_gets_exact_zero():
    g = grad_params(lambda th: ad.tanh(th[0]) * 2.0, np.array([0.1, 5.0]))
    assert g[1] == 0.0


def test_nan_in_forward_sweep_reported():
    with pytest.raises(NanError) as info:
        grad_params(lambda th: (th * 0.0 + np.nan).sum(), np.array([1.0]))
    assert info.value.node is not None


def test_physics_loss_of_tiny_net_matches_fd():
    net = Mlp([1, 1, 1])
    theta = np.array([0.7, -0.2, 1.3, 0.1])
    x = np.linspace(0.1, 0.9, 5)[:, None]

    def loss_var(th):
        j = net.forward(th, Jet2(x, 1.0, 0.0))
        r = j.d2 + 1.0
        return (r * r).sum()

    def loss_num(th):
        j = net.forward(th, Jet2(x, 1.0, 0.0))
        return float(np.sum((j.d2 + 1.0) ** 2))

    g = grad_params(loss_var, theta)
    fd = central_difference_gradient(loss_num, theta, h=1e-6)
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-9)


@pytest.mark.parametrize("seed", range(100))
def test_composed_loss_gradient_random_seeds(seed):
    rng = np.random.default_rng(seed)
    theta = rng.normal(size=4)
    A = rng.normal(size=(3, 4))

    def build(th, mod):
        z = A @ th if mod is np else th.__rmatmul__(A)
        h = mod.tanh(z) if mod is np else ad.tanh(z)
        e = mod.exp(0.3 * th[0]) if mod is np else ad.exp(th[0] * 0.3)
        out = (h * h).sum() * e + th[1] / (2.0 + th[2] * th[2])
        return out

    g = value_and_grad(lambda th: build(th, ad), theta)[1]
    fd = central_difference_gradient(lambda th: float(build(th, np)), theta, h=1e-6)
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-9)


def test_lu_solve_gradient_flows_through_rhs_only():
    import scipy.linalg

    A = np.array([[3.0, 1.0], [1.0, 2.0]])
    lu = scipy.linalg.lu_factor(A)
    w = np.array([1.0, -2.0])

    def f(th):
        c = ad.lu_solve(lu, th * th)
        return (c * w).sum()

    theta = np.array([0.4, 1.1])
    g = grad_params(f, theta)
    fd = central_difference_gradient(lambda th: float(np.linalg.solve(A, th * th) @ w), theta)
    np.testing.assert_allclose(g, fd, rtol=1e-8)


def test_tape_topological_order():
    tape = Tape()
    x = tape.input(np.array([0.5, 2.0]))
    y = ad.tanh(x * x) + x[0]
    _ = (y * y).sum()
    for node in tape.nodes:
        assert all(p.index < node.index for p in node.parents)
