import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from hardpinn.problems import (DIRICHLET, NEUMANN, DomainError, MetricError, P3Params, analytic_p1, analytic_p2,
                               analytic_p3, get_problem, p2_coefficients, p3_F, problem1, problem3, problem4,
                               relative_l2)

from oracles import p3_symbolic_pieces, piecewise_quadratic_eval, piecewise_quadratic_solve


def _pieces(x_sym, expr_left, expr_right):
    return [sp.lambdify(x_sym, e, "mpmath") for e in (expr_left, expr_right)]


def test_p1_known_values():
    assert analytic_p1(0.0) == 0.0 and abs(analytic_p1(1.0)) < 1e-15
    assert analytic_p1(0.5) == pytest.approx(5 / 22, abs=1e-14)


def test_p1_matches_direct_solve():
    b, c = piecewise_quadratic_solve([0.5], [0.1, 1.0])
    x = np.linspace(0, 1, 1001)
    np.testing.assert_allclose(analytic_p1(x), piecewise_quadratic_eval(x, [0.5], [0.1, 1.0], b, c), atol=1e-13)


def _self_check_piecewise_quadratic(u, interfaces, kappas, h=1e-4):
    # quadratic pieces: centred second difference is exact up to roundoff
    nodes = [0.0, *interfaces, 1.0]
    for m, (a, b) in enumerate(zip(nodes[:-1], nodes[1:])):
        x = np.linspace(a, b, 103)[1:-1]
        x = x[(x - h > a) & (x + h < b)]
        d2 = (u(x + h) - 2 * u(x) + u(x - h)) / h**2
        assert np.max(np.abs(-kappas[m] * d2 - 1.0)) <= 1e-6 * max(1, 1 / kappas[m])
    assert abs(u(np.array([0.0]))[0]) <= 1e-12 and abs(u(np.array([1.0]))[0]) <= 1e-12


@settings(max_examples=20)
@given(st.lists(st.floats(0.05, 5.0), min_size=4, max_size=4))
def test_p2_coefficients_match_direct_solve(kappas):
    big_k, c1, c3, c5, c7 = p2_coefficients(*kappas)
    b, c = piecewise_quadratic_solve([0.25, 0.5, 0.75], kappas)
    want_b = np.array([c1] * 4) / (big_k * np.asarray(kappas))
    want_c = np.array([0.0, c3, c5, c7]) / (big_k * np.asarray(kappas))
    assert np.max(np.abs(b - want_b)) <= 1e-12 * max(1.0, np.abs(b).max())
    assert np.max(np.abs(c - want_c)) <= 1e-12 * max(1.0, np.abs(c).max())


def test_p2_single_material_reduces():
    x = np.linspace(0, 1, 101)
    np.testing.assert_allclose(analytic_p2(x, (2.0,) * 4), x * (1 - x) / 4.0, atol=1e-15)


def test_p2_self_check():
    k = (0.1, 1.0, 0.1, 1.0)
    _self_check_piecewise_quadratic(lambda x: analytic_p2(x, k), [0.25, 0.5, 0.75], k)
    b, c = piecewise_quadratic_solve([0.25, 0.5, 0.75], k)
    for i, xi in enumerate((0.25, 0.5, 0.75)):
        left = -xi**2 / (2 * k[i]) + b[i] * xi + c[i]
        assert abs(analytic_p2(xi, k) - left) <= 1e-12
        assert abs((-xi + k[i] * b[i]) - (-xi + k[i + 1] * b[i + 1])) <= 1e-12


@pytest.fixture(scope="module")
def p3_symbolic():
    return p3_symbolic_pieces()


def test_p3_matches_symbolic(p3_symbolic):
    x, ul, ur, *_ = p3_symbolic
    fl, fr = (sp.lambdify(x, sp.N(e, 30), "mpmath") for e in (ul, ur))
    for xv in np.linspace(0, 1, 41):
        want = float(fl(xv) if xv < 0.5 else fr(xv))
        assert analytic_p3(xv) == pytest.approx(want, abs=1e-13)


def test_p3_pde_residual(p3_symbolic):
    x, ul, ur, k1, k2 = p3_symbolic
    p = P3Params()
    d2l = sp.lambdify(x, sp.diff(ul, x, 2), "numpy")
    d2r = sp.lambdify(x, sp.diff(ur, x, 2), "numpy")
    xs_l = np.linspace(0, 0.5, 103)[1:-1]
    xs_r = np.linspace(0.5, 1, 103)[1:-1]
    # the symbolic second derivative is cross-checked against a difference quotient of the package's field
    h = 1e-4
    for xs, d2, k in ((xs_l, d2l, 0.1), (xs_r, d2r, 1.0)):
        fd = (analytic_p3(xs + h) - 2 * analytic_p3(xs) + analytic_p3(xs - h)) / h**2
        np.testing.assert_allclose(fd, np.broadcast_to(d2(xs), xs.shape), atol=1e-5)
        src = np.where(xs < 0.5, p.f0, np.exp(-((xs - 0.75) ** 2) / 0.01))
        assert np.max(np.abs(-k * np.broadcast_to(d2(xs), xs.shape) - src)) <= 1e-8


def test_p3_boundary_and_interface(p3_symbolic):
    x, ul, ur, k1, k2 = p3_symbolic
    assert abs(analytic_p3(1.0)) <= 1e-12
    h = 1e-6
    assert abs((analytic_p3(h) - analytic_p3(0.0)) / h) <= 1e-5  # u' = 0 at the Neumann end
    left = float(ul.subs(x, sp.Rational(1, 2)).evalf(30))
    assert abs(analytic_p3(0.5) - left) <= 1e-12
    flux_l = float((k1 * sp.diff(ul, x)).subs(x, sp.Rational(1, 2)).evalf(30))
    flux_r = float((k2 * sp.diff(ur, x)).subs(x, sp.Rational(1, 2)).evalf(30))
    assert abs(flux_l - flux_r) <= 1e-12


def test_p3_F_at_center():
    assert float(p3_F(0.75)) == pytest.approx(0.005, abs=1e-16)


def test_problem_specs():
    p1 = problem1()
    assert p1.nodes == (0.0, 0.5, 1.0) and p1.left.kind == DIRICHLET
    assert problem3().left.kind == NEUMANN
    assert get_problem("p2").n_subdomains == 4
    with pytest.raises(ValueError):
        get_problem("p9")
    with pytest.raises(DomainError):
        p1.subdomain([1.5])
    assert p1.subdomain([0.5]).tolist() == [1]  # interface point belongs to the right piece


def test_p4_geometry():
    p = problem4()
    assert p.kappa(0.1, 0.5) == 0.1 and p.kappa(1.9, 0.5) == 1.0
    assert p.subdomain(0.8 + 0.4 * 0.5 - 1e-9, 0.5) == 0
    segs = p.segments()
    assert sum(s.kind == DIRICHLET for s in segs) == 3 and sum(s.kind == NEUMANN for s in segs) == 3
    nx, ny = p.interface_normal
    assert nx > 0 and ny < 0 and abs(nx * nx + ny * ny - 1) < 1e-15
    # each Gaussian equals its amplitude at its own centre
    for i, ((cx, cy), amp) in enumerate(zip(p.centers, p.amplitudes)):
        assert p.source_terms(cx, cy)[i] == amp
    assert p.source(1.0, 0.2) == pytest.approx(20.0, rel=1e-2)
    gx, gy = p.test_grid()
    assert gx.size == 101 * 101


def test_relative_l2():
    u = np.array([1.0, -2.0, 3.0])
    assert relative_l2(u, u) == 0.0
    assert relative_l2(2 * u, u) == 1.0
    eps = np.array([0.1, 0.0, -0.2])
    assert relative_l2(u + eps, u) == pytest.approx(np.sqrt(0.05) / np.sqrt(14), rel=1e-14)
    with pytest.raises(MetricError):
        relative_l2(u, np.zeros(3))
    with pytest.raises(MetricError):
        relative_l2(u, u[:2])
