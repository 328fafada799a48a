import numpy as np
import pytest

from hardpinn.nn import InitScheme
from hardpinn.problems import problem1, problem2, problem4
from hardpinn.soft import SoftAnsatz
from hardpinn.training import PointBlock, CollocationSet, make_collocation, soft_losses


def test_kinds_and_sizes():
    p = problem2()
    phi = SoftAnsatz(p, "phi")
    multi = SoftAnsatz(p, "multinet")
    assert phi.kind == "soft_phi" and len(phi.nets) == 1 and phi.nets[0].widths[0] == 2
    assert multi.kind == "soft_multinet" and len(multi.nets) == 4
    assert [phi.label(m) for m in range(4)] == [0.0, 1 / 3, 2 / 3, 1.0]
    with pytest.raises(ValueError):
        SoftAnsatz(p, "xpinn")


def test_per_subdomain_activations():
    a = SoftAnsatz(problem1(), "multinet", activations=["sigmoid", "tanh"])
    assert [n.activation for n in a.nets] == ["sigmoid", "tanh"]


def test_phi_label_feeds_network():
    p = problem1()
    a = SoftAnsatz(p, "phi")
    theta = a.init_params(InitScheme(seed=1))
    b = a.bind(theta)
    x = np.array([[0.3]])
    direct = a.nets[0](theta, np.array([[0.3, 0.0]]))
    assert b.jet(x).value[0] == pytest.approx(direct[0], rel=1e-15)
    assert b.side_jet(1, x).value[0] == pytest.approx(a.nets[0](theta, np.array([[0.3, 1.0]]))[0], rel=1e-15)


def test_dirichlet_point_loss():
    p = problem1()
    a = SoftAnsatz(p, "multinet", widths=[1, 1])
    theta = np.array([0.0, 0.3, 0.0, 0.0])  # subdomain-0 net is the constant 0.3
    col = CollocationSet(np.zeros((0, 1)), [PointBlock(np.array([[0.0]]), np.array([[-1.0]]), "dirichlet", 0.0)], [])
    dbc, nbc, itf, fint = soft_losses(a.bind(theta), col, p)
    assert dbc == pytest.approx(0.09, rel=1e-15) and nbc == 0.0


def test_equal_nets_have_zero_interface_value_loss():
    p = problem1()
    a = SoftAnsatz(p, "multinet")
    half = a.nets[0].n_params
    theta = a.init_params()
    theta[half:] = theta[:half]
    _, _, itf, fint = soft_losses(a.bind(theta), make_collocation(p), p)
    assert itf == 0.0 and fint > 0.0  # kappas differ, so flux still mismatches


def test_oracle_boundary_values_have_zero_loss():
    p = problem4()
    a = SoftAnsatz(p, "multinet", widths=[2, 1])
    theta = np.zeros(a.n_params)
    col = make_collocation(p, nx=8, ny=4)
    dbc, nbc, itf, fint = soft_losses(a.bind(theta), col, p)
    assert (dbc, nbc, itf, fint) == (0.0, 0.0, 0.0, 0.0)
