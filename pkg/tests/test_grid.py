import math

import numpy as np
import pytest

from wireflow.errors import SolverFailure
from wireflow.grid import cyclic_tridiag_matvec, make_grid, solve_cyclic_tridiag
from oracles import dense_cyclic


def test_make_grid_rejects_coarse_and_bad_length():
    with pytest.raises(ValueError, match="n must be"):
        make_grid(2 * math.pi, 4)
    for L in (0.0, -1.0, math.inf, math.nan):
        with pytest.raises(ValueError):
            make_grid(L, 16)


def test_make_grid_spacing():
    g = make_grid(2 * math.pi, 8)
    assert g.h == pytest.approx(math.pi / 4, abs=1e-15)
    assert g.nodes[3] == pytest.approx(3 * math.pi / 4, abs=1e-15)
    g = make_grid(1.0, 100)
    assert g.h == pytest.approx(0.01, abs=1e-16)
    assert g.nodes[99] == pytest.approx(0.99, abs=1e-15)
    assert abs(g.h * g.n - g.L) <= 1e-15


def test_grid_value_semantics():
    a, b = make_grid(2.0, 16), make_grid(2.0, 16)
    assert a == b and hash(a) == hash(b)
    assert a != make_grid(2.0, 32)
    with pytest.raises(ValueError):
        a.nodes[0] = 1.0


def test_constants_annihilated():
    g = make_grid(3.0, 37)
    c = np.full(g.n, 2.5)
    assert np.all(g.deriv1(c) == 0.0)
    assert np.all(g.deriv2(c) == 0.0)


def test_deriv1_sine_and_order():
    g = make_grid(2 * math.pi, 256)
    s = g.nodes
    assert np.max(np.abs(g.deriv1(np.sin(s)) - np.cos(s))) <= g.h**2
    errs = []
    for n in (64, 128):
        g = make_grid(2 * math.pi, n)
        errs.append(np.max(np.abs(g.deriv1(np.sin(2 * g.nodes)) - 2 * np.cos(2 * g.nodes))))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.02)


def test_deriv1_winding():
    for omega in (1, -2, 3):
        g = make_grid(2 * math.pi, 64)
        theta = g.phase(omega)
        np.testing.assert_allclose(g.deriv1_winding(theta, omega), g.slope(omega), rtol=0, atol=1e-13)
    g = make_grid(2 * math.pi, 64)
    assert np.all(g.deriv1_winding(np.zeros(g.n), 0) == 0.0)
    g = make_grid(2 * math.pi, 256)
    theta = g.nodes + 0.1 * np.sin(g.nodes)
    assert np.max(np.abs(g.deriv1_winding(theta, 1) - (1 + 0.1 * np.cos(g.nodes)))) <= g.h**2


def test_deriv2():
    g = make_grid(2 * math.pi, 256)
    assert np.max(np.abs(g.deriv2(np.sin(g.nodes)) + np.sin(g.nodes))) <= g.h**2
    for omega in (1, -1, 2):
        theta = g.phase(omega) + 0.7
        assert np.max(np.abs(g.deriv2_winding(theta, omega))) <= 1e-10


@pytest.mark.parametrize("op", ["deriv1", "deriv2"])
def test_operator_order(op):
    errs = []
    ns = (32, 64, 128, 256)
    for n in ns:
        g = make_grid(2 * math.pi, n)
        f = np.exp(np.sin(g.nodes))
        exact = np.cos(g.nodes) * f if op == "deriv1" else (np.cos(g.nodes) ** 2 - np.sin(g.nodes)) * f
        errs.append(np.max(np.abs(getattr(g, op)(f) - exact)))
    slope = -np.polyfit(np.log(ns), np.log(errs), 1)[0]
    assert 1.9 <= slope <= 2.1


def test_integrate():
    g = make_grid(2 * math.pi, 64)
    assert g.integrate(np.ones(g.n)) == pytest.approx(2 * math.pi, abs=1e-14)
    assert abs(g.integrate(np.sin(g.nodes))) <= 1e-14
    for n in (8, 9, 64, 1000):
        g = make_grid(2 * math.pi, n)
        assert abs(g.integrate(np.sin(g.nodes) ** 2) - math.pi) <= 1e-13


def test_integral_of_derivative_vanishes():
    rng = np.random.default_rng(3)
    g = make_grid(1.7, 50)
    for _ in range(20):
        f = rng.normal(size=g.n)
        assert abs(g.integrate(g.deriv1(f))) <= 1e-13 * np.max(np.abs(f))


def test_staggered_pair_is_adjoint():
    # <backward_div g, f> = -<g, forward_diff f> in the quadrature inner product
    rng = np.random.default_rng(4)
    g = make_grid(2.0, 33)
    f, m = rng.normal(size=g.n), rng.normal(size=g.n)
    assert g.integrate(g.backward_div(m) * f) == pytest.approx(-g.integrate(m * g.forward_diff(f)), abs=1e-12)


def test_solve_identity_exact():
    rhs = np.linspace(-1, 1, 17)
    z = np.zeros(17)
    assert np.array_equal(solve_cyclic_tridiag(z, np.ones(17), z, rhs), rhs)


def test_solve_heat_step_keeps_constants():
    n, w = 64, 3.7
    off = np.full(n, -w)
    x = solve_cyclic_tridiag(off, np.full(n, 1 + 2 * w), off, np.full(n, 0.25))
    np.testing.assert_allclose(x, 0.25, rtol=0, atol=1e-15)


def test_solve_against_dense_oracle():
    rng = np.random.default_rng(11)
    n = 128
    for _ in range(10):
        sub, sup = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
        diag = (np.abs(sub) + np.abs(sup)) / rng.uniform(0.3, 0.99, n) * rng.choice([-1, 1], n)
        b = rng.normal(size=n)
        x = solve_cyclic_tridiag(sub, diag, sup, b)
        assert np.max(np.abs(dense_cyclic(sub, diag, sup) @ x - b)) / np.max(np.abs(b)) <= 1e-12
        assert np.max(np.abs(cyclic_tridiag_matvec(sub, diag, sup, x) - b)) / np.max(np.abs(b)) <= 1e-12
        np.testing.assert_allclose(x, np.linalg.solve(dense_cyclic(sub, diag, sup), b), rtol=1e-10, atol=1e-12)


def test_solve_rejects_non_dominant():
    n = 10
    with pytest.raises(SolverFailure, match="row 0"):
        solve_cyclic_tridiag(np.full(n, 0.5), np.ones(n), np.full(n, 0.5), np.ones(n))
    with pytest.raises(ValueError):
        solve_cyclic_tridiag(np.zeros(3), np.ones(4), np.zeros(4), np.ones(4))
