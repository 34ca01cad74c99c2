import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monge_ampere import fdops
from monge_ampere.cases import InitialGuess, gaussian_case, initial_guess
from monge_ampere.green import (GreenCapacityError, GreenPoisson, apply_greens, assemble_greens_matrix,
                                greens_value)
from monge_ampere.grid import make_grid
from monge_ampere.iterate import LschemeConfig, select_lambda
from monge_ampere.linsolve import direct_solve

point = st.tuples(st.floats(0, 1), st.floats(0, 1))


def test_single_term_value():
    assert greens_value((0.5, 0.5), (0.5, 0.5), 1) == pytest.approx(2 / math.pi ** 2, rel=1e-14)
    assert 2 / math.pi ** 2 == pytest.approx(0.2026423, abs=1e-7)


@pytest.mark.parametrize("x, x0", [((0.0, 0.3), (0.4, 0.4)), ((0.3, 1.0), (0.2, 0.9)),
                                   ((0.5, 0.5), (1.0, 0.2))])
def test_vanishes_on_boundary(x, x0):
    assert abs(greens_value(x, x0, 50)) < 1e-13


@settings(max_examples=30, deadline=None)
@given(point, point)
def test_series_symmetric(a, b):
    assert greens_value(a, b, 50) == pytest.approx(greens_value(b, a, 50), rel=1e-12, abs=1e-15)


def test_order_must_be_positive():
    with pytest.raises(ValueError):
        greens_value((0.5, 0.5), (0.5, 0.5), 0)
    with pytest.raises(ValueError):
        assemble_greens_matrix(make_grid(3), 0)


def test_n1_matrix():
    G = assemble_greens_matrix(make_grid(1), 50)
    assert G.matrix.shape == (1, 1)
    assert G.matrix[0, 0] == pytest.approx(0.25 * greens_value((0.5, 0.5), (0.5, 0.5), 50), rel=1e-13)


def test_matrix_entries_match_pointwise_series():
    g = make_grid(4)
    G = assemble_greens_matrix(g, 20).matrix
    rng = np.random.default_rng(0)
    for a, b in rng.integers(0, 16, size=(6, 2)):
        xa, xb = g.node(*g.jk(int(a))), g.node(*g.jk(int(b)))
        assert G[a, b] == pytest.approx(g.dx ** 2 * greens_value(xa, xb, 20), rel=1e-12, abs=1e-16)


def test_matrix_symmetric_positive_diagonal():
    G = assemble_greens_matrix(make_grid(10)).matrix
    assert np.all(np.isfinite(G))
    assert np.max(np.abs(G - G.T)) <= 1e-12 * np.abs(G).max()
    assert np.all(np.diag(G) > 0)


def test_capacity_limit():
    assemble_greens_matrix(make_grid(2), 2)
    with pytest.raises(GreenCapacityError, match="n <= 100"):
        assemble_greens_matrix(make_grid(101))


def test_apply_examples():
    Gm = assemble_greens_matrix(make_grid(6), 10)
    rho = np.random.default_rng(0).standard_normal(36)
    assert not np.any(apply_greens(Gm, np.zeros(36), 2.0))
    np.testing.assert_allclose(apply_greens(Gm, 2 * rho, 3.0), 2 * apply_greens(Gm, rho, 3.0), rtol=1e-14)
    with pytest.raises(ValueError):
        apply_greens(Gm, rho, 0.0)


def _gaussian_step_rhs(n):
    case, g = gaussian_case(), make_grid(n)
    u, b = initial_guess(InitialGuess("convex_bump", 30), case, g)
    h = fdops.second_derivatives(g, u, b)
    rho = fdops.residual(g, u, b, case, h)
    lam = select_lambda(fdops.lambda_max(h.trace, h.det), LschemeConfig())
    return g, rho, lam


def test_matches_finite_difference_update_n50():
    g, rho, lam = _gaussian_step_rhs(50)
    v_green = apply_greens(assemble_greens_matrix(g, 50), rho, lam)
    v_fd = direct_solve(fdops.assemble_laplacian(g), rho / lam)
    assert np.max(np.abs(v_green - v_fd)) <= 1e-3


def test_more_modes_get_closer_to_fd():
    g = make_grid(30)
    x, y = g.interior_mesh()
    rho = np.exp(x) * np.sin(2 * y) + 1
    v_fd = direct_solve(fdops.assemble_laplacian(g), rho)
    gaps = [np.max(np.abs(apply_greens(assemble_greens_matrix(g, M), rho, 1.0) - v_fd)) for M in (10, 25, 50)]
    assert gaps[0] >= gaps[1] >= gaps[2]


def test_solver_wrapper():
    s = GreenPoisson(make_grid(5), 10)
    assert s.requires_homogeneous_boundary and s.name == "green"
    x, stats = s.solve(np.ones(25))
    assert stats.converged and np.all(x > 0)
