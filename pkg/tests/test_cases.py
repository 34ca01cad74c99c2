import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monge_ampere import fdops
from monge_ampere.cases import (EllipticityError, InitialGuess, case_by_name, gaussian_case, initial_guess,
                                oscillating_case, quadratic_case)
from monge_ampere.grid import make_grid, sample_boundary, sample_interior


def test_gaussian_rhs_values():
    c = gaussian_case()
    z = np.zeros(1)
    assert c.f(np.array([0.5]), np.array([0.5]), z, z)[0] == pytest.approx(1.0, rel=1e-15)
    # corner: |x - mu|^2 = 1/2, so f_g = (1 - 1/2) * exp(-1/2)
    corner = c.f(np.array([0.0]), np.array([0.0]), z, z)[0]
    assert corner == pytest.approx(0.5 * math.exp(-0.5), rel=1e-14)
    # independent check: determinant of the analytic Hessian of exp(-r^2/2) at the corner
    e = math.exp(-0.25)
    H = -np.array([[e * (0.25 - 1), e * 0.25], [e * 0.25, e * (0.25 - 1)]])
    assert corner == pytest.approx(np.linalg.det(H), rel=1e-13)


def test_gaussian_rejects_non_elliptic_parameters():
    with pytest.raises(ValueError, match="corner"):
        gaussian_case(sigma=0.3)
    with pytest.raises(ValueError):
        gaussian_case(sigma=-1.0)


def test_gaussian_gradient_matches_finite_difference():
    c = gaussian_case(sigma=0.9, mu=(0.45, 0.55))
    x, y, h = np.array([0.2, 0.7]), np.array([0.3, 0.9]), 1e-6
    gx, gy = c.exact_grad(x, y)
    np.testing.assert_allclose(gx, (c.exact(x + h, y) - c.exact(x - h, y)) / (2 * h), rtol=1e-8)
    np.testing.assert_allclose(gy, (c.exact(x, y + h) - c.exact(x, y - h)) / (2 * h), rtol=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1))
def test_curvature_variant_reduces_to_fg_at_exact_gradient(x, y):
    plain, curv = gaussian_case(), gaussian_case(gradient_dependent=True)
    X, Y = np.array([x]), np.array([y])
    px, py = curv.exact_grad(X, Y)
    z = np.zeros(1)
    assert curv.f(X, Y, px, py)[0] == pytest.approx(plain.f(X, Y, z, z)[0], rel=1e-12)


def test_curvature_variant_dfdp_matches_finite_difference():
    c = gaussian_case(gradient_dependent=True)
    X, Y = np.array([0.3]), np.array([0.8])
    px, py, h = np.array([0.4]), np.array([-0.7]), 1e-6
    dx, dy = c.grad_f_p(X, Y, px, py)
    assert dx[0] == pytest.approx(((c.f(X, Y, px + h, py) - c.f(X, Y, px - h, py)) / (2 * h))[0], rel=1e-7)
    assert dy[0] == pytest.approx(((c.f(X, Y, px, py + h) - c.f(X, Y, px, py - h)) / (2 * h))[0], rel=1e-7)


def test_plain_case_ignores_gradient():
    c = gaussian_case()
    X, Y = np.array([0.1, 0.6]), np.array([0.9, 0.2])
    np.testing.assert_array_equal(c.f(X, Y, 0 * X, 0 * X), c.f(X, Y, 5 + 0 * X, -3 + 0 * X))
    dx, dy = c.grad_f_p(X, Y, X, Y)
    assert not np.any(dx) and not np.any(dy)


def test_oscillating_zero_amplitude_is_gaussian():
    o, g = oscillating_case(eps_s=0.0), gaussian_case()
    t = np.linspace(0, 1, 17)
    X, Y = np.meshgrid(t, t)
    z = 0 * X
    np.testing.assert_allclose(o.f(X, Y, z, z), g.f(X, Y, z, z), rtol=1e-14, atol=1e-15)
    np.testing.assert_array_equal(o.exact(X, Y), g.exact(X, Y))


def test_oscillating_converges_to_gaussian_as_eps_shrinks():
    g = gaussian_case()
    X, Y = np.meshgrid(np.linspace(0, 1, 31), np.linspace(0, 1, 31))
    z = 0 * X
    gaps = [np.max(np.abs(oscillating_case(eps_s=e).f(X, Y, z, z) - g.f(X, Y, z, z)))
            for e in (1e-4, 1e-5, 1e-6)]
    # the gap is linear in eps_s once the quadratic term is negligible
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[1] / gaps[2] == pytest.approx(10.0, rel=0.01)


def test_oscillating_hessian_formulas():
    # finite-difference check of the closed-form determinant
    c = oscillating_case(eps_s=2e-4, l=12)
    x, y, h = 0.37, 0.61, 1e-4
    u = c.exact
    uxx = (u(x + h, y) - 2 * u(x, y) + u(x - h, y)) / h ** 2
    uyy = (u(x, y + h) - 2 * u(x, y) + u(x, y - h)) / h ** 2
    uxy = (u(x + h, y + h) - u(x + h, y - h) - u(x - h, y + h) + u(x - h, y - h)) / (4 * h * h)
    assert float(c.f(x, y, 0.0, 0.0)) == pytest.approx(uxx * uyy - uxy * uxy, rel=1e-5)


def test_oscillating_rejects_large_amplitude():
    with pytest.raises(EllipticityError) as info:
        oscillating_case(eps_s=0.5, l=12)
    assert info.value.value < 0
    x, y = info.value.worst
    assert 0 <= x <= 1 and 0 <= y <= 1


def test_oscillating_paper_amplitude_is_elliptic():
    # eps_s = 1e-3, l = 12 should be admissible with f touching zero near the corners
    c = oscillating_case(eps_s=1e-3, l=12)
    t = np.linspace(0, 1, 200)
    X, Y = np.meshgrid(t, t)
    assert np.min(c.f(X, Y, 0 * X, 0 * X)) >= -1e-12


def test_oscillating_smaller_amplitude_is_admissible():
    c = oscillating_case(eps_s=2.5e-4, l=12)
    t = np.linspace(0, 1, 200)
    X, Y = np.meshgrid(t, t)
    assert np.min(c.f(X, Y, 0 * X, 0 * X)) >= -1e-12
    assert oscillating_case(eps_s=1e-3, l=6).params["l"] == 6


def test_oscillating_validates_l():
    with pytest.raises(ValueError):
        oscillating_case(l=0)
    with pytest.raises(ValueError):
        oscillating_case(l=2.5)


@pytest.mark.parametrize("case", [gaussian_case(), gaussian_case(gradient_dependent=True),
                                  oscillating_case(eps_s=2e-4, l=6), quadratic_case()],
                         ids=lambda c: c.name)
def test_exact_residual_is_second_order(case):
    errs = []
    for n in (40, 81):
        g = make_grid(n)
        u, b = sample_interior(g, case.exact), sample_boundary(g, case.gamma)
        errs.append(np.max(np.abs(fdops.residual(g, u, b, case))))
    if case.name == "quadratic":
        assert max(errs) < 1e-10
    else:
        assert 3.3 < errs[0] / errs[1] < 4.7


def test_initial_guess_values():
    c = gaussian_case()
    g = make_grid(1)
    u, _ = initial_guess(InitialGuess("convex_bump", 30), c, g)
    assert u[0] == pytest.approx(-2.875, rel=1e-14)
    u, _ = initial_guess(InitialGuess("saddle_bump", 10), c, g)
    assert u[0] == pytest.approx(-0.375, rel=1e-14)


def test_initial_guess_zero_bump_is_exact():
    c = gaussian_case()
    g = make_grid(9)
    u0, _ = initial_guess(InitialGuess("convex_bump", 0.0), c, g)
    ue, _ = initial_guess(InitialGuess("exact"), c, g)
    np.testing.assert_array_equal(u0, sample_interior(g, c.exact))
    np.testing.assert_array_equal(ue, u0)


@pytest.mark.parametrize("spec", ["convex:30", "saddle:10", "exact"])
def test_initial_guess_boundary_equals_gamma(spec):
    c = gaussian_case()
    g = make_grid(12)
    _, b = initial_guess(InitialGuess.parse(spec), c, g)
    assert (b - sample_boundary(g, c.gamma)).is_zero()


def test_initial_guess_parse():
    assert InitialGuess.parse("convex:30") == InitialGuess("convex_bump", 30.0)
    assert InitialGuess.parse("saddle:2.5").constant == 2.5
    assert InitialGuess.parse("exact").kind == "exact"
    assert InitialGuess.parse("saddle:10").label() == "saddle:10"
    for bad in ("convex", "wobbly:3", "exact:1", "convex:x"):
        with pytest.raises(ValueError):
            InitialGuess.parse(bad)


def test_initial_guess_needs_exact():
    from monge_ampere.cases import ProblemCase
    bare = ProblemCase("bare", f=lambda x, y, px, py: 1.0 + 0 * x, gamma=lambda x, y: 0 * x)
    with pytest.raises(ValueError):
        initial_guess(InitialGuess("convex_bump", 1.0), bare, make_grid(3))
    u, _ = initial_guess(InitialGuess("custom", func=lambda x, y: x * y), bare, make_grid(3))
    assert u.shape == (9,)


def test_case_by_name():
    assert case_by_name("gaussian").name == "gaussian"
    assert case_by_name("gaussian-curvature").gradient_dependent
    assert case_by_name("oscillating", eps_s=1e-4).params["eps_s"] == 1e-4
    with pytest.raises(KeyError, match="valid names"):
        case_by_name("parabola")


def test_negated_case_mirrors_solution():
    c = gaussian_case(gradient_dependent=True)
    m = c.negated()
    X, Y = np.array([0.2, 0.6]), np.array([0.7, 0.1])
    np.testing.assert_array_equal(m.exact(X, Y), -c.exact(X, Y))
    px, py = m.exact_grad(X, Y)
    np.testing.assert_allclose(m.f(X, Y, px, py), c.f(X, Y, *c.exact_grad(X, Y)), rtol=1e-14)
