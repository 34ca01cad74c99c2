"""Test problems with known exact solutions, and the bump-perturbed initial guesses."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .grid import BoundaryData, Grid, sample_boundary, sample_interior

# A 200 x 200 sample of the closed square, used for ellipticity checks.
CHECK_POINTS = 200
ELLIPTICITY_TOL = 1e-12


class EllipticityError(ValueError):
    def __init__(self, message: str, worst: tuple[float, float], value: float):
        super().__init__(message)
        self.worst = worst
        self.value = value


def _zero_grad(x, y, px, py):
    z = np.zeros(np.broadcast(x, y, px, py).shape)
    return z, z


@dataclass(frozen=True, eq=False)
class ProblemCase:
    """Right-hand side ``f(x, y, px, py)``, Dirichlet data and optional exact solution.

    ``exact_grad`` returns ``(ux, uy)`` of the exact solution;
    ``grad_f_p`` returns the derivative of ``f`` in ``(px, py)``.
    """

    name: str
    f: Callable
    gamma: Callable
    exact: Optional[Callable] = None
    exact_grad: Optional[Callable] = None
    grad_f_p: Callable = _zero_grad
    gradient_dependent: bool = False
    params: dict = field(default_factory=dict)

    def rhs_at_exact(self, x, y):
        if self.exact_grad is None:
            raise ValueError(f"case {self.name!r} has no exact gradient")
        px, py = self.exact_grad(x, y)
        return self.f(x, y, px, py)

    def negated(self) -> "ProblemCase":
        """The mirror problem with solution ``-u`` (same ``f`` in 2-D, since det(-H) = det(H))."""
        exact = None if self.exact is None else (lambda x, y, e=self.exact: -e(x, y))
        exact_grad = None
        if self.exact_grad is not None:
            def exact_grad(x, y, g=self.exact_grad):
                gx, gy = g(x, y)
                return -gx, -gy
        f, dfp = self.f, self.grad_f_p
        return ProblemCase(
            name=self.name + "-mirror",
            f=lambda x, y, px, py: f(x, y, -px, -py),
            gamma=lambda x, y, g=self.gamma: -g(x, y),
            exact=exact,
            exact_grad=exact_grad,
            grad_f_p=lambda x, y, px, py: tuple(-c for c in dfp(x, y, -px, -py)),
            gradient_dependent=self.gradient_dependent,
            params=dict(self.params),
        )


def _check_ellipticity(case: ProblemCase, f_values, X, Y):
    i = int(np.argmin(f_values))
    worst = float(f_values.flat[i])
    if worst < -ELLIPTICITY_TOL:
        at = (float(X.flat[i]), float(Y.flat[i]))
        raise EllipticityError(
            f"{case.name}: right-hand side is negative ({worst:.4g}) at (x, y) = "
            f"({at[0]:.4f}, {at[1]:.4f}); the equation is not elliptic there", at, worst)


def _sample_square():
    t = np.linspace(0.0, 1.0, CHECK_POINTS)
    return np.meshgrid(t, t)


def _gaussian_parts(sigma, mu):
    mx, my = mu
    s2 = sigma * sigma

    def u(x, y):
        return -np.exp(-((x - mx) ** 2 + (y - my) ** 2) / (2.0 * s2))

    def grad(x, y):
        g = u(x, y)
        return -(x - mx) * g / s2, -(y - my) * g / s2

    def hess(x, y):
        e = -u(x, y)
        dx, dy = x - mx, y - my
        return (e * (1.0 / s2 - dx * dx / s2 ** 2),
                e * (1.0 / s2 - dy * dy / s2 ** 2),
                -e * dx * dy / s2 ** 2)

    def fg(x, y):
        r2 = (x - mx) ** 2 + (y - my) ** 2
        return (1.0 - r2 / s2) * u(x, y) ** 2 / s2 ** 2

    return u, grad, hess, fg


def gaussian_case(sigma: float = 1.0, mu=(0.5, 0.5), gradient_dependent: bool = False) -> ProblemCase:
    """Gaussian bowl ``-exp(-|x - mu|^2 / 2 sigma^2)`` as exact solution.

    With ``gradient_dependent`` the right-hand side takes the curvature form
    ``K(x) (1 + |p|^2)^2`` with ``K = f_g / (1 + |grad u_exact|^2)^2``, so the
    Gaussian still solves it exactly.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    mx, my = float(mu[0]), float(mu[1])
    far = max(np.hypot(cx - mx, cy - my) for cx in (0.0, 1.0) for cy in (0.0, 1.0))
    if far > sigma:
        raise ValueError(
            f"Gaussian with sigma={sigma}, mu=({mx}, {my}) is not elliptic on the unit square: "
            f"a corner lies at distance {far:.4f} > sigma from mu")
    u, grad, _, fg = _gaussian_parts(sigma, (mx, my))
    params = {"sigma": sigma, "mu": (mx, my)}

    if not gradient_dependent:
        return ProblemCase(
            name="gaussian",
            f=lambda x, y, px, py: fg(x, y) + 0.0 * (px + py),
            gamma=u, exact=u, exact_grad=grad, params=params)

    def K(x, y):
        gx, gy = grad(x, y)
        return fg(x, y) / (1.0 + gx * gx + gy * gy) ** 2

    def f(x, y, px, py):
        return K(x, y) * (1.0 + px * px + py * py) ** 2

    def grad_f_p(x, y, px, py):
        w = 4.0 * K(x, y) * (1.0 + px * px + py * py)
        return w * px, w * py

    case = ProblemCase(name="gaussian-curvature", f=f, gamma=u, exact=u, exact_grad=grad,
                       grad_f_p=grad_f_p, gradient_dependent=True, params=params)
    return case


def oscillating_case(sigma: float = 1.0, mu=(0.5, 0.5), eps_s: float = 1e-3, l: int = 12,
                     check: bool = True) -> ProblemCase:
    """Gaussian minus ``eps_s sin(l pi x) sin(l pi y)``, with ``f = det D2 u_exact``.

    ``check=False`` skips the ellipticity check (for experiments on data that
    is negative near the corners); a negative ``f`` otherwise raises
    :class:`EllipticityError` naming the worst sample point.
    """
    if int(l) != l or l < 1:
        raise ValueError(f"l must be a positive integer, got {l!r}")
    base = gaussian_case(sigma, mu, gradient_dependent=False)
    g_u, g_grad, g_hess, _ = _gaussian_parts(sigma, base.params["mu"])
    k = l * np.pi
    a = eps_s * k * k

    def u(x, y):
        return g_u(x, y) - eps_s * np.sin(k * x) * np.sin(k * y)

    def grad(x, y):
        gx, gy = g_grad(x, y)
        return (gx - eps_s * k * np.cos(k * x) * np.sin(k * y),
                gy - eps_s * k * np.sin(k * x) * np.cos(k * y))

    def rhs(x, y):
        hxx, hyy, hxy = g_hess(x, y)
        ss = np.sin(k * x) * np.sin(k * y)
        cc = np.cos(k * x) * np.cos(k * y)
        uxx = hxx + a * ss
        uyy = hyy + a * ss
        uxy = hxy - a * cc
        return uxx * uyy - uxy * uxy

    case = ProblemCase(
        name="oscillating",
        f=lambda x, y, px, py: rhs(x, y) + 0.0 * (px + py),
        gamma=u, exact=u, exact_grad=grad,
        params={**base.params, "eps_s": eps_s, "l": int(l)})
    if check:
        X, Y = _sample_square()
        _check_ellipticity(case, rhs(X, Y), X, Y)
    return case


def quadratic_case() -> ProblemCase:
    """``u = (x^2 + y^2) / 2`` with ``f = 1``: the discrete stencils are exact on it."""
    def u(x, y):
        return 0.5 * (x * x + y * y)

    return ProblemCase(
        name="quadratic",
        f=lambda x, y, px, py: np.ones(np.broadcast(x, y).shape),
        gamma=u, exact=u, exact_grad=lambda x, y: (x + 0.0 * y, y + 0.0 * x))


CASES = ("gaussian", "gaussian-curvature", "oscillating")


def case_by_name(name: str, sigma: float = 1.0, mu=(0.5, 0.5), eps_s: float = 1e-3,
                 l: int = 12, check: bool = True) -> ProblemCase:
    if name == "gaussian":
        return gaussian_case(sigma, mu, gradient_dependent=False)
    if name == "gaussian-curvature":
        return gaussian_case(sigma, mu, gradient_dependent=True)
    if name == "oscillating":
        return oscillating_case(sigma, mu, eps_s, l, check=check)
    raise KeyError(f"unknown case {name!r}; valid names: {', '.join(CASES)}")


# -- initial guesses ----------------------------------------------------------

def bump(x, y):
    return x * (1.0 - x) * y * (1.0 - y)


@dataclass(frozen=True)
class InitialGuess:
    """``convex_bump`` subtracts ``C x(1-x)y(1-y)`` from the exact solution,
    ``saddle_bump`` adds it, ``exact`` samples the exact solution itself and
    ``custom`` evaluates ``func``.  The bump vanishes on the boundary, so the
    boundary always matches the Dirichlet data.
    """

    kind: str
    constant: float = 0.0
    func: Optional[Callable] = None

    KINDS = ("convex_bump", "saddle_bump", "exact", "custom")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown initial guess kind {self.kind!r}; valid: {', '.join(self.KINDS)}")
        if self.kind == "custom" and self.func is None:
            raise ValueError("custom initial guess needs func")

    @classmethod
    def parse(cls, spec: str) -> "InitialGuess":
        """``convex:C``, ``saddle:C`` or ``exact``."""
        name, _, value = spec.partition(":")
        if name == "exact" and not value:
            return cls("exact")
        kinds = {"convex": "convex_bump", "saddle": "saddle_bump"}
        if name not in kinds or not value:
            raise ValueError(f"bad initial guess {spec!r}; use convex:C, saddle:C or exact")
        return cls(kinds[name], float(value))

    def label(self) -> str:
        if self.kind in ("convex_bump", "saddle_bump"):
            return f"{self.kind.split('_')[0]}:{self.constant:g}"
        return self.kind


def initial_guess(guess: InitialGuess, case: ProblemCase, grid: Grid) -> tuple[np.ndarray, BoundaryData]:
    bc = sample_boundary(grid, case.gamma)
    if guess.kind == "custom":
        return sample_interior(grid, guess.func), bc
    if case.exact is None:
        raise ValueError(f"case {case.name!r} has no exact solution to perturb")
    c = guess.constant
    if guess.kind == "convex_bump":
        g = lambda x, y: case.exact(x, y) - c * bump(x, y)
    elif guess.kind == "saddle_bump":
        g = lambda x, y: case.exact(x, y) + c * bump(x, y)
    else:
        g = case.exact
    return sample_interior(grid, g), bc
