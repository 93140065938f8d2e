"""Manufactured test cases and evaluation harnesses.

These are the standard verification problems used across the CLI, the
demo scripts and the acceptance suite:

  - scalar boundary-driven: u = exp(-sqrt(1 + 1/kappa) x) sin(y), a
    homogeneous solution of Delta u - u/kappa = 0;
  - scalar source-driven:   u = x(1-x) y(1-y) exp(0.6 x + 0.8 y) with the
    source computed analytically;
  - coupled source-driven:  u1 = sin(pi x) y(1-y), u2 = x(1-x) sin(pi y);
  - coupled boundary-driven: traces of the first fundamental-matrix column
    with source point (1.2, 1.2) outside the domain.
"""

from __future__ import annotations

import numpy as np

from . import bie, kernels
from .geometry import make_curve, sample_quadrature, square_lattice
from .training import ErrorReport

__all__ = [
    "scalar_boundary_solution", "scalar_source_case", "system_source_case",
    "system_boundary_case", "eval_scalar_boundary", "eval_scalar_source",
    "eval_system_source", "eval_system_boundary", "heat_problem",
    "wave_problem", "schrodinger_problem", "petal_heat_problem",
]


def scalar_boundary_solution(kappa):
    """Homogeneous solution of the kappa-operator used for boundary tests."""
    c = np.sqrt(1.0 + 1.0 / kappa)

    def u(pts):
        return np.exp(-c * pts[..., 0]) * np.sin(pts[..., 1])

    return u


def _poly_exp_1d(c):
    """x(1-x) e^{cx} and its second derivative as closed forms."""

    def f(x):
        return x * (1.0 - x) * np.exp(c * x)

    def fpp(x):
        return np.exp(c * x) * (-2.0 + 2.0 * c * (1.0 - 2.0 * x)
                                + c * c * x * (1.0 - x))

    return f, fpp


def scalar_source_case(kappa):
    """(u, f) with u = x(1-x) y(1-y) exp(0.6x + 0.8y), f = Delta u - u/kappa."""
    X, Xpp = _poly_exp_1d(0.6)
    Y, Ypp = _poly_exp_1d(0.8)

    def u(pts):
        return X(pts[..., 0]) * Y(pts[..., 1])

    def f(pts):
        x, y = pts[..., 0], pts[..., 1]
        return Xpp(x) * Y(y) + X(x) * Ypp(y) - u(pts) / kappa

    return u, f


def system_source_case(lam):
    """(u1, u2, f1, f2) for L_lam u = f with homogeneous boundary data."""

    def u1(pts):
        return np.sin(np.pi * pts[..., 0]) * pts[..., 1] * (1.0 - pts[..., 1])

    def u2(pts):
        return pts[..., 0] * (1.0 - pts[..., 0]) * np.sin(np.pi * pts[..., 1])

    def lap_u1(pts):
        x, y = pts[..., 0], pts[..., 1]
        return -np.pi**2 * np.sin(np.pi * x) * y * (1 - y) - 2.0 * np.sin(np.pi * x)

    def lap_u2(pts):
        x, y = pts[..., 0], pts[..., 1]
        return -2.0 * np.sin(np.pi * y) - np.pi**2 * x * (1 - x) * np.sin(np.pi * y)

    def f1(pts):
        return u1(pts) - lam * lap_u2(pts)

    def f2(pts):
        return lam * lap_u1(pts) + u2(pts)

    return u1, u2, f1, f2


def system_boundary_case(lam, source_point=(1.2, 1.2)):
    """(u1, u2): first fundamental-matrix column from an exterior source point."""
    spec = kernels.SystemKernelSpec(lam)
    y0 = np.asarray(source_point, dtype=np.float64)

    def fields(pts):
        G = kernels.system_g0(spec, pts, np.broadcast_to(y0, pts.shape))
        return G[..., 0, 0], G[..., 1, 0]

    return fields


def eval_scalar_boundary(model, kappas, n_bd=256, eval_n=16,
                         eval_lo=0.05, eval_hi=0.95):
    """Boundary checkpoint -> density -> interior field vs exact solution."""
    curve = make_curve("square")
    grid = sample_quadrature(curve, n_bd)
    egrid = square_lattice(eval_n, eval_lo, eval_hi)
    rep = ErrorReport(model_id="scalar-boundary", grid_desc=f"{eval_n}x{eval_n}")
    for kap in kappas:
        spec = kernels.ScalarKernelSpec(float(kap))
        u = scalar_boundary_solution(kap)
        phi = model.predict(kap, u(grid.points))
        field = bie.eval_double_layer(spec, grid, phi, egrid)
        rep.add(f"kappa={kap:.6g}", field.values, u(egrid.points))
    return rep


def eval_scalar_source(model, kappas):
    """Source checkpoint evaluated on its own lattice against the closed form."""
    pts = model.points
    rep = ErrorReport(model_id="scalar-source", grid_desc=f"{pts.shape[0]} pts")
    for kap in kappas:
        u, f = scalar_source_case(kap)
        pred = model.predict(kap, f(pts))
        rep.add(f"kappa={kap:.6g}", pred, u(pts))
    return rep


def eval_system_source(model, lams):
    pts = model.points
    n = pts.shape[0]
    rep = ErrorReport(model_id="system-source", grid_desc=f"{n} pts x2")
    for lam in lams:
        u1, u2, f1, f2 = system_source_case(lam)
        pred = model.predict(lam, np.concatenate([f1(pts), f2(pts)]))
        rep.add(f"lam={lam:.6g}:u1", pred[:n], u1(pts))
        rep.add(f"lam={lam:.6g}:u2", pred[n:], u2(pts))
    return rep


def eval_system_boundary(model, lams, n_bd=256, eval_n=16,
                         eval_lo=0.05, eval_hi=0.95):
    curve = make_curve("square")
    grid = sample_quadrature(curve, n_bd)
    egrid = square_lattice(eval_n, eval_lo, eval_hi)
    rep = ErrorReport(model_id="system-boundary", grid_desc=f"{eval_n}x{eval_n}")
    for lam in lams:
        spec = kernels.SystemKernelSpec(float(lam))
        fields = system_boundary_case(lam)
        b1, b2 = fields(grid.points)
        g = np.empty(2 * grid.n)
        g[0::2], g[1::2] = b1, b2
        phi = model.predict(lam, g)
        out = bie.eval_double_layer(spec, grid, phi, egrid).values
        e1, e2 = fields(egrid.points)
        rep.add(f"lam={lam:.6g}:u1", out[0::2], e1)
        rep.add(f"lam={lam:.6g}:u2", out[1::2], e2)
    return rep


def heat_problem(domain, a, b, tau, n_steps):
    """Single heat problem u = exp(-t) sin(a x1) cos(b x2) (a^2 + b^2 = 1)."""
    from .evolution import EvolutionProblem

    def shape(pts, t):
        return np.exp(-t) * np.sin(a * pts[..., 0]) * np.cos(b * pts[..., 1])

    return EvolutionProblem(
        equation="heat", domain=domain, tau=tau, n_steps=n_steps,
        u0=lambda pts: shape(pts, 0.0), g=shape,
        lap_u0=lambda pts: -(a * a + b * b) * shape(pts, 0.0), exact=shape)


def wave_problem(domain, a, tau, n_steps, theta=0.5):
    """Traveling wave u = sin(a x1 + b x2 - t) with b = sqrt(1 - a^2)."""
    from .evolution import EvolutionProblem
    b = np.sqrt(1.0 - a * a)

    def sh(pts, t):
        return np.sin(a * pts[..., 0] + b * pts[..., 1] - t)

    return EvolutionProblem(
        equation="wave", domain=domain, tau=tau, n_steps=n_steps, theta=theta,
        u0=lambda pts: sh(pts, 0.0),
        v0=lambda pts: -np.cos(a * pts[..., 0] + b * pts[..., 1]),
        g=sh, lap_u0=lambda pts: -sh(pts, 0.0), exact=sh)


def schrodinger_problem(domain, tau, n_steps, w=1.0):
    """Exact u = exp(i t) cos(x1) cos(x2) under v = 1 - cos^2 x1 cos^2 x2."""
    from .evolution import EvolutionProblem

    def sh(pts, t):
        return np.exp(1j * t) * np.cos(pts[..., 0]) * np.cos(pts[..., 1])

    return EvolutionProblem(
        equation="schrodinger", domain=domain, tau=tau, n_steps=n_steps, w=w,
        u0=lambda pts: sh(pts, 0.0), g=sh,
        v_potential=lambda pts: 1.0 - np.cos(pts[..., 0])**2 * np.cos(pts[..., 1])**2,
        lap_u0=lambda pts: -2.0 * sh(pts, 0.0), exact=sh)


def petal_heat_problem(domain, tau, n_steps):
    """Heat flow on the petal; exact u = exp(-t) sin(x/sqrt2) sin(y/sqrt2)."""
    from .evolution import EvolutionProblem
    s = np.sqrt(2.0) / 2.0

    def sh(pts, t):
        return np.exp(-t) * np.sin(s * pts[..., 0]) * np.sin(s * pts[..., 1])

    return EvolutionProblem(
        equation="heat", domain=domain, tau=tau, n_steps=n_steps,
        u0=lambda pts: sh(pts, 0.0), g=sh,
        lap_u0=lambda pts: -sh(pts, 0.0), exact=sh)
