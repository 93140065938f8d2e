import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evokernel import geometry as geo

CURVES = {
    "disk": geo.make_curve("disk", radius=1.0),
    "square": geo.make_curve("square"),
    "petal": geo.make_curve("petal"),
}


def test_pinned_points():
    petal = CURVES["petal"]
    assert petal.point(0.0) == pytest.approx([0.6, 0.0])
    # sin(6 * pi/2) = sin(3 pi) = 0, so the radius is the base value
    assert petal.point(np.pi / 2) == pytest.approx([0.0, 0.6], abs=1e-15)
    disk = CURVES["disk"]
    assert disk.point(np.pi) == pytest.approx([-1.0, 0.0], abs=1e-15)


@pytest.mark.parametrize("kind", list(CURVES))
def test_curve_invariants(kind):
    curve = CURVES[kind]
    rng = np.random.default_rng(3)
    t = rng.uniform(0, 2 * np.pi, size=1000)
    if kind == "square":  # keep clear of corner parameter values
        t = t[np.min(np.abs(t[:, None] - np.array([0, .5, 1, 1.5, 2]) * np.pi),
                     axis=1) > 1e-6]
    assert np.max(np.abs(curve.point(t + 2 * np.pi) - curve.point(t))) < 1e-12
    n = curve.normal(t)
    assert np.max(np.abs(np.hypot(n[:, 0], n[:, 1]) - 1.0)) < 1e-12
    d = curve.derivative(t)
    assert np.max(np.abs(n[:, 0] * d[:, 0] + n[:, 1] * d[:, 1])) < 1e-12


@pytest.mark.parametrize("kind,expected", [("disk", np.pi), ("square", 1.0)])
def test_signed_area(kind, expected):
    grid = geo.sample_quadrature(CURVES[kind], 256)
    assert geo.signed_area(grid) == pytest.approx(expected, abs=1e-10)


def test_petal_positive_area():
    grid = geo.sample_quadrature(CURVES["petal"], 256)
    # CCW orientation
    assert geo.signed_area(grid) > 0


def test_quadrature_weights_and_length():
    grid = geo.sample_quadrature(CURVES["disk"], 4 * 64)
    assert np.sum(grid.weights) == pytest.approx(2 * np.pi, rel=1e-14)
    assert grid.length_estimate() == pytest.approx(2 * np.pi, rel=1e-12)
    sq = geo.sample_quadrature(CURVES["square"], 512)
    # midpoint rule is exact on straight edges
    assert sq.length_estimate() == pytest.approx(4.0, abs=1e-12)


def test_petal_length_self_convergence():
    l64 = geo.sample_quadrature(CURVES["petal"], 64).length_estimate()
    l128 = geo.sample_quadrature(CURVES["petal"], 128).length_estimate()
    l256 = geo.sample_quadrature(CURVES["petal"], 256).length_estimate()
    assert abs(l128 - l256) < 1e-10
    assert abs(l64 - l128) < 1e-6


def test_smooth_quadrature_geometric_convergence():
    # spectral accuracy of the periodic trapezoid rule on a smooth integrand
    petal = CURVES["petal"]

    def integral(n):
        g = geo.sample_quadrature(petal, n)
        f = np.exp(np.sin(g.t)) * g.speeds
        return g.weight * np.sum(f)

    ref = integral(2048)
    errs = [abs(integral(n) - ref) for n in (64, 128, 256, 512)]
    assert errs[-1] < 1e-10
    assert errs[1] < errs[0] * 0.1 or errs[0] < 1e-12


def test_square_nodes_avoid_corners():
    for n in (8, 64, 256, 512):
        grid = geo.sample_quadrature(CURVES["square"], n)
        frac = grid.t / (np.pi / 2)
        assert np.min(np.abs(frac - np.round(frac))) > 1e-3


def test_quadrature_validation():
    with pytest.raises(ValueError):
        geo.sample_quadrature(CURVES["disk"], 4)
    with pytest.raises(ValueError):
        geo.sample_quadrature(CURVES["square"], 30)
    with pytest.raises(ValueError):
        geo.make_curve("disk", radius=-1.0)
    with pytest.raises(ValueError):
        geo.make_curve("blob")


def test_square_lattice_41():
    grid = geo.interior_points("square", n=41)
    assert grid.m == 1681
    assert grid.spacing == pytest.approx(1 / 40)
    sub = geo.interior_points("square", n=16, lo=0.05, hi=0.95)
    assert sub.points[0] == pytest.approx([0.05, 0.05])


def test_petal_interior_margin():
    petal = CURVES["petal"]
    grid = geo.interior_points("petal", curve=petal, spacing=0.02, margin=0.01)
    assert grid.m > 1000
    assert np.all(petal.distance(grid.points) >= 0.01 - 1e-9)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 2 * np.pi))
def test_petal_curvature_matches_difference_quotient(t):
    petal = CURVES["petal"]
    h = 1e-6
    d1 = petal.derivative(np.array([t]))[0]
    d2 = (petal.derivative(np.array([t + h]))[0]
          - petal.derivative(np.array([t - h]))[0]) / (2 * h)
    speed = np.hypot(*d1)
    kappa_fd = (d1[0] * d2[1] - d1[1] * d2[0]) / speed**3
    assert petal.curvature(np.array([t]))[0] == pytest.approx(kappa_fd, rel=1e-5, abs=1e-5)


def test_grid_csv_export(tmp_path):
    grid = geo.sample_quadrature(CURVES["disk"], 16)
    path = tmp_path / "grid.csv"
    geo.grid_to_csv(grid, path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "t,x,y,nx,ny,speed"
    assert len(rows) == 17
