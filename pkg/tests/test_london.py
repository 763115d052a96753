import numpy as np
import pytest
from scipy.special import i0

from errors import DomainError, NonDegeneracyError
from fields import Ellipse, ScalarField, build_grid
from theory import compute_J0, london_from_xi0, solve_london, solve_zeta, synthetic_two_well, tilde_V

XI0_CENTER = 1.0 / i0(1.0) - 1.0


@pytest.fixture(scope="module")
def london(fine_disk_grid):
    return solve_london(fine_disk_grid)


def test_center_value(london):
    assert london.xi0.at(0.0, 0.0) == pytest.approx(XI0_CENTER, abs=2e-3)


def test_london_identity(london):
    gap = london.h0.interior() - 1.0 - london.xi0.interior()
    assert np.max(np.abs(gap)) <= 1e-8


def test_minimizer_set_on_disk(london):
    assert london.N0 == 1
    (x, y), = london.lambda_set
    assert np.hypot(x, y) <= london.grid.h
    # xi0 ~ (I0(r) - I0(1)) / I0(1) near 0
    expected = 0.5 / i0(1.0)
    assert np.allclose(london.hessians[0], expected * np.eye(2), atol=0.02 * expected)


def test_derived_constants(london):
    assert london.xi0_inf_norm == pytest.approx(-XI0_CENTER, abs=2e-3)
    assert london.M_omega == pytest.approx(2 * np.pi * london.xi0_inf_norm)
    assert london.M_omega == pytest.approx(1.3204, abs=1e-2)
    assert london.J0 == pytest.approx(0.16842, abs=3e-3)


def test_green_symmetry(london, rng):
    grid = london.grid
    for _ in range(5):
        r = 0.7 * np.sqrt(rng.random(2))
        t = 2 * np.pi * rng.random(2)
        a = (r[0] * np.cos(t[0]), r[0] * np.sin(t[0]))
        b = (r[1] * np.cos(t[1]), r[1] * np.sin(t[1]))
        za = solve_zeta([a], [1], grid)
        zb = solve_zeta([b], [1], grid)
        assert za.at(*b) == pytest.approx(zb.at(*a), rel=1e-8)


def test_tilde_v_closed_form(london):
    points, degrees = [(0.3, 0.1), (-0.2, -0.35)], [1, 2]
    zeta = solve_zeta(points, degrees, london.grid)
    general, at_min = tilde_V(zeta, points, degrees)
    assert general == pytest.approx(at_min, rel=1e-8)
    assert at_min < 0


def test_tilde_v_is_minimal_at_zeta(london):
    points, degrees = [(0.3, 0.1)], [1]
    grid = london.grid
    zeta = solve_zeta(points, degrees, grid)
    bump = np.where(grid.mask, (1 - grid.X ** 2 - grid.Y ** 2) * 0.05, 0.0)
    other, _ = tilde_V(ScalarField(grid, zeta.values + bump), points, degrees)
    best, _ = tilde_V(zeta, points, degrees)
    assert other > best


def test_zeta_rejects_coincident_points(london):
    with pytest.raises(DomainError):
        solve_zeta([(0.1, 0.1), (0.1, 0.1)], [1, 1], london.grid)


def test_synthetic_two_well(disk_grid):
    xi0 = synthetic_two_well(disk_grid, [(-0.4, 0.0), (0.4, 0.0)], depth=0.2, width=0.1)
    london = london_from_xi0(xi0)
    assert london.N0 == 2
    (x1, y1), (x2, y2) = london.lambda_set
    assert x1 == pytest.approx(-0.4, abs=disk_grid.h)
    assert x2 == pytest.approx(0.4, abs=disk_grid.h)
    assert london.xi0_inf_norm == pytest.approx(0.2, abs=1e-2)


def test_flat_minimum_is_degenerate(disk_grid):
    values = np.where(disk_grid.mask, -0.1 * np.exp(-disk_grid.Y ** 2 / 0.02), 0.0)
    with pytest.raises(NonDegeneracyError):
        london_from_xi0(ScalarField(disk_grid, values))


def test_j0_is_quadratic(london):
    xi0 = london.xi0
    assert compute_J0(xi0.with_values(2.0 * xi0.values)) == pytest.approx(4.0 * london.J0, rel=1e-12)
    assert compute_J0(xi0.with_values(np.zeros(xi0.grid.shape))) == 0.0


def test_ellipse_hessian_is_anisotropic():
    grid = build_grid(Ellipse(a=2.0, b=1.0), 64)
    london = solve_london(grid)
    assert london.N0 == 1
    (x, y), = london.lambda_set
    assert np.hypot(x, y) <= 2 * grid.h
    H = london.hessians[0]
    assert abs(H[0, 1]) <= 0.02 * H[1, 1]
    assert H[0, 0] < H[1, 1]
    _, vectors = np.linalg.eigh(H)
    assert abs(vectors[0, 0]) > 0.99
