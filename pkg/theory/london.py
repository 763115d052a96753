import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from errors import DomainError, NonDegeneracyError, SolverError
from fields import ScalarField, dirac, dirichlet_apply, dirichlet_form, solve_dirichlet
from fields.grid import neighbor

__all__ = ['LondonData', 'solve_london', 'london_from_xi0', 'find_lambda', 'compute_J0', 'synthetic_two_well',
           'solve_zeta', 'tilde_V', 'point_value']

logger = logging.getLogger(__name__)

_EIGHT = ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True, eq=False)
class LondonData:
    xi0: ScalarField
    h0: ScalarField
    lambda_set: List[Tuple[float, float]]
    hessians: List[np.ndarray]
    xi0_inf_norm: float
    M_omega: float
    J0: float

    @property
    def grid(self):
        return self.xi0.grid

    @property
    def N0(self):
        return len(self.lambda_set)

    def to_dict(self):
        return {
            "lambda_set": [list(p) for p in self.lambda_set],
            "hessians": [np.asarray(H).tolist() for H in self.hessians],
            "xi0_inf_norm": self.xi0_inf_norm,
            "M_omega": self.M_omega,
            "J0": self.J0,
        }


def solve_london(grid, method="direct") -> LondonData:
    """Split solve of the fourth-order London problem through h0 = 1 + xi0."""
    h0 = solve_dirichlet("screened", rhs=None, boundary=1.0, grid=grid, method=method)
    xi0 = solve_dirichlet("poisson", rhs=-h0.values, boundary=0.0, grid=grid, method=method)
    gap = float(np.max(np.abs(xi0.interior() - (h0.interior() - 1.0))))
    if gap > 1e-8:
        raise SolverError("London identity xi0 = h0 - 1 violated", gap)
    logger.info("London solve on %d nodes: min xi0 = %.6f", grid.n_interior, xi0.interior().min())
    return london_from_xi0(xi0, h0=h0)


def london_from_xi0(xi0: ScalarField, h0=None, tol=None) -> LondonData:
    if h0 is None:
        h0 = xi0 + 1.0
    lambda_set, hessians = find_lambda(xi0, tol=tol)
    norm = xi0.max_abs()
    return LondonData(xi0=xi0, h0=h0, lambda_set=lambda_set, hessians=hessians, xi0_inf_norm=norm,
                      M_omega=2 * np.pi * norm, J0=compute_J0(xi0))


def compute_J0(xi0: ScalarField) -> float:
    grid = xi0.grid
    u = xi0.interior()
    return 0.5 * (dirichlet_form(xi0) + grid.h ** 2 * float(u @ u))


def _quadratic_fit(values, i, j, h):
    """Least-squares quadratic on the 3x3 stencil; returns offset of the vertex and its value."""
    offsets = np.array([(di, dj) for di in (-1, 0, 1) for dj in (-1, 0, 1)], dtype=float)
    f = np.array([values[i + int(di), j + int(dj)] for di, dj in offsets])
    x, y = offsets[:, 0], offsets[:, 1]
    design = np.stack([np.ones(9), x, y, 0.5 * x ** 2, x * y, 0.5 * y ** 2], axis=1)
    c, g1, g2, hxx, hxy, hyy = np.linalg.lstsq(design, f, rcond=None)[0]
    H = np.array([[hxx, hxy], [hxy, hyy]])
    g = np.array([g1, g2])
    try:
        delta = -np.linalg.solve(H, g)
    except np.linalg.LinAlgError:
        delta = np.zeros(2)
    delta = np.clip(delta, -1.0, 1.0)
    value = c + g @ delta + 0.5 * delta @ H @ delta
    return delta * h, float(value)


def _hessian(field, point, step):
    x, y = point
    f0 = field.at(x, y)
    fxx = (field.at(x + step, y) - 2 * f0 + field.at(x - step, y)) / step ** 2
    fyy = (field.at(x, y + step) - 2 * f0 + field.at(x, y - step)) / step ** 2
    fxy = (field.at(x + step, y + step) - field.at(x + step, y - step)
           - field.at(x - step, y + step) + field.at(x - step, y - step)) / (4 * step ** 2)
    return np.array([[fxx, fxy], [fxy, fyy]])


def find_lambda(xi0: ScalarField, tol=None):
    """Near-global minima of xi0 with sub-grid refinement and non-degenerate Hessians."""
    grid = xi0.grid
    values = xi0.values
    if tol is None:
        tol = 1e-4 * xi0.max_abs()

    deep = grid.mask.copy()
    is_min = grid.mask.copy()
    for di, dj in _EIGHT:
        deep &= neighbor(grid.mask, di, dj, fill=False)
        is_min &= values <= neighbor(values, di, dj, fill=np.inf)
    candidates = np.argwhere(deep & is_min)
    if len(candidates) == 0:
        raise NonDegeneracyError("xi0 has no interior local minimum")

    refined = []
    for i, j in candidates:
        delta, value = _quadratic_fit(values, i, j, grid.h)
        refined.append((grid.X[i, j] + delta[0], grid.Y[i, j] + delta[1], value))
    best = min(r[2] for r in refined)
    refined = sorted((r for r in refined if r[2] <= best + tol), key=lambda r: r[2])

    points = []
    for x, y, _ in refined:
        if all(np.hypot(x - px, y - py) > 2 * grid.h for px, py in points):
            points.append((float(x), float(y)))
    points.sort()

    hessians = []
    for p in points:
        H = _hessian(xi0, p, 4 * grid.h)
        eig = np.linalg.eigvalsh(H)
        if eig[-1] <= 0 or eig[0] <= 1e-6 * eig[-1]:
            raise NonDegeneracyError(f"degenerate Hessian at {p}: eigenvalues {eig.tolist()}")
        hessians.append(H)
    logger.info("Lambda: %d point(s) %s", len(points), points)
    return points, hessians


def synthetic_two_well(grid, centers, depth=0.2, width=0.1):
    """Analytic xi0 made of equal Gaussian wells, zero outside the domain."""
    values = np.zeros(grid.shape)
    for cx, cy in centers:
        values -= depth * np.exp(-((grid.X - cx) ** 2 + (grid.Y - cy) ** 2) / (2 * width ** 2))
    values[~grid.mask] = 0.0
    return ScalarField(grid, values)


def _check_points(points, degrees):
    if len(points) != len(degrees):
        raise DomainError(f"{len(points)} points but {len(degrees)} degrees")
    for k in range(len(points)):
        for l in range(k + 1, len(points)):
            if np.allclose(points[k], points[l]):
                raise DomainError(f"points {k} and {l} coincide at {tuple(points[k])}")


def solve_zeta(points, degrees, grid, method="direct") -> ScalarField:
    """Modified London solution: (1 - Lap) g = 2 pi sum d_i delta_{a_i}, then Lap zeta = g, both zero on the boundary."""
    _check_points(points, degrees)
    source = np.zeros(grid.shape)
    for p, d in zip(points, degrees):
        source += dirac(grid, p, 2 * np.pi * d).values
    g = solve_dirichlet("screened", rhs=source, boundary=0.0, grid=grid, method=method)
    return solve_dirichlet("poisson", rhs=-g.values, boundary=0.0, grid=grid, method=method)


def point_value(field: ScalarField, point):
    """Value at a point with the same bilinear weights as the Dirac mass."""
    return field.at(*point)


def tilde_V(zeta: ScalarField, points, degrees):
    """Returns the functional evaluated on zeta and its closed form pi sum d_i zeta(a_i) valid at the minimizer."""
    grid = zeta.grid
    h2 = grid.h ** 2
    pointwise = sum(d * point_value(zeta, p) for p, d in zip(points, degrees))
    lap = dirichlet_apply(zeta)
    general = 2 * np.pi * pointwise + 0.5 * h2 * float(lap @ lap) + 0.5 * dirichlet_form(zeta)
    return float(general), float(np.pi * pointwise)
