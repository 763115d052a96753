import logging

import numpy as np

from errors import ConvergenceError
from fields import LinkField, ScalarField, partial, solve_dirichlet

__all__ = ['supercurrent', 'solve_A_v']

logger = logging.getLogger(__name__)


def supercurrent(v, U):
    """Density rho = U^2 |v|^2 and current j = U^2 Im(conj(v) grad v) on nodes."""
    grid = v.grid
    u2 = U.values ** 2
    jx = u2 * np.imag(np.conj(v.values) * partial(v.values, grid, 0))
    jy = u2 * np.imag(np.conj(v.values) * partial(v.values, grid, 1))
    return u2 * np.abs(v.values) ** 2, jx, jy


def solve_A_v(v, U, h_ex, london=None, tol=1e-10, max_iter=200, method="direct"):
    """Coulomb-gauge potential minimizing the energy for fixed v.

    Writing A = perp grad xi and H = curl A = Lap xi, iterate
        -Lap H + H = curl j + div((1 - rho) grad xi_k),  H = h_ex on the boundary,
        Lap xi_{k+1} = H,                                 xi = 0 on the boundary.
    Returns the potential and the stream function xi.
    """
    grid = v.grid
    rho, jx, jy = supercurrent(v, U)
    curl_j = partial(jy, grid, 0) - partial(jx, grid, 1)
    xi = h_ex * london.xi0.values if london is not None else np.zeros(grid.shape)

    change = np.inf
    for it in range(max_iter):
        flux_x = (1 - rho) * partial(xi, grid, 0)
        flux_y = (1 - rho) * partial(xi, grid, 1)
        rhs = curl_j + partial(flux_x, grid, 0) + partial(flux_y, grid, 1)
        H = solve_dirichlet("screened", rhs=rhs, boundary=h_ex, grid=grid, method=method)
        nxt = solve_dirichlet("poisson", rhs=-H.values, boundary=0.0, grid=grid, method=method).values
        change = float(np.max(np.abs(nxt - xi)[grid.mask]))
        xi = nxt
        if change <= tol * max(1.0, float(np.max(np.abs(xi[grid.mask])))):
            logger.debug("induced field converged in %d iterations", it + 1)
            break
    else:
        raise ConvergenceError(f"induced field fixed point did not converge in {max_iter} iterations", change)
    return LinkField.from_stream(ScalarField(grid, xi)), ScalarField(grid, xi)
