import numpy as np

from fields import LinkField, ScalarField, graph_laplacian, solve_neumann
from module import GLModule

__all__ = ['energy_full', 'energy_unreduced', 'coulomb_project', 'gauge_transform', 'divergence_defect']


def energy_full(state):
    """Decoupled energy of (v, A) and its kinetic, potential and field parts."""
    return GLModule.from_state(state).components()


def energy_unreduced(u, A, a, epsilon, h_ex):
    """Full energy of the order parameter u; a is the pinning term as a field."""
    grid = u.grid
    a_values = a.a.values if hasattr(a, "a") else a.values
    module = GLModule(grid, u.values, A, np.ones(grid.shape), epsilon, h_ex, target=a_values ** 2)
    return module.components()


def _outflux(A):
    wx, wy = A.grid.link_weights
    fx, fy = wx * A.ax, wy * A.ay
    out = np.zeros(A.grid.shape)
    out[:-1, :] += fx
    out[1:, :] -= fx
    out[:, :-1] += fy
    out[:, 1:] -= fy
    return out


def coulomb_project(A: LinkField):
    """A' = A + grad phi with zero weighted divergence at every active node (this includes A.n = 0)."""
    grid = A.grid
    nodes = grid.active
    wx, wy = grid.link_weights
    L, _ = graph_laplacian(grid, nodes, wx, wy)
    rhs = grid.h * _outflux(A)[nodes]
    phi = np.zeros(grid.shape)
    phi[nodes] = solve_neumann(L, rhs, rtol=1e-9)
    return A + LinkField.gradient_of(grid, phi), ScalarField(grid, phi)


def gauge_transform(state, phi):
    """v -> v exp(i phi), A -> A + grad phi; the energy is unchanged."""
    values = phi.values if isinstance(phi, ScalarField) else np.asarray(phi)
    grid = state.grid
    v = state.v.with_values(state.v.values * np.exp(1j * values))
    return state.replace(v=v, A=state.A + LinkField.gradient_of(grid, values))


def divergence_defect(A: LinkField):
    """Largest weighted divergence over active nodes, in units of A."""
    grid = A.grid
    out = _outflux(A)[grid.active]
    scale = max(A.max_abs(), 1e-300)
    return float(np.max(np.abs(out)) / scale)
