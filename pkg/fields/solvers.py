import logging
from functools import lru_cache

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg, factorized, spsolve

from errors import GridError, SolverError
from .grid import DIRECTIONS, ScalarField, neighbor

__all__ = ['solve_dirichlet', 'dirac', 'dirichlet_operator', 'dirichlet_apply', 'dirichlet_form', 'solve_sparse',
           'graph_laplacian', 'solve_neumann']

logger = logging.getLogger(__name__)

KINDS = ("poisson", "screened")

_DIAGONALS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@lru_cache(maxsize=32)
def dirichlet_operator(grid, kind="poisson"):
    """Symmetric ghost-point discretization of -Laplace (plus identity when screened) on interior nodes.

    A link cut by the boundary at fraction theta adds 1 / (theta h^2) to the diagonal.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown operator kind {kind!r}, expected one of {KINDS}")
    idx = grid.interior_index
    mask = grid.mask
    me = idx[mask]
    h2 = grid.h ** 2
    diag = np.zeros(len(me))
    rows, cols, vals = [], [], []
    for k, (di, dj) in enumerate(DIRECTIONS):
        nb = neighbor(idx, di, dj, fill=-1)[mask]
        diag += 1.0 / (grid.theta[k][mask] * h2)
        inner = nb >= 0
        rows.append(me[inner])
        cols.append(nb[inner])
        vals.append(np.full(int(inner.sum()), -1.0 / h2))
    if kind == "screened":
        diag += 1.0
    rows.append(me)
    cols.append(me)
    vals.append(diag)
    n = len(me)
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


@lru_cache(maxsize=32)
def _factor(grid, kind):
    return factorized(dirichlet_operator(grid, kind).tocsc())


def _as_values(grid, field, default=0.0):
    if field is None:
        return np.full(grid.shape, default)
    if isinstance(field, ScalarField):
        return field.values
    if np.isscalar(field):
        return np.full(grid.shape, float(field))
    values = np.asarray(field, dtype=float)
    if values.shape != grid.shape:
        raise ValueError(f"array of shape {values.shape} does not match grid {grid.shape}")
    return values


def _boundary_at(grid, boundary, k, sel):
    """Boundary data at the cut points of direction k for the interior nodes selected by `sel`."""
    di, dj = DIRECTIONS[k]
    th = grid.theta[k][sel]
    if boundary is None or np.isscalar(boundary):
        return np.full(th.shape, 0.0 if boundary is None else float(boundary))
    if callable(boundary) and not isinstance(boundary, ScalarField):
        px = grid.X[sel] + th * grid.h * di
        py = grid.Y[sel] + th * grid.h * dj
        return np.asarray(boundary(px, py), dtype=float) * np.ones(th.shape)
    values = _as_values(grid, boundary)
    outer = neighbor(values, di, dj)[sel]
    return (1.0 - th) * values[sel] + th * outer


def _boundary_extension(grid, boundary):
    if boundary is None or np.isscalar(boundary):
        return np.full(grid.shape, 0.0 if boundary is None else float(boundary))
    if callable(boundary) and not isinstance(boundary, ScalarField):
        return np.asarray(boundary(grid.X, grid.Y), dtype=float) * np.ones(grid.shape)
    return _as_values(grid, boundary).copy()


def _boundary_rhs(grid, boundary):
    rhs = np.zeros(grid.shape)
    h2 = grid.h ** 2
    for k, (di, dj) in enumerate(DIRECTIONS):
        sel = grid.mask & ~neighbor(grid.mask, di, dj, fill=False)
        if not sel.any():
            continue
        g = _boundary_at(grid, boundary, k, sel)
        rhs[sel] += g / (grid.theta[k][sel] * h2)
    return rhs[grid.mask]


def _fill_exterior(grid, values, boundary):
    """Extend a Dirichlet solution: quadratic ghost values on the first exterior layer, boundary data beyond."""
    out = np.where(grid.mask, values, _boundary_extension(grid, boundary))
    total = np.zeros(grid.shape)
    count = np.zeros(grid.shape)
    for k, (di, dj) in enumerate(DIRECTIONS):
        sel = grid.mask & ~neighbor(grid.mask, di, dj, fill=False)
        if not sel.any():
            continue
        th = grid.theta[k][sel]
        g = _boundary_at(grid, boundary, k, sel)
        ui = values[sel]
        has_prev = neighbor(grid.mask, -di, -dj, fill=False)[sel]
        uii = neighbor(values, -di, -dj)[sel]
        quad = (1 - th) / (1 + th) * uii - 2 * (1 - th) / th * ui + 2 / (th * (1 + th)) * g
        lin = ui + (g - ui) / th
        est = np.where(th >= 0.1, np.where(has_prev, quad, lin), np.where(has_prev, 2 * ui - uii, g))
        target = np.argwhere(sel) + np.array([di, dj])
        np.add.at(total, (target[:, 0], target[:, 1]), est)
        np.add.at(count, (target[:, 0], target[:, 1]), 1.0)
    reached = count > 0
    out[reached] = total[reached] / count[reached]

    missing = grid.ghost & ~reached
    if missing.any():
        diag_total = np.zeros(grid.shape)
        diag_count = np.zeros(grid.shape)
        for di, dj in _DIAGONALS:
            src = neighbor(grid.mask, -di, -dj, fill=False) & missing
            if not src.any():
                continue
            ui = neighbor(values, -di, -dj)[src]
            has_prev = neighbor(grid.mask, -2 * di, -2 * dj, fill=False)[src]
            uii = neighbor(values, -2 * di, -2 * dj)[src]
            diag_total[src] += np.where(has_prev, 2 * ui - uii, ui)
            diag_count[src] += 1.0
        done = diag_count > 0
        out[done] = diag_total[done] / diag_count[done]
    return out


def solve_dirichlet(kind, rhs=None, boundary=0.0, grid=None, method="direct", rtol=1e-10):
    """Solve -Lap u = f (poisson) or -Lap u + u = f (screened) with u = boundary on the domain boundary.

    rhs and boundary may be ScalarFields, grid-shaped arrays, constants, or (boundary only)
    callables of (x, y) evaluated at the boundary crossing points.
    """
    if grid is None:
        for candidate in (rhs, boundary):
            if isinstance(candidate, ScalarField):
                grid = candidate.grid
                break
        else:
            raise ValueError("grid must be given when neither rhs nor boundary is a field")

    A = dirichlet_operator(grid, kind)
    f = _as_values(grid, rhs)
    if not np.all(np.isfinite(f[grid.mask])):
        raise SolverError("right-hand side is not finite on the interior")
    b = f[grid.mask] + _boundary_rhs(grid, boundary)

    if method == "direct":
        x = _factor(grid, kind)(b)
    elif method == "cg":
        M = sparse.diags(1.0 / A.diagonal())
        try:
            x, info = cg(A, b, rtol=rtol, atol=0.0, maxiter=50 * grid.n, M=M)
        except TypeError:
            # scipy < 1.12 names the relative tolerance `tol`
            x, info = cg(A, b, tol=rtol, atol=0.0, maxiter=50 * grid.n, M=M)
        if info != 0:
            residual = np.linalg.norm(A @ x - b) / max(np.linalg.norm(b), np.finfo(float).tiny)
            raise SolverError(f"conjugate gradient did not converge in {50 * grid.n} iterations", residual)
    else:
        raise ValueError(f"unknown solver method {method!r}")

    bnorm = np.linalg.norm(b)
    residual = np.linalg.norm(A @ x - b) / bnorm if bnorm > 0 else np.linalg.norm(x)
    if residual > rtol:
        raise SolverError(f"{kind} solve residual above tolerance {rtol:.1e}", residual)
    logger.debug("%s solve on %d nodes, relative residual %.2e", kind, len(b), residual)

    values = np.zeros(grid.shape)
    values[grid.mask] = x
    return ScalarField(grid, _fill_exterior(grid, values, boundary))


def dirac(grid, point, weight=1.0):
    """Bilinear Dirac mass at `point` scaled by 1/h^2."""
    nodes, weights = grid.bilinear(*point)
    values = np.zeros(grid.shape)
    for node, w in zip(nodes, weights):
        if not grid.mask[node]:
            raise GridError(f"point {tuple(point)} is too close to the boundary")
        values[node] += weight * w / grid.h ** 2
    return ScalarField(grid, values)


def dirichlet_apply(field, kind="poisson"):
    """Discrete operator applied to the interior values, zero boundary data."""
    return dirichlet_operator(field.grid, kind) @ field.values[field.grid.mask]


def dirichlet_form(field):
    """Consistent discrete Dirichlet integral of a field vanishing on the boundary."""
    u = field.values[field.grid.mask]
    return float(field.grid.h ** 2 * u @ dirichlet_apply(field))


def solve_sparse(matrix, rhs, rtol=1e-10):
    x = spsolve(sparse.csc_matrix(matrix), rhs)
    bnorm = np.linalg.norm(rhs)
    residual = np.linalg.norm(matrix @ x - rhs) / bnorm if bnorm > 0 else np.linalg.norm(x)
    if not np.isfinite(residual) or residual > rtol:
        raise SolverError("sparse solve residual above tolerance", residual)
    return x


def graph_laplacian(grid, nodes, wx, wy):
    """Weighted graph Laplacian over the nodes selected by `nodes`, links with positive weight."""
    index = -np.ones(grid.shape, dtype=np.int64)
    index[nodes] = np.arange(int(nodes.sum()))
    rows, cols, vals = [], [], []
    for w, (di, dj) in ((wx, (1, 0)), (wy, (0, 1))):
        a = index[:grid.nx - di, :grid.ny - dj]
        b = index[di:, dj:]
        keep = (a >= 0) & (b >= 0) & (w > 0)
        a, b, ww = a[keep], b[keep], w[keep]
        rows += [a, b, a, b]
        cols += [a, b, b, a]
        vals += [ww, ww, -ww, -ww]
    n = int(nodes.sum())
    L = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return L, index


def solve_neumann(L, rhs, rtol=1e-9):
    """Solve a singular graph Laplacian system with the first unknown pinned to zero."""
    rhs = rhs - rhs.mean()
    x = np.zeros(L.shape[0])
    x[1:] = spsolve(sparse.csc_matrix(L[1:, 1:]), rhs[1:])
    scale = max(np.linalg.norm(rhs), np.finfo(float).tiny)
    residual = np.linalg.norm(L @ x - rhs) / scale
    if not np.isfinite(residual) or residual > rtol:
        raise SolverError("Neumann graph solve residual above tolerance", residual)
    return x
