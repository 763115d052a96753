import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve
from tqdm import tqdm

from errors import DomainError
from fields import ComplexField, ScalarField, graph_laplacian, partial, solve_dirichlet, solve_neumann

__all__ = ['VortexConfig', 'MesoConfig', 'MesoResult', 'solve_regular_part', 'w_macro', 'canonical_phase',
           'punctured_energy', 'w_meso_energy', 'minimize_w_meso', 'meso_field_energy', 'minimize_meso_field',
           'meso_constants', 'w_micro', 'w_micro_levels', 'minimize_w_micro']

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VortexConfig:
    points: Tuple[Tuple[float, float], ...]
    degrees: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "points", tuple((float(x), float(y)) for x, y in self.points))
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        if len(self.points) != len(self.degrees):
            raise DomainError(f"{len(self.points)} points but {len(self.degrees)} degrees")
        if any(d == 0 for d in self.degrees):
            raise DomainError("vortex degrees must be nonzero")
        for i in range(len(self.points)):
            for j in range(i + 1, len(self.points)):
                if np.hypot(self.points[i][0] - self.points[j][0], self.points[i][1] - self.points[j][1]) == 0:
                    raise DomainError(f"vortices {i} and {j} coincide at {self.points[i]}")

    def __len__(self):
        return len(self.points)

    @property
    def total_degree(self):
        return sum(self.degrees)

    def min_separation(self):
        if len(self) < 2:
            return np.inf
        P = np.asarray(self.points)
        dist = np.hypot(P[:, None, 0] - P[None, :, 0], P[:, None, 1] - P[None, :, 1])
        return float(dist[np.triu_indices(len(self), 1)].min())

    @classmethod
    def from_list(cls, items):
        """From [{"point": [x, y], "degree": d}, ...]."""
        return cls(points=[tuple(item["point"]) for item in items], degrees=[item.get("degree", 1) for item in items])

    def to_list(self):
        return [{"point": list(p), "degree": d} for p, d in zip(self.points, self.degrees)]


@dataclass(frozen=True)
class MesoConfig:
    points: np.ndarray
    D: int
    Q: np.ndarray

    def to_dict(self):
        return {"points": np.asarray(self.points).tolist(), "D": self.D, "Q": np.asarray(self.Q).tolist()}


@dataclass(frozen=True)
class MesoResult:
    config: MesoConfig
    value: float
    converged: bool
    grad_norm: float


# macroscopic

def _log_sum(config):
    def boundary(x, y):
        out = np.zeros(np.shape(x))
        for (zx, zy), d in zip(config.points, config.degrees):
            out -= d * np.log(np.hypot(x - zx, y - zy))
        return out
    return boundary


def solve_regular_part(config: VortexConfig, grid, method="direct") -> ScalarField:
    """Harmonic R with R = -sum d_i ln|x - z_i| on the boundary."""
    for p in config.points:
        if not bool(grid.domain.contains(*p)):
            raise DomainError(f"vortex {p} lies outside the domain")
    return solve_dirichlet("poisson", rhs=None, boundary=_log_sum(config), grid=grid, method=method)


def w_macro(config: VortexConfig, grid, regular_part=None) -> float:
    R = solve_regular_part(config, grid) if regular_part is None else regular_part
    pair = 0.0
    for i, (zi, di) in enumerate(zip(config.points, config.degrees)):
        for j, (zj, dj) in enumerate(zip(config.points, config.degrees)):
            if i != j:
                pair -= np.pi * di * dj * np.log(np.hypot(zi[0] - zj[0], zi[1] - zj[1]))
    self_term = -np.pi * sum(d * R.at(*z) for z, d in zip(config.points, config.degrees))
    return float(pair + self_term)


def canonical_phase(config: VortexConfig, grid, regular_part=None) -> ComplexField:
    """exp(i (sum d_i arg(x - z_i) + psi)) with psi the harmonic conjugate of the regular part."""
    R = solve_regular_part(config, grid) if regular_part is None else regular_part
    nodes = grid.active
    Rx = partial(R.values, grid, 0)
    Ry = partial(R.values, grid, 1)
    wx, wy = grid.link_weights
    h = grid.h
    inc_x = -h * 0.5 * (Ry[1:, :] + Ry[:-1, :])
    inc_y = h * 0.5 * (Rx[:, 1:] + Rx[:, :-1])

    L, index = graph_laplacian(grid, nodes, wx, wy)
    rhs = np.zeros(L.shape[0])
    for w, inc, (di, dj) in ((wx, inc_x, (1, 0)), (wy, inc_y, (0, 1))):
        a = index[:grid.nx - di, :grid.ny - dj]
        b = index[di:, dj:]
        keep = (a >= 0) & (b >= 0) & (w > 0)
        np.add.at(rhs, b[keep], w[keep] * inc[keep])
        np.add.at(rhs, a[keep], -w[keep] * inc[keep])
    psi = np.zeros(grid.shape)
    psi[nodes] = solve_neumann(L, rhs)

    phase = psi.copy()
    for (zx, zy), d in zip(config.points, config.degrees):
        phase += d * np.arctan2(grid.Y - zy, grid.X - zx)
    return ComplexField(grid, np.exp(1j * phase))


def punctured_energy(w: ComplexField, config: VortexConfig, r) -> float:
    """Dirichlet energy of w over links whose midpoint is farther than r from every vortex."""
    grid = w.grid
    wx, wy = grid.link_weights
    v = w.values
    h = grid.h
    total = 0.0
    for weight, diff, mx, my in (
            (wx, v[1:, :] - v[:-1, :], grid.X[:-1, :] + h / 2, grid.Y[:-1, :]),
            (wy, v[:, 1:] - v[:, :-1], grid.X[:, :-1], grid.Y[:, :-1] + h / 2)):
        far = np.ones(weight.shape, dtype=bool)
        for zx, zy in config.points:
            far &= np.hypot(mx - zx, my - zy) > r
        total += np.sum((weight * np.abs(diff) ** 2)[far])
    return float(0.5 * total)


# mesoscopic

def _pair_terms(x):
    diff = x[:, None, :] - x[None, :, :]
    dist2 = np.sum(diff ** 2, axis=-1)
    np.fill_diagonal(dist2, 1.0)
    return diff, dist2


def _log_gas(x, quad_value, quad_grad):
    diff, dist2 = _pair_terms(x)
    if np.any(dist2 == 0):
        raise DomainError("coincident points in the log-gas")
    value = -0.5 * np.pi * np.sum(np.log(dist2)) + quad_value
    grad = -2 * np.pi * np.sum(diff / dist2[..., None], axis=1) + quad_grad
    return float(value), grad


def w_meso_energy(points, Q):
    """Value and gradient of -pi sum_{i != j} ln|x_i - x_j| + pi D sum Q(x_i)."""
    x = np.atleast_2d(np.asarray(points, dtype=float))
    Q = np.asarray(Q, dtype=float)
    D = len(x)
    Qx = x @ Q.T
    return _log_gas(x, np.pi * D * float(np.sum(x * Qx)), 2 * np.pi * D * Qx)


def meso_field_energy(points, p, H, h_ex):
    """Interaction of D vortices near p with the quadratic model of h_ex xi0."""
    z = np.atleast_2d(np.asarray(points, dtype=float))
    y = z - np.asarray(p, dtype=float)
    Hy = y @ np.asarray(H, dtype=float).T
    return _log_gas(z, np.pi * h_ex * float(np.sum(y * Hy)), 2 * np.pi * h_ex * Hy)


def _descend(fun, x, gtol, max_iter):
    """Gradient descent with Barzilai-Borwein trial steps and step halving."""
    value, grad = fun(x)
    step = 1e-2
    prev_x = prev_g = None
    for _ in range(max_iter):
        gnorm = float(np.sqrt(np.sum(grad ** 2)))
        if gnorm <= gtol:
            return x, value, True, gnorm
        if prev_x is not None:
            s, yk = (x - prev_x).ravel(), (grad - prev_g).ravel()
            sy = float(s @ yk)
            if sy > 0:
                step = float(s @ s) / sy
        while True:
            trial = x - step * grad
            try:
                tv, tg = fun(trial)
            except DomainError:
                tv = np.inf
            if tv <= value - 1e-4 * step * gnorm ** 2:
                break
            step *= 0.5
            if step < 1e-16:
                return x, value, False, gnorm
        prev_x, prev_g = x, grad
        x, value, grad = trial, tv, tg
    return x, value, False, float(np.sqrt(np.sum(grad ** 2)))


def _ellipse_sample(rng, D, Q):
    """Uniform points in the unit ellipse x.Qx <= 1."""
    radius = np.sqrt(rng.random(D))
    angle = 2 * np.pi * rng.random(D)
    u = np.stack([radius * np.cos(angle), radius * np.sin(angle)], axis=1)
    chol = np.linalg.cholesky(Q)
    return np.linalg.solve(chol.T, u.T).T


def _lex_key(x):
    return tuple(np.round(np.asarray(sorted(map(tuple, x))), 10).ravel())


def minimize_w_meso(D, Q, multistart=None, rng=None, gtol=1e-8, max_iter=20000, verbose=False) -> MesoResult:
    Q = np.asarray(Q, dtype=float)
    if D < 1:
        raise ValueError(f"D must be at least 1, got {D}")
    if D == 1:
        return MesoResult(MesoConfig(np.zeros((1, 2)), 1, Q), 0.0, True, 0.0)
    if rng is None:
        rng = np.random.default_rng(0)
    multistart = 8 * D if multistart is None else multistart

    results = []
    for _ in tqdm(range(multistart), disable=not verbose, desc=f"meso D={D}"):
        x0 = _ellipse_sample(rng, D, Q)
        results.append(_descend(lambda x: w_meso_energy(x, Q), x0, gtol, max_iter))
    best_value = min(r[1] for r in results)
    ties = [r for r in results if r[1] <= best_value + 1e-9]
    x, value, converged, gnorm = min(ties, key=lambda r: _lex_key(r[0]))
    x = np.asarray(sorted(map(tuple, x)))
    logger.debug("meso D=%d: C=%.8f, |grad|=%.2e", D, value, gnorm)
    return MesoResult(MesoConfig(x, D, Q), float(value), bool(converged), float(gnorm))


def minimize_meso_field(D, p, H, h_ex, multistart=None, rng=None, gtol=1e-8, max_iter=20000):
    """Unscaled minimizer of meso_field_energy; its spread is sqrt(D / h_ex) times the log-gas minimizer."""
    H = np.asarray(H, dtype=float)
    p = np.asarray(p, dtype=float)
    if rng is None:
        rng = np.random.default_rng(0)
    ell = np.sqrt(D / h_ex)
    multistart = 8 * D if multistart is None else multistart

    def fun(z):
        return meso_field_energy(z, p, H, h_ex)

    results = [_descend(fun, p + ell * _ellipse_sample(rng, D, H), gtol, max_iter) for _ in range(multistart)]
    z, value, converged, gnorm = min(results, key=lambda r: (r[1], _lex_key(r[0])))
    return np.asarray(sorted(map(tuple, z))), float(value), bool(converged)


def meso_constants(london, D_max, multistart=None, rng=None):
    """C_{p,D} for every p in Lambda and 0 <= D <= D_max, keyed by (k, D)."""
    table = {}
    for k, H in enumerate(london.hessians):
        table[(k, 0)] = 0.0
        for D in range(1, D_max + 1):
            table[(k, D)] = minimize_w_meso(D, H, multistart=multistart, rng=rng).value
    return table


# microscopic

def _inradius(domain, x0, directions=64):
    angles = 2 * np.pi * np.arange(directions) / directions
    return float(np.min(domain.ray_distance(np.full(directions, x0[0]), np.full(directions, x0[1]),
                                            np.cos(angles), np.sin(angles))))


def _micro_energy(x0, omega, b, Rhat, rhat, n_theta, subsamples=8):
    """Weighted degree-one energy on the log-polar annulus around x0 through the conjugate capacity problem."""
    dtheta = 2 * np.pi / n_theta
    length = np.log(Rhat) - np.log(rhat)
    n_s = int(np.ceil(length / dtheta))
    ds = length / n_s
    s = np.log(rhat) + ds * np.arange(n_s + 1)
    theta = dtheta * np.arange(n_theta)
    b2 = b ** 2

    # radial faces: exact integral of a^2 along each ray, omega convex around x0
    exit_s = np.log(omega.ray_distance(np.full(n_theta, x0[0]), np.full(n_theta, x0[1]),
                                       np.cos(theta), np.sin(theta)))
    lo, hi = s[:-1][:, None], s[1:][:, None]
    inside = np.clip(exit_s[None, :], lo, hi) - lo
    g_s = dtheta / (b2 * inside + (ds - inside))

    # angular faces: mean of a^-2 over the s-interval at the mid angle
    mid = theta + dtheta / 2
    offsets = (np.arange(subsamples) + 0.5) / subsamples - 0.5
    samples = s[:, None, None] + ds * offsets[None, :, None]
    rho = np.exp(samples)
    px = x0[0] + rho * np.cos(mid)[None, None, :]
    py = x0[1] + rho * np.sin(mid)[None, None, :]
    inv_a2 = np.where(omega.contains(px, py), 1.0 / b2, 1.0)
    g_t = ds / dtheta * inv_a2.mean(axis=1)
    g_t[0] *= 0.5
    g_t[-1] *= 0.5

    n_inner = n_s - 1
    index = np.arange(n_inner * n_theta).reshape(n_inner, n_theta)
    diag = np.zeros((n_inner, n_theta))
    rhs = np.zeros((n_inner, n_theta))
    rows, cols, vals = [], [], []
    # radial links j -> j+1
    for j in range(n_s):
        g = g_s[j]
        a_in, b_in = 1 <= j <= n_inner, 1 <= j + 1 <= n_inner
        if a_in:
            diag[j - 1] += g
        if b_in:
            diag[j] += g
        if a_in and b_in:
            rows += [index[j - 1], index[j]]
            cols += [index[j], index[j - 1]]
            vals += [-g, -g]
        elif b_in and j == 0:
            rhs[j] += g
    # angular links k -> k+1 on unknown rings
    g = g_t[1:n_s]
    nxt = np.roll(index, -1, axis=1)
    diag += g + np.roll(g, 1, axis=1)
    rows += [index.ravel(), nxt.ravel()]
    cols += [nxt.ravel(), index.ravel()]
    vals += [-g.ravel(), -g.ravel()]
    rows.append(index.ravel())
    cols.append(index.ravel())
    vals.append(diag.ravel())
    A = sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(index.size, index.size))
    psi_inner = spsolve(A.tocsc(), rhs.ravel()).reshape(n_inner, n_theta)

    psi = np.vstack([np.ones((1, n_theta)), psi_inner, np.zeros((1, n_theta))])
    capacity = float(np.sum(g_s * np.diff(psi, axis=0) ** 2)
                     + np.sum(g_t * (np.roll(psi, -1, axis=1) - psi) ** 2))
    return 2 * np.pi ** 2 / capacity


def _check_micro_point(x0, omega, rhat):
    if not bool(omega.contains(*x0)):
        raise DomainError(f"x0={tuple(x0)} is not inside the inclusion")
    if _inradius(omega, x0) <= rhat:
        raise DomainError(f"the disk B(x0, {rhat}) is not contained in the inclusion")


def w_micro_levels(x0, spec, Rhat=8.0, rhat=0.02, n_theta=128, levels=3):
    """Per-level values of the microscopic renormalized energy and their Aitken extrapolation."""
    x0 = (float(x0[0]), float(x0[1]))
    _check_micro_point(x0, spec.omega, rhat)
    rows = []
    for k in range(levels):
        R, r = Rhat * 2 ** k, rhat / 2 ** k
        energy = _micro_energy(x0, spec.omega, spec.b, R, r, n_theta)
        rows.append((R, r, energy - np.pi * np.log(R) - spec.b ** 2 * np.pi * np.log(1.0 / r)))
    values = [w for _, _, w in rows]
    value = values[-1]
    if len(values) >= 3:
        d1, d2 = values[-1] - values[-2], values[-2] - values[-3]
        if abs(d1 - d2) > 1e-14 and abs(d1) < abs(d2):
            value = values[-1] - d1 ** 2 / (d1 - d2)
    return {"x0": list(x0), "levels": [list(r) for r in rows], "value": float(value)}


def w_micro(x0, spec, Rhat=8.0, rhat=0.02, n_theta=128, levels=3) -> float:
    return w_micro_levels(x0, spec, Rhat=Rhat, rhat=rhat, n_theta=n_theta, levels=levels)["value"]


def minimize_w_micro(spec, search=9, Rhat=8.0, rhat=0.02, n_theta=128, levels=3, verbose=False):
    """Grid search over the inclusion, quadratic refinement on the best 3x3 patch, extrapolated final value."""
    omega = spec.omega
    xmin, xmax, ymin, ymax = omega.bounding_box()
    xs = np.linspace(xmin, xmax, search)
    ys = np.linspace(ymin, ymax, search)
    hx, hy = xs[1] - xs[0], ys[1] - ys[0]
    values = np.full((search, search), np.inf)
    for i in tqdm(range(search), disable=not verbose, desc="micro search"):
        for j in range(search):
            x0 = (xs[i], ys[j])
            if bool(omega.contains(*x0)) and _inradius(omega, x0) > rhat:
                values[i, j] = _micro_energy(x0, omega, spec.b, Rhat, rhat, n_theta) \
                               - np.pi * np.log(Rhat) - spec.b ** 2 * np.pi * np.log(1.0 / rhat)
    i, j = np.unravel_index(np.argmin(values), values.shape)
    x_star = np.array([xs[i], ys[j]])
    if 1 <= i < search - 1 and 1 <= j < search - 1 and np.all(np.isfinite(values[i - 1:i + 2, j - 1:j + 2])):
        patch = values[i - 1:i + 2, j - 1:j + 2]
        gx = (patch[2, 1] - patch[0, 1]) / 2
        gy = (patch[1, 2] - patch[1, 0]) / 2
        hxx = patch[2, 1] - 2 * patch[1, 1] + patch[0, 1]
        hyy = patch[1, 2] - 2 * patch[1, 1] + patch[1, 0]
        hxy = (patch[2, 2] - patch[2, 0] - patch[0, 2] + patch[0, 0]) / 4
        H = np.array([[hxx, hxy], [hxy, hyy]])
        if np.all(np.linalg.eigvalsh(H) > 0):
            shift = np.clip(-np.linalg.solve(H, [gx, gy]), -1.0, 1.0)
            trial = x_star + shift * np.array([hx, hy])
            if bool(omega.contains(*trial)) and _inradius(omega, trial) > rhat:
                x_star = trial
    value = w_micro(x_star, spec, Rhat=Rhat, rhat=rhat, n_theta=n_theta, levels=levels)
    logger.info("W_micro minimum %.6f at %s", value, x_star.tolist())
    return (float(x_star[0]), float(x_star[1])), float(value)
