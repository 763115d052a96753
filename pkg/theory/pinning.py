import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve
from tqdm import tqdm

from errors import ConfigError, ConvergenceError, GridError
from fields import DomainSpec, ScalarField, domain_from_dict, graph_laplacian

__all__ = ['PinningSpec', 'PinningField', 'build_pinning_term', 'uniform_pinning', 'solve_lassoued_mironescu',
           'lm_residual', 'energy_E', 'energy_F', 'decoupling_residual']

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PinningSpec:
    b: float
    lam: float
    delta: float
    omega: DomainSpec
    epsilon: float

    def __post_init__(self):
        for name in ("b", "lam", "delta"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ConfigError(f"pinning.{'lambda' if name == 'lam' else name}", f"must lie in (0, 1), got {value}")
        if not self.epsilon > 0:
            raise ConfigError("pinning.epsilon", f"must be positive, got {self.epsilon}")
        xmin, xmax, ymin, ymax = self.omega.bounding_box()
        if not (xmin > -0.5 and xmax < 0.5 and ymin > -0.5 and ymax < 0.5):
            raise ConfigError("pinning.omega", "the inclusion closure must lie inside the open unit cell (-1/2, 1/2)^2")
        if not bool(self.omega.contains(0.0, 0.0)):
            raise ConfigError("pinning.omega", "the inclusion must contain the cell center")

    @property
    def inclusion_size(self):
        return self.lam * self.delta

    @classmethod
    def from_dict(cls, spec):
        missing = [k for k in ("b", "lambda", "delta", "epsilon", "omega") if k not in spec]
        if missing:
            raise ConfigError("pinning", f"missing keys {missing}")
        return cls(b=float(spec["b"]), lam=float(spec["lambda"]), delta=float(spec["delta"]),
                   omega=domain_from_dict(spec["omega"]), epsilon=float(spec["epsilon"]))

    def to_dict(self):
        return {"b": self.b, "lambda": self.lam, "delta": self.delta, "epsilon": self.epsilon,
                "omega": self.omega.to_dict()}

    def regime_note(self):
        """Size of the two logarithmic scales the theory needs ordered as b^2|ln eps| >> (1-b^2)|ln lam delta| >> 1."""
        core = self.b ** 2 * abs(np.log(self.epsilon))
        pin = (1 - self.b ** 2) * abs(np.log(self.inclusion_size))
        return {"core_log": float(core), "pinning_log": float(pin), "ordered": bool(core > pin > 1.0)}


@dataclass(frozen=True, eq=False)
class PinningField:
    a: ScalarField
    spec: PinningSpec = None
    inclusion_centers: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def grid(self):
        return self.a.grid

    @property
    def b(self):
        return self.spec.b if self.spec is not None else float(self.a.interior().min())

    def area_fraction(self):
        """Fraction of the retained cells' area where a = b."""
        if not self.inclusion_centers:
            return 0.0
        m = self.grid.node_mass
        pinned = float(m[self.a.values < 1.0].sum())
        return pinned / (len(self.inclusion_centers) * self.spec.delta ** 2)

    def nearest_inclusion(self, point):
        if not self.inclusion_centers:
            return None, np.inf
        centers = np.asarray(self.inclusion_centers)
        dist = np.hypot(centers[:, 0] - point[0], centers[:, 1] - point[1])
        k = int(np.argmin(dist))
        return tuple(centers[k]), float(dist[k])

    def inside_inclusion(self, point):
        center, _ = self.nearest_inclusion(point)
        if center is None:
            return False
        size = self.spec.inclusion_size
        return bool(self.spec.omega.contains((point[0] - center[0]) / size, (point[1] - center[1]) / size))


def _cells_inside(domain, cx, cy, delta):
    half = delta / 2.0
    inside = np.ones(np.shape(cx), dtype=bool)
    for sx in (-1, 1):
        for sy in (-1, 1):
            inside &= domain.contains(cx + sx * half, cy + sy * half)
    return inside


def build_pinning_term(spec: PinningSpec, grid) -> PinningField:
    h = grid.h
    if spec.delta < 4 * h:
        raise GridError(f"pinning cells of size delta={spec.delta} are under-resolved, need delta >= 4h = {4 * h:.4g}")

    a = np.ones(grid.shape)
    size = spec.inclusion_size
    if size * spec.omega.diameter() < h:
        logger.warning("inclusions of size %.3g are below the grid spacing %.3g, a is identically 1", size, h)
        return PinningField(a=ScalarField(grid, a), spec=spec, inclusion_centers=[])

    mi = np.round(grid.X / spec.delta)
    mj = np.round(grid.Y / spec.delta)
    cx, cy = mi * spec.delta, mj * spec.delta
    retained = _cells_inside(grid.domain, cx, cy, spec.delta)
    pinned = retained & spec.omega.contains((grid.X - cx) / size, (grid.Y - cy) / size)
    a[pinned] = spec.b

    xmin, xmax, ymin, ymax = grid.domain.bounding_box()
    ms = np.arange(np.floor(xmin / spec.delta), np.ceil(xmax / spec.delta) + 1)
    ns = np.arange(np.floor(ymin / spec.delta), np.ceil(ymax / spec.delta) + 1)
    MX, MY = np.meshgrid(ms * spec.delta, ns * spec.delta, indexing="ij")
    keep = _cells_inside(grid.domain, MX, MY, spec.delta)
    centers = [(float(x), float(y)) for x, y in zip(MX[keep], MY[keep])]
    logger.info("pinning term: %d inclusions of size %.3g, b=%.3g", len(centers), size, spec.b)
    return PinningField(a=ScalarField(grid, a), spec=spec, inclusion_centers=centers)


def uniform_pinning(grid, value=1.0):
    """Constant pinning term, no inclusions."""
    return PinningField(a=ScalarField(grid, np.full(grid.shape, float(value))))


def _as_a(a):
    return a.a if isinstance(a, PinningField) else a


def _link_diffs(values):
    return values[1:, :] - values[:-1, :], values[:, 1:] - values[:, :-1]


def _energy_real(U, a, eps, grid):
    wx, wy = grid.link_weights
    dx, dy = _link_diffs(U)
    kinetic = 0.5 * (np.sum(wx * dx ** 2) + np.sum(wy * dy ** 2))
    potential = np.sum(grid.node_mass * (a ** 2 - U ** 2) ** 2) / (4 * eps ** 2)
    return kinetic + potential


def _gradient(U, a, eps, L, nodes, m):
    return L @ U[nodes] - m / eps ** 2 * U[nodes] * (a[nodes] ** 2 - U[nodes] ** 2)


def _line_search(U, step, slope, energy, a, eps, grid, L, residual, t_min=1e-10):
    """Backtrack along step; the accepted trial never raises the energy beyond round-off.

    Returns (trial, trial_energy) or None when no admissible step exists.
    """
    nodes = grid.active
    m = grid.node_mass[nodes]
    noise = 64 * np.finfo(float).eps * max(1.0, abs(energy))
    t = 1.0
    while t > t_min:
        trial = U.copy()
        trial[nodes] += t * step
        trial_energy = _energy_real(trial, a, eps, grid)
        if trial_energy <= energy + 1e-4 * t * slope:
            return trial, trial_energy
        if trial_energy <= energy + noise:
            trial_residual = float(np.max(np.abs(_gradient(trial, a, eps, L, nodes, m))) / grid.h ** 2)
            if trial_residual < residual:
                return trial, trial_energy
        t *= 0.5
    return None


def lm_residual(U: ScalarField, a, epsilon):
    """Max-norm of the discrete Euler-Lagrange equation, scaled by the full-cell area."""
    grid = U.grid
    a = _as_a(a).values
    wx, wy = grid.link_weights
    L, _ = graph_laplacian(grid, grid.active, wx, wy)
    nodes = grid.active
    G = _gradient(U.values, a, epsilon, L, nodes, grid.node_mass[nodes])
    return float(np.max(np.abs(G)) / grid.h ** 2)


def solve_lassoued_mironescu(pinning, epsilon, tol=1e-8, flow_steps=20, max_newton=50, verbose=False):
    """Minimize E over real U with natural boundary conditions: a short gradient flow, then damped Newton."""
    if not epsilon > 0:
        raise ConfigError("pinning.epsilon", f"must be positive, got {epsilon}")
    a_field = _as_a(pinning)
    grid = a_field.grid
    a = a_field.values
    nodes = grid.active
    m = grid.node_mass[nodes]
    wx, wy = grid.link_weights
    L, _ = graph_laplacian(grid, nodes, wx, wy)
    scale = grid.h ** 2

    U = a.copy()
    energy = _energy_real(U, a, epsilon, grid)
    tau = 0.2 * min(grid.h ** 2, epsilon ** 2)
    for _ in range(flow_steps):
        G = _gradient(U, a, epsilon, L, nodes, m)
        if np.max(np.abs(G)) / scale <= tol:
            break
        trial = U.copy()
        trial[nodes] -= tau * G / m
        trial_energy = _energy_real(trial, a, epsilon, grid)
        if trial_energy <= energy:
            U, energy = trial, trial_energy
            tau *= 1.5
        else:
            tau *= 0.5

    for it in tqdm(range(max_newton), disable=not verbose, desc="LM Newton"):
        G = _gradient(U, a, epsilon, L, nodes, m)
        residual = float(np.max(np.abs(G)) / scale)
        if residual <= tol:
            break
        Un = U[nodes]
        H = L + sparse.diags(m / epsilon ** 2 * (3 * Un ** 2 - a[nodes] ** 2))
        step = spsolve(sparse.csc_matrix(H), -G)
        slope = float(G @ step)
        if slope >= 0:
            step, slope = -G / m * tau, -float(G @ (G / m)) * tau
        accepted = _line_search(U, step, slope, energy, a, epsilon, grid, L, residual)
        if accepted is None:
            logger.debug("LM Newton iteration %d: no energy-decreasing step at residual %.3e", it, residual)
            break
        U, energy = accepted
        logger.debug("LM Newton iteration %d: residual %.3e", it, residual)

    G = _gradient(U, a, epsilon, L, nodes, m)
    residual = float(np.max(np.abs(G)) / scale)
    if residual > tol:
        raise ConvergenceError(f"Lassoued-Mironescu solve did not converge in {max_newton} Newton steps", residual)

    U[~nodes] = 1.0
    lo, hi = float(U[nodes].min()), float(U[nodes].max())
    if lo < a[nodes].min() - 1e-8 or hi > 1 + 1e-8:
        logger.warning("U leaves [b, 1]: range [%.6f, %.6f]", lo, hi)
    logger.info("LM solve: residual %.2e, U in [%.4f, %.4f]", residual, lo, hi)
    return ScalarField(grid, U)


def energy_E(u, a, epsilon):
    grid = u.grid
    a = _as_a(a).values
    values = u.values
    wx, wy = grid.link_weights
    dx, dy = _link_diffs(values)
    kinetic = 0.5 * (np.sum(wx * np.abs(dx) ** 2) + np.sum(wy * np.abs(dy) ** 2))
    potential = np.sum(grid.node_mass * (a ** 2 - np.abs(values) ** 2) ** 2) / (4 * epsilon ** 2)
    return float(kinetic + potential)


def energy_F(v, U, epsilon):
    """Weighted energy of the decoupled unknown; link weights carry U_a U_b."""
    grid = v.grid
    u = U.values
    values = v.values
    wx, wy = grid.link_weights
    dx, dy = _link_diffs(values)
    ux = u[1:, :] * u[:-1, :]
    uy = u[:, 1:] * u[:, :-1]
    kinetic = 0.5 * (np.sum(wx * ux * np.abs(dx) ** 2) + np.sum(wy * uy * np.abs(dy) ** 2))
    potential = np.sum(grid.node_mass * u ** 4 * (1 - np.abs(values) ** 2) ** 2) / (4 * epsilon ** 2)
    return float(kinetic + potential)


def decoupling_residual(U, v, a, epsilon):
    total = energy_E(v.with_values(U.values * v.values), a, epsilon)
    split = energy_E(U, a, epsilon) + energy_F(v, U, epsilon)
    return abs(total - split) / max(1.0, total)
