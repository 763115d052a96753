from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy import ndimage

from errors import GridError
from .domains import DomainSpec

__all__ = ['Grid', 'build_grid', 'ScalarField', 'ComplexField', 'VectorField', 'LinkField', 'DIRECTIONS',
           'neighbor']

# +x, -x, +y, -y
DIRECTIONS = ((1, 0), (-1, 0), (0, 1), (0, -1))

_PAD = 2
_SUBSAMPLES = 8


def neighbor(values, di, dj, fill=0.0):
    """out[i, j] = values[i + di, j + dj], `fill` beyond the array edge."""
    out = np.full_like(values, fill)
    nx, ny = values.shape[-2:]
    src_i = slice(max(di, 0), nx + min(di, 0))
    dst_i = slice(max(-di, 0), nx + min(-di, 0))
    src_j = slice(max(dj, 0), ny + min(dj, 0))
    dst_j = slice(max(-dj, 0), ny + min(-dj, 0))
    out[..., dst_i, dst_j] = values[..., src_i, src_j]
    return out


@dataclass(frozen=True, eq=False)
class Grid:
    domain: DomainSpec
    n: int
    nx: int
    ny: int
    h: float
    origin: Tuple[float, float]
    mask: np.ndarray
    theta: np.ndarray
    cell_frac: np.ndarray

    @cached_property
    def X(self):
        return self.origin[0] + self.h * np.arange(self.nx)[:, None] * np.ones((1, self.ny))

    @cached_property
    def Y(self):
        return self.origin[1] + self.h * np.ones((self.nx, 1)) * np.arange(self.ny)[None, :]

    @property
    def shape(self):
        return self.nx, self.ny

    @cached_property
    def node_mass(self):
        f = np.zeros((self.nx + 1, self.ny + 1))
        f[1:-1, 1:-1] = self.cell_frac
        return self.h ** 2 / 4.0 * (f[:-1, :-1] + f[1:, :-1] + f[:-1, 1:] + f[1:, 1:])

    @cached_property
    def link_weights(self):
        f = np.zeros((self.nx - 1, self.ny + 1))
        f[:, 1:-1] = self.cell_frac
        wx = 0.5 * (f[:, :-1] + f[:, 1:])
        g = np.zeros((self.nx + 1, self.ny - 1))
        g[1:-1, :] = self.cell_frac
        wy = 0.5 * (g[:-1, :] + g[1:, :])
        return wx, wy

    @cached_property
    def cell_area(self):
        return self.cell_frac * self.h ** 2

    @cached_property
    def active(self):
        return self.node_mass > 0

    @cached_property
    def ghost(self):
        return self.active & ~self.mask

    @cached_property
    def boundary_nodes(self):
        return np.argwhere(self.ghost)

    @cached_property
    def boundary_normals(self):
        idx = self.boundary_nodes
        nx, ny = self.domain.normal(self.X[idx[:, 0], idx[:, 1]], self.Y[idx[:, 0], idx[:, 1]])
        return np.stack([nx, ny], axis=-1)

    @cached_property
    def interior_index(self):
        index = -np.ones(self.shape, dtype=np.int64)
        index[self.mask] = np.arange(int(self.mask.sum()))
        return index

    @property
    def n_interior(self):
        return int(self.mask.sum())

    def interior_area(self):
        return self.n_interior * self.h ** 2

    def quadrature_area(self):
        return float(self.cell_area.sum())

    def locate(self, x, y):
        """Lower-left node index and fractional offsets of a point."""
        fx = (x - self.origin[0]) / self.h
        fy = (y - self.origin[1]) / self.h
        i = int(np.floor(fx))
        j = int(np.floor(fy))
        if not (0 <= i < self.nx - 1 and 0 <= j < self.ny - 1):
            raise GridError(f"point ({x}, {y}) lies outside the grid")
        return i, j, fx - i, fy - j

    def bilinear(self, x, y):
        i, j, tx, ty = self.locate(x, y)
        nodes = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]
        weights = [(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty]
        return nodes, np.array(weights)

    def node_of(self, x, y):
        i = int(round((x - self.origin[0]) / self.h))
        j = int(round((y - self.origin[1]) / self.h))
        return min(max(i, 0), self.nx - 1), min(max(j, 0), self.ny - 1)

    def describe(self):
        return {"nx": self.nx, "ny": self.ny, "h": self.h, "origin": list(self.origin), "n": self.n,
                "interior_nodes": self.n_interior, "area": self.quadrature_area()}


def _cell_fractions(spec, X, Y, mask, h):
    interior_corner = mask[:-1, :-1] | mask[1:, :-1] | mask[:-1, 1:] | mask[1:, 1:]
    full = mask[:-1, :-1] & mask[1:, :-1] & mask[:-1, 1:] & mask[1:, 1:]
    frac = full.astype(float)

    cut = np.argwhere(interior_corner & ~full)
    if len(cut):
        offsets = (np.arange(_SUBSAMPLES) + 0.5) / _SUBSAMPLES * h
        ox, oy = np.meshgrid(offsets, offsets, indexing="ij")
        px = X[cut[:, 0], cut[:, 1]][:, None, None] + ox[None]
        py = Y[cut[:, 0], cut[:, 1]][:, None, None] + oy[None]
        sampled = spec.contains(px, py).reshape(len(cut), -1).mean(axis=1)
        frac[cut[:, 0], cut[:, 1]] = np.maximum(sampled, 0.5 / _SUBSAMPLES ** 2)
    return frac


def build_grid(spec: DomainSpec, n: int) -> Grid:
    if n < 16:
        raise GridError(f"resolution must be at least 16, got {n}")
    xmin, xmax, ymin, ymax = spec.bounding_box()
    width, height = xmax - xmin, ymax - ymin
    h = max(width, height) / n
    nx = int(round(width / h)) + 1 + 2 * _PAD
    ny = int(round(height / h)) + 1 + 2 * _PAD
    cx, cy = (xmin + xmax) / 2.0, (ymin + ymax) / 2.0
    origin = (cx - h * (nx - 1) / 2.0, cy - h * (ny - 1) / 2.0)

    X = origin[0] + h * np.arange(nx)[:, None] * np.ones((1, ny))
    Y = origin[1] + h * np.ones((nx, 1)) * np.arange(ny)[None, :]
    mask = spec.contains(X, Y, tol=1e-9 * h)

    _, count = ndimage.label(mask)
    if count != 1:
        raise GridError(f"discretized domain has {count} connected components, refine the grid")

    theta = np.ones((4, nx, ny))
    xs, ys = X[mask], Y[mask]
    for k, (di, dj) in enumerate(DIRECTIONS):
        inside = neighbor(mask, di, dj, fill=False)
        dist = spec.ray_distance(xs, ys, float(di), float(dj)) / h
        t = np.where(inside[mask], 1.0, np.clip(dist, 1e-6, 1.0))
        theta[k][mask] = t

    frac = _cell_fractions(spec, X, Y, mask, h)
    return Grid(domain=spec, n=n, nx=nx, ny=ny, h=h, origin=origin, mask=mask, theta=theta, cell_frac=frac)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")

    kind = "real"

    def at(self, x, y):
        nodes, weights = self.grid.bilinear(x, y)
        return float(sum(w * self.values[n] for n, w in zip(nodes, weights)))

    def interior(self):
        return self.values[self.grid.mask]

    def integrate(self):
        return float(np.sum(self.grid.node_mass * self.values))

    def max_abs(self):
        return float(np.max(np.abs(self.interior())))

    def with_values(self, values):
        return type(self)(self.grid, values)

    def _other(self, other):
        return other.values if isinstance(other, ScalarField) else other

    def __add__(self, other):
        return self.with_values(self.values + self._other(other))

    def __sub__(self, other):
        return self.with_values(self.values - self._other(other))

    def __mul__(self, other):
        return self.with_values(self.values * self._other(other))

    __rmul__ = __mul__
    __radd__ = __add__

    def __neg__(self):
        return self.with_values(-self.values)


@dataclass(frozen=True, eq=False)
class ComplexField(ScalarField):
    kind = "complex"

    def __post_init__(self):
        super(ComplexField, self).__post_init__()
        if not np.iscomplexobj(self.values):
            object.__setattr__(self, "values", self.values.astype(complex))

    def at(self, x, y):
        nodes, weights = self.grid.bilinear(x, y)
        return complex(sum(w * self.values[n] for n, w in zip(nodes, weights)))

    def modulus(self):
        return ScalarField(self.grid, np.abs(self.values))


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (2,) + self.grid.shape:
            raise ValueError(f"vector field shape {self.values.shape} does not match grid {self.grid.shape}")

    def component(self, k):
        return ScalarField(self.grid, self.values[k])

    def perp(self):
        return VectorField(self.grid, np.stack([-self.values[1], self.values[0]]))


@dataclass(frozen=True, eq=False)
class LinkField:
    """Vector field stored on grid links: ax on x-links (nx-1, ny), ay on y-links (nx, ny-1)."""

    grid: Grid
    ax: np.ndarray
    ay: np.ndarray

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.nx - 1, grid.ny)), np.zeros((grid.nx, grid.ny - 1)))

    @classmethod
    def from_nodes(cls, field: VectorField):
        a1, a2 = field.values
        return cls(field.grid, 0.5 * (a1[:-1, :] + a1[1:, :]), 0.5 * (a2[:, :-1] + a2[:, 1:]))

    @classmethod
    def gradient_of(cls, grid, phi):
        return cls(grid, np.diff(phi, axis=0) / grid.h, np.diff(phi, axis=1) / grid.h)

    @classmethod
    def from_stream(cls, field: ScalarField):
        """Discrete perpendicular gradient of a stream function, built on cell centers."""
        grid, psi = field.grid, field.values
        h = grid.h
        pc = 0.25 * (psi[:-1, :-1] + psi[1:, :-1] + psi[:-1, 1:] + psi[1:, 1:])
        padded = np.zeros((grid.nx - 1, grid.ny + 1))
        padded[:, 1:-1] = pc
        ax = -(padded[:, 1:] - padded[:, :-1]) / h
        padded = np.zeros((grid.nx + 1, grid.ny - 1))
        padded[1:-1, :] = pc
        ay = (padded[1:, :] - padded[:-1, :]) / h
        return cls(grid, ax, ay)

    def curl(self):
        """Circulation per unit area on each cell."""
        return (self.ay[1:, :] - self.ay[:-1, :] - self.ax[:, 1:] + self.ax[:, :-1]) / self.grid.h

    def curl_nodes(self):
        grid = self.grid
        c = self.curl() * grid.cell_frac
        f = np.zeros((grid.nx + 1, grid.ny + 1))
        v = np.zeros((grid.nx + 1, grid.ny + 1))
        f[1:-1, 1:-1] = grid.cell_frac
        v[1:-1, 1:-1] = c
        total = f[:-1, :-1] + f[1:, :-1] + f[:-1, 1:] + f[1:, 1:]
        summed = v[:-1, :-1] + v[1:, :-1] + v[:-1, 1:] + v[1:, 1:]
        return ScalarField(grid, np.where(total > 0, summed / np.where(total > 0, total, 1.0), 0.0))

    def divergence(self):
        """Weighted discrete divergence; zero at every active node means Coulomb gauge with A.n = 0."""
        grid = self.grid
        wx, wy = grid.link_weights
        fx = wx * self.ax
        fy = wy * self.ay
        out = np.zeros(grid.shape)
        out[:-1, :] += fx
        out[1:, :] -= fx
        out[:, :-1] += fy
        out[:, 1:] -= fy
        m = grid.node_mass
        return np.where(m > 0, out * grid.h / np.where(m > 0, m, 1.0), 0.0)

    def to_nodes(self):
        grid = self.grid
        a1 = np.zeros(grid.shape)
        a2 = np.zeros(grid.shape)
        a1[1:-1, :] = 0.5 * (self.ax[:-1, :] + self.ax[1:, :])
        a1[0, :], a1[-1, :] = self.ax[0, :], self.ax[-1, :]
        a2[:, 1:-1] = 0.5 * (self.ay[:, :-1] + self.ay[:, 1:])
        a2[:, 0], a2[:, -1] = self.ay[:, 0], self.ay[:, -1]
        return VectorField(grid, np.stack([a1, a2]))

    def max_abs(self):
        wx, wy = self.grid.link_weights
        return float(max(np.max(np.abs(self.ax[wx > 0]), initial=0.0), np.max(np.abs(self.ay[wy > 0]), initial=0.0)))

    def __add__(self, other):
        return LinkField(self.grid, self.ax + other.ax, self.ay + other.ay)

    def __sub__(self, other):
        return LinkField(self.grid, self.ax - other.ax, self.ay - other.ay)

    def __mul__(self, c):
        return LinkField(self.grid, self.ax * c, self.ay * c)

    __rmul__ = __mul__
