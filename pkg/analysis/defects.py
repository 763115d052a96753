import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import ndimage

from errors import ContourError

__all__ = ['Defect', 'square_contour', 'degree', 'detect_defects', 'separate_disks']

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Defect:
    center: Tuple[float, float]
    radius: float
    degree: int
    min_abs: float
    touches_boundary: bool = False
    inclusion_center: Optional[Tuple[float, float]] = None
    micro_coord: Optional[Tuple[float, float]] = None
    inside_inclusion: Optional[bool] = None

    def to_dict(self):
        return {
            "center": list(self.center),
            "radius": self.radius,
            "degree": self.degree,
            "min_abs": self.min_abs,
            "touches_boundary": self.touches_boundary,
            "inclusion_center": list(self.inclusion_center) if self.inclusion_center is not None else None,
            "micro_coord": list(self.micro_coord) if self.micro_coord is not None else None,
            "inside_inclusion": self.inside_inclusion,
        }


def square_contour(grid, center, radius):
    """Counter-clockwise node loop of the square with half-side ceil(radius / h) around the node nearest center."""
    i0, j0 = grid.node_of(*center)
    k = max(1, int(np.ceil(radius / grid.h)))
    if i0 - k < 0 or j0 - k < 0 or i0 + k >= grid.nx or j0 + k >= grid.ny:
        raise ContourError(f"contour of radius {radius} around {tuple(center)} leaves the grid")
    loop = [(i, j0 - k) for i in range(i0 - k, i0 + k)]
    loop += [(i0 + k, j) for j in range(j0 - k, j0 + k)]
    loop += [(i, j0 + k) for i in range(i0 + k, i0 - k, -1)]
    loop += [(i0 - k, j) for j in range(j0 + k, j0 - k, -1)]
    return np.array(loop)


def degree(v, contour, min_modulus=0.1, max_residue=0.2):
    """Winding number of v along a closed node loop from principal-branch phase increments."""
    contour = np.asarray(contour)
    values = v.values[contour[:, 0], contour[:, 1]]
    modulus = np.abs(values)
    if modulus.min() < min_modulus:
        raise ContourError(f"|v| = {modulus.min():.3g} on the contour, below {min_modulus}")
    increments = np.angle(np.roll(values, -1) / values)
    winding = increments.sum() / (2 * np.pi)
    rounded = int(np.rint(winding))
    if abs(winding - rounded) > max_residue:
        raise ContourError(f"winding {winding:.3f} is not close to an integer")
    return rounded


def _on_boundary(grid, nodes):
    mask = grid.mask
    for i, j in nodes:
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            ii, jj = i + di, j + dj
            if not (0 <= ii < grid.nx and 0 <= jj < grid.ny) or not mask[ii, jj]:
                return True
    return False


def _component_degree(v, grid, center, radius, others):
    r = 3 * radius
    if others:
        r = min(r, 0.5 * min(np.hypot(center[0] - x, center[1] - y) for x, y in others))
    r = max(r, 2 * grid.h)
    for scale in (1.0, 1.5, 2.0):
        try:
            loop = square_contour(grid, center, r * scale)
        except ContourError:
            break
        if not grid.active[loop[:, 0], loop[:, 1]].all():
            break
        try:
            return degree(v, loop), True
        except ContourError:
            continue
    return 0, False


def detect_defects(v, threshold=None, pinning=None):
    """Connected components (8-connectivity) of {|v| < threshold} on the interior, with degrees.

    threshold defaults to b / 2 of the pinning field, 0.25 without one. Components touching the boundary, or
    whose contour cannot be closed inside the domain, are flagged and get degree 0.
    """
    if threshold is None:
        threshold = pinning.b / 2 if pinning is not None else 0.25
    grid = v.grid
    modulus = np.abs(v.values)
    low = (modulus < threshold) & grid.mask
    labels, count = ndimage.label(low, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        return []

    parts = []
    for k in range(1, count + 1):
        nodes = np.argwhere(labels == k)
        m = modulus[nodes[:, 0], nodes[:, 1]]
        i, j = nodes[int(np.argmin(m))]
        center = (float(grid.X[i, j]), float(grid.Y[i, j]))
        extent = np.hypot(grid.X[nodes[:, 0], nodes[:, 1]] - center[0], grid.Y[nodes[:, 0], nodes[:, 1]] - center[1])
        parts.append((nodes, center, float(max(extent.max(), grid.h)), float(m.min())))

    defects = []
    for idx, (nodes, center, radius, min_abs) in enumerate(parts):
        touches = _on_boundary(grid, nodes)
        others = [p[1] for n, p in enumerate(parts) if n != idx]
        if touches:
            deg, ok = 0, False
        else:
            deg, ok = _component_degree(v, grid, center, radius, others)
            touches = not ok
        inclusion = micro = inside = None
        if pinning is not None and pinning.inclusion_centers:
            inclusion, _ = pinning.nearest_inclusion(center)
            size = pinning.spec.inclusion_size
            micro = ((center[0] - inclusion[0]) / size, (center[1] - inclusion[1]) / size)
            inside = pinning.inside_inclusion(center)
        defects.append(Defect(center=center, radius=radius, degree=int(deg), min_abs=min_abs,
                              touches_boundary=bool(touches), inclusion_center=inclusion, micro_coord=micro,
                              inside_inclusion=inside))
    logger.info("detected %d defect(s), degrees %s", len(defects), [d.degree for d in defects])
    return defects


def separate_disks(centers, eta, P):
    """Merge disks B(x_i, eta) until the kept centers are (P - 1) kappa eta apart.

    Returns the kept indices J and kappa in {P^0, ..., P^(N-1)} with every B(x_i, eta) inside some
    B(x_j, kappa eta), j in J.
    """
    if P < 2 or not eta > 0:
        raise ValueError(f"need P >= 2 and eta > 0, got P={P}, eta={eta}")
    x = np.asarray(centers, dtype=float).reshape(-1, 2)
    J = list(range(len(x)))
    kappa = 1.0
    while len(J) > 1:
        sub = x[J]
        dist = np.hypot(sub[:, None, 0] - sub[None, :, 0], sub[:, None, 1] - sub[None, :, 1])
        np.fill_diagonal(dist, np.inf)
        a, b = np.unravel_index(np.argmin(dist), dist.shape)
        if dist[a, b] >= (P - 1) * kappa * eta:
            break
        J.pop(max(a, b))
        kappa *= P

    if len(x):
        cover = np.hypot(x[:, None, 0] - x[J][None, :, 0], x[:, None, 1] - x[J][None, :, 1]).min(axis=1) + eta
        if np.any(cover > kappa * eta * (1 + 1e-12)):
            raise RuntimeError("disk merging lost the covering property")
        kept = x[J]
        gap = np.hypot(kept[:, None, 0] - kept[None, :, 0], kept[:, None, 1] - kept[None, :, 1])
        np.fill_diagonal(gap, np.inf)
        if gap.min() < (P - 1) * kappa * eta * (1 - 1e-12):
            raise RuntimeError("disk merging left kept centers too close")
    return J, kappa
