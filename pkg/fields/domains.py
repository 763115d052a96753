from dataclasses import dataclass
from typing import Tuple

import numpy as np

from errors import DomainError

__all__ = ['DomainSpec', 'Disk', 'Ellipse', 'Rectangle']


@dataclass(frozen=True)
class DomainSpec:
    """Analytic description of a bounded convex domain. The level set is negative inside."""

    center: Tuple[float, float] = (0.0, 0.0)

    def level_set(self, x, y):
        raise NotImplementedError

    def contains(self, x, y, tol=0.0):
        return self.level_set(x, y) < -tol

    def bounding_box(self):
        raise NotImplementedError

    def area(self):
        raise NotImplementedError

    def diameter(self):
        xmin, xmax, ymin, ymax = self.bounding_box()
        return float(np.hypot(xmax - xmin, ymax - ymin))

    def normal(self, x, y):
        raise NotImplementedError

    def ray_distance(self, x, y, dx, dy):
        """Distance from an inside point (x, y) to the boundary along the unit direction (dx, dy)."""
        raise NotImplementedError

    def scaled(self, factor, center):
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Ellipse(DomainSpec):
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"ellipse semi-axes must be positive, got a={self.a}, b={self.b}")

    def level_set(self, x, y):
        X = (np.asarray(x, dtype=float) - self.center[0]) / self.a
        Y = (np.asarray(y, dtype=float) - self.center[1]) / self.b
        return (X ** 2 + Y ** 2 - 1.0) * min(self.a, self.b) / 2.0

    def bounding_box(self):
        cx, cy = self.center
        return cx - self.a, cx + self.a, cy - self.b, cy + self.b

    def area(self):
        return float(np.pi * self.a * self.b)

    def normal(self, x, y):
        nx = (np.asarray(x, dtype=float) - self.center[0]) / self.a ** 2
        ny = (np.asarray(y, dtype=float) - self.center[1]) / self.b ** 2
        norm = np.hypot(nx, ny)
        norm = np.where(norm > 0, norm, 1.0)
        return nx / norm, ny / norm

    def ray_distance(self, x, y, dx, dy):
        X = (np.asarray(x, dtype=float) - self.center[0]) / self.a
        Y = (np.asarray(y, dtype=float) - self.center[1]) / self.b
        DX = np.asarray(dx, dtype=float) / self.a
        DY = np.asarray(dy, dtype=float) / self.b
        qa = DX ** 2 + DY ** 2
        qb = 2.0 * (X * DX + Y * DY)
        qc = X ** 2 + Y ** 2 - 1.0
        disc = np.maximum(qb ** 2 - 4.0 * qa * qc, 0.0)
        return (-qb + np.sqrt(disc)) / (2.0 * qa)

    def scaled(self, factor, center):
        return Ellipse(center=(float(center[0]), float(center[1])), a=self.a * factor, b=self.b * factor)

    def to_dict(self):
        return {"shape": "ellipse", "a": self.a, "b": self.b, "center": list(self.center)}


@dataclass(frozen=True)
class Disk(Ellipse):
    radius: float = 1.0

    def __init__(self, radius=1.0, center=(0.0, 0.0)):
        if not radius > 0:
            raise DomainError(f"disk radius must be positive, got {radius}")
        object.__setattr__(self, "radius", float(radius))
        object.__setattr__(self, "a", float(radius))
        object.__setattr__(self, "b", float(radius))
        object.__setattr__(self, "center", (float(center[0]), float(center[1])))

    def scaled(self, factor, center):
        return Disk(radius=self.radius * factor, center=center)

    def to_dict(self):
        return {"shape": "disk", "radius": self.radius, "center": list(self.center)}


@dataclass(frozen=True)
class Rectangle(DomainSpec):
    width: float = 1.0
    height: float = 1.0

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise DomainError(f"rectangle sides must be positive, got {self.width}x{self.height}")

    def level_set(self, x, y):
        X = np.abs(np.asarray(x, dtype=float) - self.center[0]) - self.width / 2.0
        Y = np.abs(np.asarray(y, dtype=float) - self.center[1]) - self.height / 2.0
        return np.maximum(X, Y)

    def bounding_box(self):
        cx, cy = self.center
        return cx - self.width / 2.0, cx + self.width / 2.0, cy - self.height / 2.0, cy + self.height / 2.0

    def area(self):
        return float(self.width * self.height)

    def normal(self, x, y):
        X = np.asarray(x, dtype=float) - self.center[0]
        Y = np.asarray(y, dtype=float) - self.center[1]
        on_x = np.abs(X) - self.width / 2.0 >= np.abs(Y) - self.height / 2.0
        return np.where(on_x, np.sign(X), 0.0), np.where(on_x, 0.0, np.sign(Y))

    def ray_distance(self, x, y, dx, dy):
        xmin, xmax, ymin, ymax = self.bounding_box()
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        dx, dy = np.asarray(dx, dtype=float), np.asarray(dy, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            tx = np.where(dx > 0, (xmax - x) / dx, np.where(dx < 0, (xmin - x) / dx, np.inf))
            ty = np.where(dy > 0, (ymax - y) / dy, np.where(dy < 0, (ymin - y) / dy, np.inf))
        return np.minimum(tx, ty)

    def scaled(self, factor, center):
        return Rectangle(center=(float(center[0]), float(center[1])), width=self.width * factor,
                         height=self.height * factor)

    def to_dict(self):
        return {"shape": "rectangle", "width": self.width, "height": self.height, "center": list(self.center)}
