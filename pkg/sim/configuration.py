import logging
from dataclasses import dataclass, replace as _replace

import numpy as np

from errors import DomainError
from fields import ComplexField, LinkField, ScalarField
from theory.london import solve_zeta
from theory.renorm import VortexConfig, canonical_phase

__all__ = ['GLState', 'core_profile', 'build_test_configuration', 'random_state']

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GLState:
    v: ComplexField
    A: LinkField
    h_ex: float
    U: ScalarField
    epsilon: float

    @property
    def grid(self):
        return self.v.grid

    def replace(self, **changes):
        return _replace(self, **changes)

    def min_abs_v(self):
        return float(np.abs(self.v.interior()).min())

    def max_abs_v(self):
        return float(np.abs(self.v.interior()).max())


def core_profile(t):
    """Vortex core modulus t / sqrt(t^2 + 2)."""
    return t / np.sqrt(t ** 2 + 2.0)


def build_test_configuration(config: VortexConfig, london, U, epsilon, h_ex, pinning=None) -> GLState:
    """Canonical harmonic phase with cores of size eps at each vortex, potential h_ex curl^-1 xi0 plus zeta."""
    grid = london.grid
    if any(d != 1 for d in config.degrees):
        raise DomainError(f"test configurations take degree-one vortices only, got {list(config.degrees)}")
    if len(config) > 1 and config.min_separation() < 8 * epsilon:
        raise DomainError(f"vortices closer than 8 eps = {8 * epsilon:.3g}")
    for p in config.points:
        if not bool(grid.domain.contains(*p)):
            raise DomainError(f"vortex {p} lies outside the domain")
        if pinning is not None and pinning.inclusion_centers and not pinning.inside_inclusion(p):
            raise DomainError(f"vortex {p} is not inside an inclusion")

    stream = h_ex * london.xi0.values
    if len(config):
        v = canonical_phase(config, grid).values
        for zx, zy in config.points:
            v = v * core_profile(np.hypot(grid.X - zx, grid.Y - zy) / epsilon)
        stream = stream + solve_zeta(config.points, config.degrees, grid).values
    else:
        v = np.ones(grid.shape, dtype=complex)
    A = LinkField.from_stream(ScalarField(grid, stream))
    logger.info("test configuration with %d vortices at h_ex=%.4g", len(config), h_ex)
    return GLState(v=ComplexField(grid, v), A=A, h_ex=float(h_ex), U=U, epsilon=float(epsilon))


def random_state(grid, U, epsilon, h_ex, rng, london=None, modes=4, amplitude=0.3):
    """Smooth random initial state with |v| <= 1."""
    xmin, xmax, ymin, ymax = grid.domain.bounding_box()
    scale = max(xmax - xmin, ymax - ymin)
    phase = np.zeros(grid.shape)
    modulus = np.ones(grid.shape)
    for _ in range(modes):
        kx, ky = rng.normal(size=2) * 2 * np.pi / scale
        phase += rng.normal() * np.cos(kx * grid.X + ky * grid.Y + rng.uniform(0, 2 * np.pi))
        modulus -= amplitude / modes * (1 + np.sin(kx * grid.Y - ky * grid.X + rng.uniform(0, 2 * np.pi))) / 2
    v = np.clip(modulus, 0.0, 1.0) * np.exp(1j * phase)
    stream = rng.normal(scale=0.05) * np.sin(np.pi * (grid.X - xmin) / (xmax - xmin)) \
        * np.sin(np.pi * (grid.Y - ymin) / (ymax - ymin))
    if london is not None:
        stream = stream + h_ex * london.xi0.values
    A = LinkField.from_stream(ScalarField(grid, stream))
    return GLState(v=ComplexField(grid, v), A=A, h_ex=float(h_ex), U=U, epsilon=float(epsilon))
