import numpy as np

from .grid import ScalarField, VectorField, neighbor

__all__ = ['gradient', 'perp_gradient', 'divergence', 'curl', 'laplacian', 'partial']


def _shift(values, axis, step):
    return neighbor(values, step if axis == 0 else 0, step if axis == 1 else 0)


def _avail_shift(avail, axis, step):
    return neighbor(avail, step if axis == 0 else 0, step if axis == 1 else 0, fill=False)


def partial(values, grid, axis, avail=None):
    """First derivative along `axis`: centered where possible, one-sided second order otherwise."""
    if avail is None:
        avail = grid.active
    h = grid.h
    up, down = _shift(values, axis, 1), _shift(values, axis, -1)
    up2, down2 = _shift(values, axis, 2), _shift(values, axis, -2)
    has_up, has_down = _avail_shift(avail, axis, 1), _avail_shift(avail, axis, -1)
    has_up2, has_down2 = _avail_shift(avail, axis, 2), _avail_shift(avail, axis, -2)

    out = np.zeros_like(values)
    central = avail & has_up & has_down
    out[central] = (up - down)[central] / (2 * h)

    fwd = avail & has_up & ~has_down
    fwd2 = fwd & has_up2
    out[fwd2] = (-3 * values + 4 * up - up2)[fwd2] / (2 * h)
    fwd1 = fwd & ~has_up2
    out[fwd1] = (up - values)[fwd1] / h

    bwd = avail & has_down & ~has_up
    bwd2 = bwd & has_down2
    out[bwd2] = (3 * values - 4 * down + down2)[bwd2] / (2 * h)
    bwd1 = bwd & ~has_down2
    out[bwd1] = (values - down)[bwd1] / h
    return out


def _second(values, grid, axis, avail):
    h2 = grid.h ** 2
    up, down = _shift(values, axis, 1), _shift(values, axis, -1)
    up2, down2 = _shift(values, axis, 2), _shift(values, axis, -2)
    has_up, has_down = _avail_shift(avail, axis, 1), _avail_shift(avail, axis, -1)
    has_up2, has_down2 = _avail_shift(avail, axis, 2), _avail_shift(avail, axis, -2)

    out = np.zeros_like(values)
    central = avail & has_up & has_down
    out[central] = (up - 2 * values + down)[central] / h2
    fwd = avail & ~has_down & has_up & has_up2
    out[fwd] = (values - 2 * up + up2)[fwd] / h2
    bwd = avail & ~has_up & has_down & has_down2
    out[bwd] = (values - 2 * down + down2)[bwd] / h2
    return out


def gradient(field: ScalarField) -> VectorField:
    grid = field.grid
    return VectorField(grid, np.stack([partial(field.values, grid, 0), partial(field.values, grid, 1)]))


def perp_gradient(field: ScalarField) -> VectorField:
    return gradient(field).perp()


def divergence(field: VectorField) -> ScalarField:
    grid = field.grid
    return ScalarField(grid, partial(field.values[0], grid, 0) + partial(field.values[1], grid, 1))


def curl(field: VectorField) -> ScalarField:
    grid = field.grid
    return ScalarField(grid, partial(field.values[1], grid, 0) - partial(field.values[0], grid, 1))


def laplacian(field: ScalarField) -> ScalarField:
    grid = field.grid
    avail = grid.active
    return ScalarField(grid, _second(field.values, grid, 0, avail) + _second(field.values, grid, 1, avail))
