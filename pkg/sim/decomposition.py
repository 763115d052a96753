import logging

import numpy as np

from fields import ScalarField, solve_dirichlet
from theory.london import tilde_V
from theory.pinning import energy_F
from .gauge import energy_full

__all__ = ['stream_of', 'decomposition_check']

logger = logging.getLogger(__name__)


def stream_of(A):
    """xi with Lap xi = curl A and xi = 0 on the boundary, so that A = perp grad xi in Coulomb gauge."""
    return solve_dirichlet("poisson", rhs=-A.curl_nodes().values, boundary=0.0, grid=A.grid)


def decomposition_check(state, config, london):
    """Compare F(v, A) - h_ex^2 J0 with F(v) + 2 pi h_ex sum d_i xi0(a_i) + V(zeta), zeta = xi - h_ex xi0."""
    h_ex = state.h_ex
    total = energy_full(state)["total"]
    xi = stream_of(state.A)
    zeta = ScalarField(state.grid, xi.values - h_ex * london.xi0.values)
    points, degrees = list(config.points), list(config.degrees)

    free = energy_F(state.v, state.U, state.epsilon)
    pinned = 2 * np.pi * h_ex * sum(d * london.xi0.at(*p) for p, d in zip(points, degrees))
    v_general, _ = tilde_V(zeta, points, degrees)
    lhs = total - h_ex ** 2 * london.J0
    rhs = free + pinned + v_general
    residual = abs(lhs - rhs)
    report = {
        "energy": total,
        "lhs": lhs,
        "rhs": rhs,
        "F_v": free,
        "pinning_term": pinned,
        "V_zeta": v_general,
        "abs_residual": residual,
        "rel_residual": residual / max(abs(total), 1e-300),
    }
    logger.info("decomposition residual %.3e (relative %.3e)", residual, report["rel_residual"])
    return report
