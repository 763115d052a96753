import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd
import torch
from tqdm import tqdm

from errors import FlowStall
from fields import LinkField
from module import GLModule
from scheduler import WarmupCosineStep
from .gauge import coulomb_project

__all__ = ['FlowResult', 'minimize']

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FlowResult:
    state: object
    trace: pd.DataFrame
    converged: bool
    sweeps: int


def _inverse(weights):
    return torch.as_tensor(np.where(weights > 0, 1.0 / np.where(weights > 0, weights, 1.0), 0.0),
                           dtype=torch.float64)


def _clip(module):
    modulus = torch.sqrt(module.vr ** 2 + module.vi ** 2)
    factor = torch.clamp(modulus, min=1.0)
    module.vr.div_(factor)
    module.vi.div_(factor)


def _step(module, params, scales, dt, cap, energy, dt_min, clip=False):
    """One preconditioned explicit step with backtracking; returns the new energy and the next step size."""
    module.zero_grad()
    module()["total"].backward()
    grads = [p.grad.detach().clone() * s for p, s in zip(params, scales)]
    saved = [p.detach().clone() for p in params]
    while True:
        with torch.no_grad():
            for p, start, g in zip(params, saved, grads):
                p.copy_(start - dt * g)
            if clip:
                _clip(module)
            trial = float(module()["total"])
        if trial <= energy:
            return trial, min(dt * 1.25, cap)
        dt *= 0.5
        if dt < dt_min:
            with torch.no_grad():
                for p, start in zip(params, saved):
                    p.copy_(start)
            if abs(trial - energy) <= 1e-12 * abs(energy):
                return energy, dt_min
            raise FlowStall(f"time step fell below {dt_min:.3g} with energy {energy:.10g}")


def _reproject(module):
    grid = module.grid
    A = LinkField(grid, module.ax.detach().numpy().copy(), module.ay.detach().numpy().copy())
    A_new, phi = coulomb_project(A)
    v = module.v_numpy() * np.exp(1j * phi.values)
    with torch.no_grad():
        module.ax.copy_(torch.as_tensor(A_new.ax))
        module.ay.copy_(torch.as_tensor(A_new.ay))
        module.vr.copy_(torch.as_tensor(np.real(v)))
        module.vi.copy_(torch.as_tensor(np.imag(v)))


def _state_of(module, state0):
    v, A = module.to_fields()
    return state0.replace(v=v, A=A)


def minimize(state0, schedule=None, max_sweeps=2000, tol=1e-9, dt_min=None, reproject_every=10,
             verbose=False) -> FlowResult:
    """Alternating preconditioned gradient steps in v and A, energy monotone by backtracking.

    Stops when the energy decrease over a sweep is at most tol relative to the energy.
    """
    grid = state0.grid
    if schedule is None:
        schedule = WarmupCosineStep.for_grid(grid, state0.epsilon, max_steps=max_sweeps)
    if dt_min is None:
        dt_min = 1e-8 * schedule.base_step

    module = GLModule.from_state(state0)
    node_scale = _inverse(grid.node_mass)
    wx, wy = grid.link_weights
    link_x, link_y = _inverse(grid.h ** 2 * wx), _inverse(grid.h ** 2 * wy)

    with torch.no_grad():
        _clip(module)
        energy = float(module()["total"])
    dt_v = dt_A = schedule.cap(0)
    rows = [{"sweep": 0, "energy": energy, "min_abs_v": _min_abs(module, grid), "dt_v": dt_v, "dt_A": dt_A}]
    converged = False
    sweep = 0
    try:
        for sweep in tqdm(range(1, max_sweeps + 1), disable=not verbose, desc="GL flow"):
            start = energy
            cap = schedule.cap(sweep)
            energy, dt_v = _step(module, [module.vr, module.vi], [node_scale, node_scale], min(dt_v, cap), cap,
                                 energy, dt_min, clip=True)
            energy, dt_A = _step(module, [module.ax, module.ay], [link_x, link_y], min(dt_A, cap), cap, energy,
                                 dt_min)
            if reproject_every and sweep % reproject_every == 0:
                _reproject(module)
                with torch.no_grad():
                    energy = float(module()["total"])
            rows.append({"sweep": sweep, "energy": energy, "min_abs_v": _min_abs(module, grid), "dt_v": dt_v,
                         "dt_A": dt_A})
            if start - energy <= tol * abs(energy):
                converged = True
                break
    except FlowStall as e:
        raise FlowStall(str(e), state=_state_of(module, state0), trace=pd.DataFrame(rows))

    _reproject(module)
    trace = pd.DataFrame(rows)
    logger.info("flow %s after %d sweeps, energy %.8g, min|v| %.4f", "converged" if converged else "stopped",
                sweep, energy, rows[-1]["min_abs_v"])
    return FlowResult(state=_state_of(module, state0), trace=trace, converged=converged, sweeps=sweep)


def _min_abs(module, grid):
    with torch.no_grad():
        modulus = torch.sqrt(module.vr ** 2 + module.vi ** 2).numpy()
    return float(modulus[grid.mask].min())
