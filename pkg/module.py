import numpy as np
import torch
from torch import nn

from fields import ComplexField, LinkField

__all__ = ['GLModule']


def _t(array):
    return torch.as_tensor(np.ascontiguousarray(array), dtype=torch.float64)


class GLModule(nn.Module):
    """Discrete pinned Ginzburg-Landau energy in lattice-gauge form.

    kinetic   1/2 sum_links w U_a U_b |v_b exp(-i h A_ab) - v_a|^2
    potential sum_nodes m (p - q |v|^2)^2 / (4 eps^2), p = q = U^2 for the decoupled energy
    field     1/2 sum_cells area (curl A - h_ex)^2

    With U = 1 and p = a^2 the same module evaluates the unreduced energy of u.
    """

    def __init__(self, grid, v, A, U, epsilon, h_ex, target=None):
        super(GLModule, self).__init__()
        self.grid = grid
        self.epsilon = float(epsilon)
        self.h_ex = float(h_ex)
        u = np.asarray(U)
        wx, wy = grid.link_weights
        self.register_buffer("kx", _t(wx * u[1:, :] * u[:-1, :]))
        self.register_buffer("ky", _t(wy * u[:, 1:] * u[:, :-1]))
        self.register_buffer("mass", _t(grid.node_mass))
        self.register_buffer("area", _t(grid.cell_area))
        self.register_buffer("q", _t(u ** 2))
        self.register_buffer("p", _t(u ** 2 if target is None else target))
        self.vr = nn.Parameter(_t(np.real(v)))
        self.vi = nn.Parameter(_t(np.imag(v)))
        self.ax = nn.Parameter(_t(A.ax))
        self.ay = nn.Parameter(_t(A.ay))

    @classmethod
    def from_state(cls, state):
        return cls(state.grid, state.v.values, state.A, state.U.values, state.epsilon, state.h_ex)

    def v_numpy(self):
        return self.vr.detach().numpy() + 1j * self.vi.detach().numpy()

    def to_fields(self):
        grid = self.grid
        return (ComplexField(grid, self.v_numpy()),
                LinkField(grid, self.ax.detach().numpy().copy(), self.ay.detach().numpy().copy()))

    def _kinetic(self, axis, kernel, a):
        h = self.grid.h
        if axis == 0:
            ra, ia, rb, ib = self.vr[:-1, :], self.vi[:-1, :], self.vr[1:, :], self.vi[1:, :]
        else:
            ra, ia, rb, ib = self.vr[:, :-1], self.vi[:, :-1], self.vr[:, 1:], self.vi[:, 1:]
        c, s = torch.cos(h * a), torch.sin(h * a)
        # v_b exp(-i h A) - v_a
        dr = rb * c + ib * s - ra
        di = ib * c - rb * s - ia
        return 0.5 * torch.sum(kernel * (dr ** 2 + di ** 2))

    def curl(self):
        return (self.ay[1:, :] - self.ay[:-1, :] - self.ax[:, 1:] + self.ax[:, :-1]) / self.grid.h

    def forward(self):
        kinetic = self._kinetic(0, self.kx, self.ax) + self._kinetic(1, self.ky, self.ay)
        modulus2 = self.vr ** 2 + self.vi ** 2
        potential = torch.sum(self.mass * (self.p - self.q * modulus2) ** 2) / (4 * self.epsilon ** 2)
        field = 0.5 * torch.sum(self.area * (self.curl() - self.h_ex) ** 2)
        return {"kinetic": kinetic, "potential": potential, "field": field,
                "total": kinetic + potential + field}

    def components(self):
        with torch.no_grad():
            return {k: float(v) for k, v in self.forward().items()}
