import numpy as np
import pytest

from analysis import detect_defects
from errors import DomainError
from fields import ComplexField, Disk, LinkField, ScalarField, build_grid
from module import GLModule
from scheduler import WarmupCosineStep
from sim import GLState, build_test_configuration, coulomb_project, decomposition_check, divergence_defect, \
    energy_full, energy_unreduced, gauge_transform, minimize, random_state, solve_A_v
from theory import VortexConfig, solve_london, uniform_pinning


def _ones(grid):
    return ScalarField(grid, np.ones(grid.shape))


@pytest.fixture(scope="module")
def london(disk_grid):
    return solve_london(disk_grid)


@pytest.fixture
def state(disk_grid, london, rng):
    return random_state(disk_grid, _ones(disk_grid), 0.1, 3.0, rng, london=london)


def test_energy_is_gauge_invariant(state, rng):
    grid = state.grid
    a = uniform_pinning(grid)
    before = energy_full(state)
    e0 = energy_unreduced(ComplexField(grid, (state.v * state.U).values), state.A, a, state.epsilon, state.h_ex)
    for _ in range(20):
        kx, ky = rng.normal(size=2) * 3
        phi = ScalarField(grid, rng.normal() * np.sin(kx * grid.X + ky * grid.Y) + rng.normal() * grid.X * grid.Y)
        moved = gauge_transform(state, phi)
        after = energy_full(moved)
        assert after["total"] == pytest.approx(before["total"], rel=1e-8)
        assert after["field"] == pytest.approx(before["field"], rel=1e-8)
        e1 = energy_unreduced(ComplexField(grid, (moved.v * moved.U).values), moved.A, a, state.epsilon,
                              state.h_ex)
        assert e1["total"] == pytest.approx(e0["total"], rel=1e-8)


def test_meissner_state_energies(disk_grid, london):
    h_ex = 2.0
    v = ComplexField(disk_grid, np.ones(disk_grid.shape, dtype=complex))
    empty = GLState(v=v, A=LinkField.zeros(disk_grid), h_ex=h_ex, U=_ones(disk_grid), epsilon=0.1)
    assert energy_full(empty)["total"] == pytest.approx(0.5 * h_ex ** 2 * disk_grid.quadrature_area(), rel=1e-12)
    screened = empty.replace(A=LinkField.from_stream(london.xi0 * h_ex))
    assert energy_full(screened)["total"] == pytest.approx(h_ex ** 2 * london.J0, rel=0.05)


def test_projection_removes_pure_gradient(disk_grid):
    phi0 = np.sin(2 * disk_grid.X) * np.cos(disk_grid.Y) + disk_grid.X * disk_grid.Y
    projected, _ = coulomb_project(LinkField.gradient_of(disk_grid, phi0))
    assert projected.max_abs() <= 1e-6


def test_coulomb_projection(state):
    assert divergence_defect(state.A) > 1e-6
    _, phi = coulomb_project(state.A)
    projected = gauge_transform(state, phi)
    assert divergence_defect(projected.A) <= 1e-8
    assert energy_full(projected)["total"] == pytest.approx(energy_full(state)["total"], rel=1e-8)


def test_induced_field_without_vortices(disk_grid, london):
    v = ComplexField(disk_grid, np.ones(disk_grid.shape, dtype=complex))
    A, xi = solve_A_v(v, _ones(disk_grid), 4.0)
    assert np.max(np.abs(xi.interior() - 4.0 * london.xi0.interior())) <= 1e-8
    assert np.allclose(A.ax, LinkField.from_stream(xi).ax)


def test_induced_field_without_condensate(fine_disk_grid):
    grid = fine_disk_grid
    v = ComplexField(grid, np.zeros(grid.shape, dtype=complex))
    A, _ = solve_A_v(v, _ones(grid), 3.0)
    xc, yc = grid.X[:-1, :-1] + grid.h / 2, grid.Y[:-1, :-1] + grid.h / 2
    deep = (grid.cell_frac == 1.0) & (np.hypot(xc, yc) < 0.7)
    curl = A.curl()[deep]
    # nothing screens the applied field
    assert np.max(np.abs(curl - 3.0)) <= 0.05 * 3.0
    assert float(np.mean(curl)) == pytest.approx(3.0, rel=0.02)


def test_test_configuration_has_one_vortex(disk_grid, london):
    config = VortexConfig([(0.0, 0.0)], [1])
    state = build_test_configuration(config, london, _ones(disk_grid), 0.1, 3.0)
    assert state.min_abs_v() == pytest.approx(0.0, abs=1e-12)
    assert state.max_abs_v() <= 1.0
    defects = detect_defects(state.v)
    assert len(defects) == 1
    assert defects[0].degree == 1
    assert np.hypot(*defects[0].center) <= disk_grid.h


def test_test_configuration_rejects_bad_input(disk_grid, london):
    with pytest.raises(DomainError):
        build_test_configuration(VortexConfig([(0.0, 0.0)], [2]), london, _ones(disk_grid), 0.1, 3.0)
    with pytest.raises(DomainError):
        build_test_configuration(VortexConfig([(0.0, 0.0), (0.5, 0.0)], [1, 1]), london, _ones(disk_grid), 0.1,
                                 3.0)


def test_module_matches_state_energy(state):
    module = GLModule.from_state(state)
    assert module.components() == energy_full(state)
    v, A = module.to_fields()
    assert np.array_equal(v.values, state.v.values)
    assert np.array_equal(A.ay, state.A.ay)


def test_schedule_warms_up_and_anneals():
    schedule = WarmupCosineStep(1e-3, warmup_steps=10, max_steps=100)
    assert schedule.cap(0) == pytest.approx(1e-4)
    assert schedule.cap(9) == pytest.approx(1e-3)
    assert schedule.cap(100) == pytest.approx(1e-4)
    assert schedule.cap(50) < schedule.cap(20)
    with pytest.raises(ValueError):
        WarmupCosineStep(0.0)


def test_flow_energy_is_monotone(rng):
    grid = build_grid(Disk(radius=1.0), 32)
    start = random_state(grid, _ones(grid), 0.2, 2.0, rng)
    result = minimize(start, max_sweeps=30, tol=0.0)
    energy = result.trace["energy"].to_numpy()
    assert len(energy) == result.sweeps + 1
    assert np.all(np.diff(energy) <= 1e-9 * abs(energy[0]))
    assert energy[-1] < energy[0]
    assert isinstance(result.state, GLState)
    assert result.state.max_abs_v() <= 1.0 + 1e-12
    assert divergence_defect(result.state.A) <= 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_low_field_flow_ends_vortex_free(seed):
    grid = build_grid(Disk(radius=1.0), 32)
    start = random_state(grid, _ones(grid), 0.2, 0.5, np.random.default_rng(seed))
    result = minimize(start, max_sweeps=200)
    assert result.state.min_abs_v() >= 0.5
    assert [d for d in detect_defects(result.state.v) if not d.touches_boundary and d.degree != 0] == []


def test_decomposition_without_vortices(fine_disk_grid):
    london = solve_london(fine_disk_grid)
    state = build_test_configuration(VortexConfig([], []), london, _ones(fine_disk_grid), 0.05, 5.0)
    report = decomposition_check(state, VortexConfig([], []), london)
    assert report["F_v"] == pytest.approx(0.0, abs=1e-12)
    assert report["rel_residual"] <= 0.05
