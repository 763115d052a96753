import numpy as np
import pytest

from analysis import degree, square_contour
from errors import DomainError
from fields import Disk, Ellipse
from theory import PinningSpec, VortexConfig, canonical_phase, minimize_meso_field, minimize_w_meso, \
    minimize_w_micro, w_macro, w_meso_energy, w_micro, w_micro_levels


def _micro_spec(b=0.5):
    return PinningSpec(b=b, lam=0.4, delta=0.25, omega=Disk(radius=0.25), epsilon=0.01)


def test_vortex_config_validation():
    with pytest.raises(DomainError):
        VortexConfig([(0.0, 0.0)], [0])
    with pytest.raises(DomainError):
        VortexConfig([(0.1, 0.0), (0.1, 0.0)], [1, 1])
    config = VortexConfig.from_list([{"point": [0.1, 0.2]}, {"point": [-0.3, 0.0], "degree": 2}])
    assert config.degrees == (1, 2)
    assert config.total_degree == 3
    assert VortexConfig.from_list(config.to_list()) == config


def test_single_vortex_macro(fine_disk_grid):
    value = w_macro(VortexConfig([(0.5, 0.0)], [1]), fine_disk_grid)
    assert value == pytest.approx(np.pi * np.log(1 - 0.25), abs=5e-3)


def test_symmetric_pair_macro(fine_disk_grid):
    a = 0.5
    value = w_macro(VortexConfig([(a, 0.0), (-a, 0.0)], [1, 1]), fine_disk_grid)
    assert value == pytest.approx(-2 * np.pi * np.log(2 * a) + 2 * np.pi * np.log(1 - a ** 4), abs=1e-2)


def test_macro_rejects_outside_point(disk_grid):
    with pytest.raises(DomainError):
        w_macro(VortexConfig([(1.2, 0.0)], [1]), disk_grid)


def test_canonical_phase_is_unimodular_with_prescribed_degrees(fine_disk_grid):
    config = VortexConfig([(0.3, 0.1), (-0.35, -0.2)], [1, -1])
    w = canonical_phase(config, fine_disk_grid)
    assert np.allclose(np.abs(w.interior()), 1.0)
    for p, d in zip(config.points, config.degrees):
        assert degree(w, square_contour(fine_disk_grid, p, 0.1)) == d


def test_meso_pair_closed_form():
    result = minimize_w_meso(2, np.eye(2))
    x = result.config.points
    assert result.value == pytest.approx(np.pi, abs=1e-3)
    assert np.hypot(*x[0]) == pytest.approx(0.5, abs=1e-3)
    assert np.hypot(*x[1]) == pytest.approx(0.5, abs=1e-3)
    assert np.allclose(x[0], -x[1], atol=1e-3)
    assert result.converged


def test_meso_single_point():
    result = minimize_w_meso(1, np.diag([2.0, 3.0]))
    assert result.value == 0.0
    assert np.allclose(result.config.points, 0.0)


def test_meso_gradient_matches_differences(rng):
    h = 1e-6
    for _ in range(20):
        D = int(rng.integers(2, 6))
        B = rng.normal(size=(2, 2))
        Q = B @ B.T + 0.5 * np.eye(2)
        x = rng.normal(size=(D, 2))
        _, grad = w_meso_energy(x, Q)
        fd = np.zeros_like(x)
        for i in range(D):
            for k in range(2):
                e = np.zeros_like(x)
                e[i, k] = h
                fd[i, k] = (w_meso_energy(x + e, Q)[0] - w_meso_energy(x - e, Q)[0]) / (2 * h)
        assert np.max(np.abs(fd - grad)) <= 1e-5 * max(1.0, np.max(np.abs(grad)))


def test_meso_is_deterministic():
    first = minimize_w_meso(3, np.diag([1.0, 2.0]), rng=np.random.default_rng(5))
    second = minimize_w_meso(3, np.diag([1.0, 2.0]), rng=np.random.default_rng(5))
    assert first.value == second.value
    assert np.array_equal(first.config.points, second.config.points)


def test_meso_field_length_scale():
    p, h_ex = (0.1, -0.2), 100.0
    z, value, converged = minimize_meso_field(2, p, np.eye(2), h_ex)
    z = np.asarray(z)
    assert converged
    assert np.hypot(*(z[0] - z[1])) == pytest.approx(np.sqrt(2 / h_ex), rel=1e-3)
    assert np.allclose(z.mean(axis=0), p, atol=1e-4)


def test_micro_concentric_disk():
    assert w_micro((0.0, 0.0), _micro_spec(0.5)) == pytest.approx(0.75 * np.pi * np.log(4.0), abs=1e-2)


def test_micro_without_contrast():
    assert w_micro((0.0, 0.0), _micro_spec(0.99999)) == pytest.approx(0.0, abs=1e-3)


def test_micro_levels_report():
    report = w_micro_levels((0.05, 0.0), _micro_spec(), levels=3)
    assert len(report["levels"]) == 3
    assert report["x0"] == [0.05, 0.0]


def test_micro_point_outside_inclusion():
    with pytest.raises(DomainError):
        w_micro((0.3, 0.0), _micro_spec())


def test_micro_minimizer_at_center():
    x_star, value = minimize_w_micro(_micro_spec(), search=5, n_theta=64, levels=2)
    assert np.hypot(*x_star) <= 0.5 / 4
    assert value == pytest.approx(w_micro((0.0, 0.0), _micro_spec(), n_theta=64, levels=2), abs=5e-2)


def test_macro_relabeling_invariance(disk_grid):
    points, degrees = [(0.3, 0.1), (-0.2, 0.4), (0.0, -0.5)], [1, 2, -1]
    value = w_macro(VortexConfig(points, degrees), disk_grid)
    for order in ([2, 0, 1], [1, 2, 0]):
        shuffled = VortexConfig([points[k] for k in order], [degrees[k] for k in order])
        assert w_macro(shuffled, disk_grid) == pytest.approx(value, abs=1e-10)


def test_macro_cluster_consistency(fine_disk_grid):
    p = np.array([0.2, 0.1])
    merged = w_macro(VortexConfig([tuple(p)], [2]), fine_disk_grid)
    gaps = []
    for chi in (0.2, 0.1, 0.05):
        offset = np.array([chi / 2, 0.0])
        pair = w_macro(VortexConfig([tuple(p + offset), tuple(p - offset)], [1, 1]), fine_disk_grid)
        gaps.append(abs(pair - (merged - 2 * np.pi * np.log(chi))) / chi)
    assert max(gaps) <= 1.0
    assert gaps[-1] <= gaps[0] + 0.2


def test_meso_trap_scaling():
    Q = np.diag([1.0, 2.0])
    c = 4.0
    base = minimize_w_meso(3, Q, rng=np.random.default_rng(1))
    scaled = minimize_w_meso(3, c * Q, rng=np.random.default_rng(1))
    assert scaled.value == pytest.approx(base.value + np.pi / 2 * 3 * 2 * np.log(c), abs=1e-3)

    def spacings(points):
        x = np.asarray(points)
        return np.sort([np.hypot(*(x[i] - x[j])) for i in range(3) for j in range(i + 1, 3)])

    assert np.allclose(spacings(scaled.config.points), spacings(base.config.points) / np.sqrt(c), atol=1e-3)


def test_micro_off_center_costs_more():
    spec = _micro_spec()
    center = w_micro((0.0, 0.0), spec, n_theta=64, levels=2)
    assert w_micro((0.1, 0.0), spec, n_theta=64, levels=2) > center
    assert w_micro((0.0, -0.15), spec, n_theta=64, levels=2) > center


def test_micro_ellipse_is_reflection_symmetric():
    spec = PinningSpec(b=0.5, lam=0.4, delta=0.25, omega=Ellipse(a=0.3, b=0.15), epsilon=0.01)
    value = w_micro((0.05, 0.03), spec, n_theta=64, levels=2)
    assert w_micro((0.05, -0.03), spec, n_theta=64, levels=2) == pytest.approx(value, abs=1e-5)
    assert w_micro((-0.05, 0.03), spec, n_theta=64, levels=2) == pytest.approx(value, abs=1e-5)
    (x, y), _ = minimize_w_micro(spec, search=5, n_theta=64, levels=2)
    assert abs(y) <= 2 * (0.3 / 4)
