from types import SimpleNamespace

import numpy as np
import pytest

from analysis import Defect, cluster_radius, cluster_report, compare, degree, detect_defects, separate_disks, \
    square_contour
from errors import ContourError
from fields import ComplexField
from theory import Prediction


def _winding(grid, d, center=(0.0, 0.0)):
    angle = np.arctan2(grid.Y - center[1], grid.X - center[0])
    return ComplexField(grid, np.exp(1j * d * angle))


def _dips(grid, centers, width=0.08):
    modulus = np.ones(grid.shape)
    for cx, cy in centers:
        modulus *= 1 - np.exp(-((grid.X - cx) ** 2 + (grid.Y - cy) ** 2) / (2 * width ** 2))
    return ComplexField(grid, modulus.astype(complex))


@pytest.mark.parametrize("d", [1, -1, 0, 2])
def test_degree_of_winding_field(disk_grid, d):
    loop = square_contour(disk_grid, (0.0, 0.0), 0.3)
    assert degree(_winding(disk_grid, d), loop) == d


def test_contour_is_a_closed_counter_clockwise_loop(disk_grid):
    loop = square_contour(disk_grid, (0.0, 0.0), 0.1)
    steps = np.abs(np.diff(np.vstack([loop, loop[:1]]), axis=0)).sum(axis=1)
    assert np.all(steps == 1)
    assert len({tuple(p) for p in loop}) == len(loop)
    with pytest.raises(ContourError):
        square_contour(disk_grid, (0.0, 0.0), 5.0)


def test_degree_rejects_small_modulus(disk_grid):
    v = _winding(disk_grid, 1)
    loop = square_contour(disk_grid, (0.0, 0.0), 0.3)
    values = v.values.copy()
    i, j = loop[0]
    values[i, j] = 0.01
    with pytest.raises(ContourError):
        degree(ComplexField(disk_grid, values), loop)


def test_two_dips_are_two_components(disk_grid):
    centers = [(-0.4, 0.0), (0.4, 0.0)]
    defects = detect_defects(_dips(disk_grid, centers))
    assert len(defects) == 2
    found = sorted(d.center for d in defects)
    for (x, y), (cx, cy) in zip(found, centers):
        assert np.hypot(x - cx, y - cy) <= disk_grid.h
    # |v| is real and positive away from the dips, so neither carries a winding
    assert all(d.degree == 0 and not d.touches_boundary for d in defects)


def test_uniform_state_has_no_defects(disk_grid):
    assert detect_defects(ComplexField(disk_grid, np.ones(disk_grid.shape, dtype=complex))) == []


def test_vortex_is_detected_with_its_degree(disk_grid):
    r = np.hypot(disk_grid.X - 0.2, disk_grid.Y + 0.1)
    v = _winding(disk_grid, -1, (0.2, -0.1)).values * np.tanh(r / 0.05)
    defects = detect_defects(ComplexField(disk_grid, v), threshold=0.5)
    assert len(defects) == 1
    assert defects[0].degree == -1
    assert np.hypot(defects[0].center[0] - 0.2, defects[0].center[1] + 0.1) <= disk_grid.h


def test_boundary_dip_is_flagged(disk_grid):
    defects = detect_defects(_dips(disk_grid, [(0.98, 0.0)]))
    assert len(defects) == 1
    assert defects[0].touches_boundary
    assert defects[0].degree == 0


def test_defect_dict():
    defect = Defect(center=(0.1, 0.2), radius=0.05, degree=1, min_abs=0.01)
    assert defect.to_dict()["center"] == [0.1, 0.2]
    assert defect.to_dict()["inclusion_center"] is None


@pytest.mark.parametrize("centers, eta, P, kept, kappa", [
    ([(0.0, 0.0), (10.0, 0.0)], 1.0, 3, [0, 1], 1.0),
    ([(0.0, 0.0), (1.0, 0.0)], 1.0, 3, [0], 3.0),
    ([(0.0, 0.0)], 0.5, 2, [0], 1.0),
])
def test_separate_disks_examples(centers, eta, P, kept, kappa):
    J, k = separate_disks(centers, eta, P)
    assert J == kept
    assert k == kappa


def test_separate_disks_random(rng):
    for _ in range(10):
        x = rng.uniform(-1, 1, size=(12, 2))
        eta, P = 0.05, 3
        J, kappa = separate_disks(x, eta, P)
        assert kappa in [P ** m for m in range(len(x))]
        kept = x[J]
        cover = np.hypot(x[:, None, 0] - kept[None, :, 0], x[:, None, 1] - kept[None, :, 1]).min(axis=1)
        assert np.all(cover + eta <= kappa * eta * (1 + 1e-12))
        if len(J) > 1:
            gap = np.hypot(kept[:, None, 0] - kept[None, :, 0], kept[:, None, 1] - kept[None, :, 1])
            np.fill_diagonal(gap, np.inf)
            assert gap.min() >= (P - 1) * kappa * eta * (1 - 1e-12)


def test_separate_disks_rejects_bad_parameters():
    with pytest.raises(ValueError):
        separate_disks([(0.0, 0.0)], 1.0, 1)
    with pytest.raises(ValueError):
        separate_disks([(0.0, 0.0)], 0.0, 3)


def test_cluster_report_and_comparison():
    h_ex = 100.0
    ell = np.sqrt(2 / h_ex)
    defects = [
        Defect(center=(0.5 * ell, 0.0), radius=0.01, degree=1, min_abs=0.0),
        Defect(center=(-0.5 * ell, 0.0), radius=0.01, degree=1, min_abs=0.0),
        Defect(center=(0.9, 0.0), radius=0.01, degree=0, min_abs=0.1, touches_boundary=True),
    ]
    london = SimpleNamespace(lambda_set=[(0.0, 0.0)])
    report = cluster_report(defects, london, h_ex)
    assert cluster_radius(h_ex) == pytest.approx(2 * np.log(100.0) / 10.0)
    assert report.D == (2,)
    assert report.total_degree == 2
    assert report.stray == []
    assert report.clusters[0].members == [0, 1]

    result = compare(report, Prediction(2, [(2,)], "ladder"), london=london,
                     meso_points={0: [(-0.5, 0.0), (0.5, 0.0)]})
    assert result["count_matches"]
    assert result["all_degree_one"]
    assert result["D_admissible"]
    assert result["meso_deviation"] == pytest.approx(0.0, abs=1e-12)
    assert result["separation_constant"] == pytest.approx(ell * h_ex / np.log(h_ex))
    assert result["lambda_distance_constant"] == pytest.approx(0.5 * ell * np.sqrt(h_ex) / np.log(h_ex))
    assert report.to_dict()["n_defects"] == 3


def test_far_vortex_is_stray():
    defects = [Defect(center=(0.95, 0.0), radius=0.01, degree=1, min_abs=0.0)]
    report = cluster_report(defects, SimpleNamespace(lambda_set=[(0.0, 0.0)]), 100.0)
    assert report.stray == [0]
    assert report.D == (0,)
    result = compare(report, Prediction(1, [(1,)], "ladder"))
    assert result["count_matches"]
    assert not result["D_admissible"]
