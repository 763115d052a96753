from itertools import product

import numpy as np
import pytest

from errors import ConvergenceError, MesoTableError
from theory import build_ladder, crossing_field, crossing_fields, deltas, h0c1, hc1, l1_l2, lambda_d_set, \
    london_from_xi0, predict, predicted_energy, script_W, slope, synthetic_two_well, wbar_table


def _ladder(values, N0=3, H0=10.0, M=1.0):
    wbar = {0: 0.0}
    wbar.update({d: float(v) for d, v in enumerate(values, start=1)})
    return build_ladder(wbar, N0, M, H0)


@pytest.mark.parametrize("N0", [1, 2, 3, 4])
def test_lambda_d_set_matches_enumeration(N0):
    for d in range(13):
        lo, hi = d // N0, -(-d // N0)
        expected = {D for D in product(range(d + 1), repeat=N0) if sum(D) == d and all(k in (lo, hi) for k in D)}
        got = lambda_d_set(d, N0)
        assert set(got) == expected
        assert len(got) == len(expected)


@pytest.mark.parametrize("values, d_star, K_star", [
    ((1, 3, 4), [1, 3], [1.0, 1.5]),
    ((1, 2, 3), [3], [1.0]),
    ((1, 2.5, 4.5), [1, 2, 3], [1.0, 1.5, 2.0]),
])
def test_ladder_examples(values, d_star, K_star):
    ladder = _ladder(values)
    assert ladder.d_star == d_star
    assert ladder.K_star == pytest.approx(K_star)
    assert all(a < b for a, b in zip(ladder.K_star, ladder.K_star[1:]))
    assert ladder.d_star[-1] == ladder.N0
    assert ladder.KI[0] == pytest.approx(hc1(ladder.H0, ladder.wbar, ladder.M_omega, ladder.N0))


def test_l1_l2_independent_of_splitting():
    wbar = {0: 0.0, 5: 11.0}
    values = {l1_l2(5, wbar, 3, D) for D in lambda_d_set(5, 3)}
    assert len(lambda_d_set(5, 3)) == 3
    assert len(values) == 1
    l1, l2 = values.pop()
    assert l1 == pytest.approx(2 * np.pi)
    assert l2 == pytest.approx(11.0 - 2 * np.pi * np.log(2))


def test_slope_is_a_convex_combination():
    wbar = {0: 0.0, 1: 1.0, 2: 2.5, 3: 4.5, 4: 5.0}
    whole = slope(wbar, 0, 4)
    parts = (1 * slope(wbar, 0, 1) + 3 * slope(wbar, 1, 4)) / 4
    assert whole == pytest.approx(parts)
    with pytest.raises(ValueError):
        slope(wbar, 2, 2)


def test_crossing_field_is_a_fixed_point():
    h = crossing_field(10.0, np.pi, 3.0)
    assert h == pytest.approx(10.0 + np.pi * np.log(h) + 3.0, abs=1e-10)
    assert crossing_field(10.0, 0.0, 2.0) == pytest.approx(12.0)


def test_crossings_equalize_energy():
    ladder = _ladder((1, 3, 4, 7, 11, 20))
    assert ladder.kii_available() == 3
    J0 = 0.17
    crossings = crossing_fields(ladder)
    assert [(d, d2) for d, d2, _ in crossings] == [(0, 1), (1, 3), (3, 4), (4, 5), (5, 6)]
    for d, d_prime, h in crossings:
        e1 = predicted_energy(d, h, J0, ladder.M_omega, ladder.H0, *l1_l2(d, ladder.wbar, ladder.N0))
        e2 = predicted_energy(d_prime, h, J0, ladder.M_omega, ladder.H0, *l1_l2(d_prime, ladder.wbar, ladder.N0))
        assert e1 == pytest.approx(e2, abs=1e-8)


def test_kii_uses_consecutive_increment():
    ladder = _ladder((1, 3, 4, 7))
    d1, d2 = deltas(3, 1.0, 3, ladder.wbar)
    assert d1 == pytest.approx(np.pi)
    assert d2 == pytest.approx(3.0 - np.pi * np.log(2))
    assert ladder.KII(1) == pytest.approx(10.0 + np.pi * np.log(10.0) + d2)
    with pytest.raises(MesoTableError):
        ladder.KII(2)


@pytest.mark.parametrize("h_ex, d, regime", [
    (5.0, 0, "subcritical"),
    (11.2, 1, "ladder"),
    (12.0, 3, "exhausted"),
])
def test_predict_regimes(h_ex, d, regime):
    prediction = predict(h_ex, _ladder((1, 3, 4)))
    assert prediction.d == d
    assert prediction.regime == regime
    assert all(sum(D) == d for D in prediction.degrees)


def test_predict_ambiguous_window():
    prediction = predict(11.05, _ladder((1, 3, 4)), window=0.1)
    assert prediction.regime == "ambiguous"
    assert prediction.d == 0
    assert prediction.interval == pytest.approx((10.9, 11.1))
    assert prediction.to_dict()["interval"] == pytest.approx([10.9, 11.1])


def test_predict_beyond_ladder():
    ladder = _ladder((1, 3, 4, 7, 11, 20))
    prediction = predict(23.0, ladder)
    assert prediction.regime == "beyond"
    assert prediction.d == 5
    assert set(prediction.degrees) == set(lambda_d_set(5, 3))
    assert predict(40.0, ladder).regime == "exhausted"


@pytest.fixture
def steep_ladder():
    """Two wells whose last increment has H0 + delta2 < 0."""
    return _ladder((-1.0, -1.5, 2.0, 6.0, 11.0), N0=2, H0=5.0, M=0.3)


def _argmin_count(ladder, h_ex, J0=0.37):
    energies = [predicted_energy(d, h_ex, J0, ladder.M_omega, ladder.H0, *l1_l2(d, ladder.wbar, ladder.N0))
                for d in range(ladder.d_max + 1)]
    return int(np.argmin(energies))


def test_crossing_with_negative_start(steep_ladder):
    d1, d2 = deltas(4, steep_ladder.M_omega, steep_ladder.N0, steep_ladder.wbar)
    assert steep_ladder.H0 + d2 < 0
    for k in (1, 2, 3):
        h = steep_ladder.crossing(k)
        assert h > 1.0
        e_lo = steep_ladder.expansion(steep_ladder.N0 + k - 1, h)
        e_hi = steep_ladder.expansion(steep_ladder.N0 + k, h)
        assert e_lo == pytest.approx(e_hi, abs=1e-8)
    assert 80.0 < steep_ladder.crossing(3) < 95.0
    assert all(h is not None and h > 0 for _, _, h in crossing_fields(steep_ladder))


def test_crossing_field_without_root():
    with pytest.raises(ConvergenceError):
        crossing_field(5.0, 0.0, -6.0)
    with pytest.raises(ConvergenceError):
        crossing_field(0.0, 1.0, 0.5)


def test_predict_below_steep_crossings(steep_ladder):
    prediction = predict(10.0, steep_ladder)
    assert prediction.regime == "ladder"
    assert prediction.d == 2 == _argmin_count(steep_ladder, 10.0)
    assert predict(150.0, steep_ladder).regime == "exhausted"


def test_overlapping_windows_are_merged(steep_ladder):
    prediction = predict(51.0, steep_ladder)
    assert prediction.regime == "ambiguous"
    assert prediction.d == 3
    lo, hi = prediction.interval
    assert lo == pytest.approx(steep_ladder.KII(2))
    assert hi == pytest.approx(steep_ladder.crossing(3))
    assert {sum(D) for D in prediction.degrees} == {3, 4, 5}


@pytest.mark.parametrize("values, N0, H0, M", [
    ((-1.0, -1.5, 2.0, 6.0, 11.0), 2, 5.0, 0.3),
    ((1, 3, 4, 7, 11, 20), 3, 10.0, 1.0),
])
def test_predict_matches_energy_argmin(values, N0, H0, M):
    ladder = _ladder(values, N0=N0, H0=H0, M=M)
    checked = 0
    for h_ex in np.linspace(0.5, 200.0, 50):
        prediction = predict(h_ex, ladder)
        if prediction.regime == "ambiguous":
            continue
        assert prediction.d == _argmin_count(ladder, h_ex)
        checked += 1
    assert checked >= 20


def test_predict_rejects_nonpositive_field():
    with pytest.raises(ValueError):
        predict(0.0, _ladder((1, 3, 4)))


def test_h0c1_epsilon_dependence():
    args = dict(lam_delta=0.1, b=0.5, xi0_inf_norm=0.2, w_micro_min=1.3, gamma=1.79)
    eps = 1e-3
    assert h0c1(eps / np.e, **args) - h0c1(eps, **args) == pytest.approx(0.25 / 0.4)


@pytest.fixture(scope="module")
def two_well(disk_grid):
    return london_from_xi0(synthetic_two_well(disk_grid, [(-0.4, 0.0), (0.4, 0.0)], depth=0.2, width=0.1))


def test_script_w_needs_meso_constants(two_well, disk_grid):
    assert script_W((0, 0), two_well, {}, disk_grid) == 0.0
    with pytest.raises(MesoTableError):
        script_W((1, 0), two_well, {}, disk_grid)


def test_wbar_table_on_two_wells(two_well, disk_grid):
    meso_C = {(0, 1): 0.0, (1, 1): 0.0, (0, 2): 5.0, (1, 2): 5.0}
    table = wbar_table(two_well, disk_grid, 2, meso_C)
    assert sorted(table) == [0, 1, 2]
    assert table[2].argmin == (1, 1)
    assert np.isfinite(table[1].value)
    assert table[1].argmin in {(1, 0), (0, 1)}
