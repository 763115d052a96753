from .pinning import PinningSpec, PinningField, build_pinning_term, uniform_pinning, solve_lassoued_mironescu, \
    lm_residual, energy_E, energy_F, decoupling_residual
from .london import LondonData, solve_london, london_from_xi0, find_lambda, compute_J0, synthetic_two_well, \
    solve_zeta, tilde_V
from .renorm import VortexConfig, MesoConfig, MesoResult, solve_regular_part, w_macro, canonical_phase, \
    punctured_energy, w_meso_energy, minimize_w_meso, meso_field_energy, minimize_meso_field, meso_constants, \
    w_micro, w_micro_levels, minimize_w_micro
from .bbh import bbh_gamma, radial_profile, profile_energy, gamma_at
from .critical_fields import WbarEntry, CriticalLadder, Prediction, lambda_d_set, script_W, wbar_table, l1_l2, \
    slope, deltas, gamma_tilde, h0c1, hc1, build_ladder, ladder_report, crossing_field, crossing_fields, \
    predicted_energy, predict
