from .configuration import GLState, core_profile, build_test_configuration, random_state
from .gauge import energy_full, energy_unreduced, coulomb_project, gauge_transform, divergence_defect
from .magnetic import supercurrent, solve_A_v
from .minimize import FlowResult, minimize
from .decomposition import stream_of, decomposition_check
