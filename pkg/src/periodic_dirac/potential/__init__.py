"""Periodic fields, norm functionals, averaging and mollifiers."""

from .averaging import (
    AveragingMeasure,
    averaged_potential,
    c_star_bound,
    check_A2,
    dirac,
    line_average,
    transverse_directions,
    vallee_poussin,
)
from .constants import c1_constant, c2_constant, q_constant
from .fields import (
    FourierPotential,
    SampledField,
    analyze,
    constant,
    coulomb_sampled,
    coulomb_series,
    matrix_potential,
    plane_wave,
    random_trig_polynomial,
    single_mode,
    synthesize,
)
from .mollify import mollify_full, mollify_transverse, plateau
from .norms import (
    beta_sigma,
    directional_norm,
    hard_truncate,
    norm_inf,
    norm_inf_loc,
    weak_Ld_norm,
    zygmund_tail,
)
