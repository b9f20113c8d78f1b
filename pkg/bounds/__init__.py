from .breakdown import BoundTerm, BoundBreakdown
from .deviation import (
    ModDevCase,
    case_for,
    moddev_bound,
    moddev_shape,
    lower_shape,
    rio_fn_bound,
    young_bound,
    young_log_factor,
    maximal_Mk,
    maximal_sup_terms,
    default_c0,
    gamma_deviation_bound,
)
from .martingale import (
    FukConstants,
    fuk_constants,
    fuk_bound,
    default_weak_fuk_constant,
    weak_fuk_bound,
    rosenthal_delta,
    rosenthal_delta_sum,
    rosenthal_bound,
    freedman_terms,
    fuk_nagaev_iid_bound,
)
from .blocks import BlockParams, block_parameters, integer_root
from .harris import (
    harris_lower_constant,
    harris_return_moment,
    harris_return_moment_closed,
    harris_return_moment_bound,
    beta_gamma_gap,
    harris_tau_moments,
    harris_tau_tail_bound,
    harris_initial_hold_bound,
    harris_excursion_fn_bound,
    harris_excursion_deviation_bound,
)
