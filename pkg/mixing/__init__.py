from .finite import (
    FiniteKernel,
    DEFAULT_HARRIS_BINS,
    renewal_kernel,
    renewal_h1_floor,
    harris_kernel,
    table_kernel,
    exact_iterate,
    doubling_iterate,
)
from .curve import (
    CurveMethod,
    CurveEntry,
    MixingCurve,
    H1Estimate,
    CURVE_CSV_COLUMNS,
    chain_kernel,
    kernel_h1_curve,
    mixing_curve,
    h1_coefficient,
    rate_fit,
)
