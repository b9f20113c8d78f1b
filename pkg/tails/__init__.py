from .estimate import (
    Statistic,
    TailEstimate,
    ScalingFit,
    TAIL_CSV_COLUMNS,
    WILSON_Z,
    wilson_interval,
    estimates_from_extremes,
    loglog_fit,
)
from .parallel import CHUNK_TRIALS, WORKERS_ENV, resolve_workers, run_chunks
from .montecarlo import (
    MIN_TRIALS,
    FunctionalTail,
    mc_tail,
    excursion_sum_tail,
    excursion_sum_tails,
    excursion_sum_samples,
    young_functional_tail,
    segment_statistics,
)
from .oracle import dp_sum_tail
from .fitting import MIN_HITS, FitMode, LimitKind, scaling_fit, kappa_fit, limit_diagnostic, variance_stability
from .blocks import BlockCheckReport, block_check
