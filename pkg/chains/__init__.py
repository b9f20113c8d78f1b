from .errors import (
    PolymixError,
    DomainError,
    UsageError,
    SizeError,
    FitError,
    DegenerateInputError,
    ConfigError,
    ObservableLookupError,
    UnsupportedOperationError,
    TruncationWarning,
)
from .rng import RngStream, make_generator, open_uniform
from .laws import zeta, RenewalLaw, renewal_law, HarrisParams, DEFAULT_TRUNCATION_N
from .observables import (
    Observable,
    ObservableKind,
    observable_value,
    renewal_indicator,
    harris_power,
    identity_observable,
    table_observable,
)
from .excursions import (
    ExcursionSample,
    ExcursionSource,
    RenewalExcursions,
    HarrisExcursions,
    TabulatedExcursions,
    truncated_tau_pmf,
    renewal_excursion,
    harris_excursion,
)
from .kernels import (
    ChainModel,
    RenewalChain,
    HarrisChain,
    DoublingChain,
    TableChain,
    renewal_chain,
    harris_chain,
    doubling_chain,
    table_chain,
    product_tower,
    build_chain,
    renewal_step,
    harris_step,
    doubling_step,
    stationary_sample,
)
