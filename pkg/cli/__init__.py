from .config import ExperimentConfig, XGridSpec, bandwidth, parse_n_list, load_config_file, merge_config
from .commands import (
    EXIT_OK,
    EXIT_VERIFY_FAILED,
    EXIT_VALIDATION,
    EXIT_IO,
    EXIT_UNRESOLVABLE,
    BOUND_COMMANDS,
    ResolvabilityError,
    cmd_mixing,
    cmd_tails,
    cmd_bounds,
    cmd_report,
)
from .verify import SUITES, Check, VerifyOptions, cmd_verify, run_suite
