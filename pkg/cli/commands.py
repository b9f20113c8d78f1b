"""Data commands: mixing curves, tail tables, bound evaluations and reports."""

import inspect
import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from bounds import (
    beta_gamma_gap,
    block_parameters,
    freedman_terms,
    fuk_bound,
    fuk_constants,
    fuk_nagaev_iid_bound,
    gamma_deviation_bound,
    harris_excursion_deviation_bound,
    harris_excursion_fn_bound,
    harris_initial_hold_bound,
    harris_lower_constant,
    harris_return_moment,
    harris_return_moment_bound,
    harris_tau_moments,
    harris_tau_tail_bound,
    lower_shape,
    maximal_Mk,
    moddev_bound,
    rio_fn_bound,
    rosenthal_bound,
    rosenthal_delta_sum,
    weak_fuk_bound,
    young_bound,
)
from chains import FitError, PolymixError, UsageError, build_chain
from cli.config import ExperimentConfig
from mixing import CURVE_CSV_COLUMNS, mixing_curve, rate_fit
from results_logging import ResultLogger, load_results
from tails import TAIL_CSV_COLUMNS, Statistic, kappa_fit, mc_tail

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_UNRESOLVABLE = 4

# Rare-event depth: the largest x of a grid must be predicted to collect this many hits.
MIN_EXPECTED_HITS = 20
PILOT_FRACTION = 10


class ResolvabilityError(PolymixError):
    """The requested grid is predicted to collect too few hits."""

    def __init__(self, message: str, deficit: float):
        super().__init__(message)
        self.deficit = deficit


def check_writable(path: Optional[str]) -> None:
    """Raise OSError before any sampling when ``path`` cannot be written."""
    if path is None:
        return
    target = Path(path)
    parent = target.parent if str(target.parent) else Path(".")
    if not parent.is_dir():
        raise OSError(f"output directory does not exist: {parent}")
    if target.is_dir():
        raise OSError(f"output path is a directory: {target}")
    if not os.access(parent, os.W_OK) or (target.exists() and not os.access(target, os.W_OK)):
        raise OSError(f"output path is not writable: {target}")


def emit(record: dict) -> None:
    """One strict JSON line on standard output; non-finite floats print as null."""
    print(json.dumps(_finite_or_none(record, "", []), allow_nan=False), flush=True)


def _chain(config: ExperimentConfig):
    return build_chain(config.chain, config.p, config.gamma, config.truncation_N)


def cmd_mixing(config: ExperimentConfig) -> int:
    """Write the mixing curve CSV and print its rate fit as a JSON line."""
    config.validate("mixing")
    check_writable(config.output_path)
    chain = _chain(config)

    curve = mixing_curve(
        chain,
        None,
        config.n_list,
        method=config.method,
        trials=config.trials,
        seed=config.seed,
        harris_bins=config.harris_bins,
    )
    results = ResultLogger(config.output_path, kind="csv", columns=CURVE_CSV_COLUMNS)
    results.log_rows(curve.to_rows())
    results.finalize()

    record = {
        'kind': "rate_fit",
        'chain': config.chain,
        'p': config.p,
        'method': config.method,
        'discretization_error': curve.discretization_error,
    }
    try:
        fit = rate_fit(curve, min(config.n_list), max(config.n_list))
        record.update(fit.to_dict())
        if config.p is not None:
            record['target_slope'] = -(config.p - 1.0)
    except FitError as e:
        logger.warning("no rate fit: %s", e)
        record['error'] = str(e)
    emit(record)
    return EXIT_OK


def predicted_hits(kappa: float, shape: Callable, n: int, x: float, trials: int) -> float:
    return trials * min(1.0, kappa * shape(n, x))


def gate_kappa(chain, config: ExperimentConfig, n: int, grid: np.ndarray, statistic: Statistic,
               shape: Callable) -> float:
    """Configured kappa, else the fit of a pilot run with a tenth of the trials."""
    if config.kappa is not None:
        return config.kappa
    pilot_trials = max(100, config.trials // PILOT_FRACTION)
    pilot = mc_tail(chain, None, n, grid, pilot_trials, config.seed, statistic=statistic, workers=config.workers)
    positive = [est for est in pilot if est.hits > 0]
    if not positive:
        # No pilot hits: three-hit upper confidence level at the smallest x.
        return 3.0 / pilot_trials / shape(n, grid[0])
    return kappa_fit(positive, shape)


def resolvability_gate(chain, config: ExperimentConfig, n: int, grid: np.ndarray, statistic: Statistic) -> None:
    if not config.gate or config.p is None:
        return
    shape = lower_shape(config.p)
    kappa = gate_kappa(chain, config, n, grid, statistic, shape)
    expected = predicted_hits(kappa, shape, n, float(grid[-1]), config.trials)
    logger.info("gate n=%d: kappa=%.4g, predicted hits at x=%.4g: %.1f", n, kappa, grid[-1], expected)
    if expected < MIN_EXPECTED_HITS:
        deficit = MIN_EXPECTED_HITS - expected
        raise ResolvabilityError(
            f"grid unresolvable at n={n}: predicted {expected:.2f} hits at x={grid[-1]:.6g} "
            f"with {config.trials} trials (kappa={kappa:.4g}); "
            f"deficit {deficit:.2f} hits below the required {MIN_EXPECTED_HITS}",
            deficit=deficit,
        )


def cmd_tails(config: ExperimentConfig) -> int:
    """Write one TailEstimate CSV row per (n, x)."""
    config.validate("tails")
    check_writable(config.output_path)
    chain = _chain(config)
    statistic = Statistic(config.statistic)

    grids = {n: config.grid_for(n) for n in config.n_list}
    for n, grid in grids.items():
        resolvability_gate(chain, config, n, grid, statistic)

    results = ResultLogger(config.output_path, kind="csv", columns=TAIL_CSV_COLUMNS)
    for n, grid in grids.items():
        estimates = mc_tail(chain, None, n, grid, config.trials, config.seed, statistic=statistic,
                            workers=config.workers)
        results.log_rows(est.to_row() for est in estimates)
    results.finalize()
    logger.info("wrote %d rows to %s", len(results.rows), results.get_output_path())
    return EXIT_OK


# Bound operations -----------------------------------------------------------


def parse_list(text: str) -> List[float]:
    """"ones:K", "harmonic:K" (L_i = 1/i) or "a,b,c"."""
    kind, _, count = text.partition(":")
    if count:
        k = int(count)
        if kind == "ones":
            return [1.0] * k
        if kind == "harmonic":
            return [1.0 / i for i in range(1, k + 1)]
        raise UsageError(f"unknown list generator '{kind}', expected ones or harmonic")
    return [float(v) for v in text.split(",") if v.strip()]


def parse_bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes"):
        return True
    if text.lower() in ("0", "false", "no"):
        return False
    raise UsageError(f"expected a boolean, got '{text}'")


@dataclass(frozen=True)
class BoundCommand:
    func: Callable
    # Non-float parameters by name: int, str, bool or list.
    types: Dict[str, Callable]
    # CLI flag name -> parameter name, where they differ.
    aliases: Dict[str, str]

    def run(self, values: Dict[str, str]):
        signature = inspect.signature(self.func)
        kwargs = {}
        for flag, text in values.items():
            name = self.aliases.get(flag, flag)
            if name not in signature.parameters:
                valid = ", ".join(f"--{p}" for p in self.flags())
                raise UsageError(f"unknown input '--{flag}'. Valid inputs: {valid}")
            convert = self.types.get(name, float)
            try:
                kwargs[name] = convert(text)
            except ValueError:
                raise UsageError(f"input '--{flag}' expects {getattr(convert, '__name__', 'a value')}, got '{text}'")
        missing = [
            name for name, param in signature.parameters.items()
            if param.default is inspect.Parameter.empty and name not in kwargs
        ]
        if missing:
            raise UsageError(f"missing input(s): {', '.join('--' + self._flag(m) for m in missing)}")
        return self.func(**kwargs)

    def _flag(self, name: str) -> str:
        for flag, target in self.aliases.items():
            if target == name:
                return flag
        return name

    def flags(self) -> List[str]:
        return [self._flag(name) for name in inspect.signature(self.func).parameters]


def _cmd(func, aliases=None, **types) -> BoundCommand:
    return BoundCommand(func=func, types=types, aliases=aliases or {})


def _harris_lower(p: float, gamma: float = 1.0) -> float:
    return harris_lower_constant(p, gamma)


def _tau_tail(p: float, ell: float) -> float:
    return harris_tau_tail_bound(p, ell)


# Mapping from op names to bound commands
BOUND_COMMANDS = {
    "fuk-constants": _cmd(fuk_constants, reverse=parse_bool),
    "moddev": _cmd(moddev_bound, case=str),
    "rio-fn": _cmd(rio_fn_bound),
    "young": _cmd(young_bound, aliases={'L': 'L_list'}, L_list=parse_list),
    "fuk": _cmd(fuk_bound, reverse=parse_bool),
    "weak-fuk": _cmd(weak_fuk_bound, aliases={'M': 'M_list'}, M_list=parse_list),
    "maximal-mk": _cmd(maximal_Mk, aliases={'L': 'L_list', 'c0': 'c0_list'},
                       L_list=parse_list, c0_list=parse_list, k=int),
    "rosenthal": _cmd(rosenthal_bound, N=int, delta_raised=parse_bool, naive=parse_bool),
    "rosenthal-delta-sum": _cmd(rosenthal_delta_sum, aliases={'a': 'cond_var_norms'}, cond_var_norms=parse_list),
    "freedman": _cmd(freedman_terms, n=int),
    "block-params": _cmd(block_parameters, n=int),
    "gamma-deviation": _cmd(gamma_deviation_bound, aliases={'gamma': 'gamma_seq'}, n=int, gamma_seq=parse_list),
    "fuk-nagaev-iid": _cmd(fuk_nagaev_iid_bound, n=int),
    "harris-lower-constant": _cmd(_harris_lower),
    "harris-tau-moments": _cmd(harris_tau_moments),
    "harris-tau-tail": _cmd(_tau_tail),
    "harris-initial-hold": _cmd(harris_initial_hold_bound),
    "harris-return-moment": _cmd(harris_return_moment, k=int),
    "harris-return-moment-bound": _cmd(harris_return_moment_bound, k=int),
    "harris-excursion-fn": _cmd(harris_excursion_fn_bound, n=int),
    "harris-excursion-deviation": _cmd(harris_excursion_deviation_bound, n=int),
    "beta-gamma-gap": _cmd(beta_gamma_gap, k=int, dps=int),
}


def parse_named_inputs(tokens: Sequence[str]) -> Dict[str, str]:
    """["--p", "3", "--x", "10"] -> {"p": "3", "x": "10"}; dashes become underscores."""
    values = {}
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--") or len(token) == 2:
            raise UsageError(f"expected a --name flag, got '{token}'")
        key, eq, inline = token[2:].partition("=")
        key = key.replace("-", "_")
        if eq:
            values[key] = inline
            i += 1
            continue
        if i + 1 >= len(tokens):
            raise UsageError(f"flag '{token}' needs a value")
        values[key] = tokens[i + 1]
        i += 2
    return values


def _finite_or_none(value, path: str, found: List[str]):
    """Replace non-finite floats by None, recording where they sat."""
    if isinstance(value, float) and not math.isfinite(value):
        found.append(f"{path}={value}")
        return None
    if isinstance(value, dict):
        return {k: _finite_or_none(v, f"{path}.{k}" if path else str(k), found) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_none(v, f"{path}[{i}]", found) for i, v in enumerate(value)]
    return value


def bound_record(op: str, result) -> dict:
    """JSON-safe record of a bound result; non-finite values become null and are named in ``nonfinite``."""
    if hasattr(result, 'to_dict'):
        data = result.to_dict()
        data.setdefault('op', op)
    elif isinstance(result, tuple):
        data = {'op': op, 'value': [float(v) for v in result]}
    else:
        data = {'op': op, 'value': float(result)}
    found: List[str] = []
    data = _finite_or_none(data, "", found)
    if found:
        data['nonfinite'] = found
    return data


def cmd_bounds(op: str, tokens: Sequence[str]) -> int:
    """Evaluate one bound operation and print its breakdown as a JSON line."""
    command = BOUND_COMMANDS.get(op)
    if command is None:
        valid = ", ".join(sorted(BOUND_COMMANDS))
        raise UsageError(f"unknown bound op '{op}'. Valid ops: {valid}")
    result = command.run(parse_named_inputs(tokens))
    record = bound_record(op, result)
    if 'nonfinite' in record:
        logger.warning("%s has non-finite values: %s", op, ", ".join(record['nonfinite']))
    emit(record)
    return EXIT_OK


def cmd_report(inputs: Sequence[str], output_path: Optional[str]) -> int:
    """Concatenate CSV and JSON-lines outputs into one JSON-lines artifact."""
    if not inputs:
        raise UsageError("report needs at least one input file")
    check_writable(output_path)
    report = ResultLogger(output_path, kind="jsonl")
    for path in inputs:
        rows = load_results(path)
        for row in rows:
            record = dict(row)
            record['source'] = path
            report.log_row(record)
        logger.info("report: %d records from %s", len(rows), path)
    report.finalize()
    return EXIT_OK
