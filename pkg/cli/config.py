"""Experiment configuration: dataclasses, JSON config files and grid specs."""

import json
import math
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

import numpy as np

from chains.errors import ConfigError
from chains.laws import DEFAULT_TRUNCATION_N
from chains.rng import MAX_SEED
from tails.montecarlo import MIN_TRIALS

CHAINS = ("renewal", "harris", "doubling", "tower")
GRID_KINDS = ("linear", "log", "bandwidth")
STATISTICS = ("max_abs_partial_sum", "abs_sum", "excursion_sum")
MIXING_METHODS = ("exact", "mc")


@dataclass
class XGridSpec:
    kind: str = "bandwidth"
    lo: Optional[float] = None
    hi: Optional[float] = None
    count: int = 10

    @classmethod
    def parse(cls, text: str) -> 'XGridSpec':
        """"bandwidth:K", "linear:LO:HI:K" or "log:LO:HI:K"."""
        parts = text.split(":")
        kind = parts[0]
        try:
            if kind == "bandwidth" and len(parts) == 2:
                return cls(kind=kind, count=int(parts[1]))
            if kind in ("linear", "log") and len(parts) == 4:
                return cls(kind=kind, lo=float(parts[1]), hi=float(parts[2]), count=int(parts[3]))
        except ValueError:
            pass
        raise ConfigError(
            f"invalid x_grid '{text}'. Expected bandwidth:K, linear:LO:HI:K or log:LO:HI:K"
        )

    def validate(self) -> None:
        if self.kind not in GRID_KINDS:
            raise ConfigError(f"x_grid.kind must be one of {', '.join(GRID_KINDS)}, got '{self.kind}'")
        if self.count < 1:
            raise ConfigError(f"x_grid.count must be >= 1, got {self.count}")
        if self.kind != "bandwidth":
            if self.lo is None or self.hi is None:
                raise ConfigError(f"x_grid kind '{self.kind}' needs lo and hi")
            if not 0 <= self.lo <= self.hi:
                raise ConfigError(f"x_grid needs 0 <= lo <= hi, got lo={self.lo}, hi={self.hi}")
            if self.kind == "log" and self.lo <= 0:
                raise ConfigError("log x_grid needs lo > 0")

    def resolve(self, n: int, p: Optional[float]) -> np.ndarray:
        """Ascending grid of deviation levels for path length n."""
        if self.kind == "bandwidth":
            if p is None:
                raise ConfigError("bandwidth x_grid requires p")
            lo, hi = bandwidth(n, p)
            if not lo < hi:
                raise ConfigError(
                    f"bandwidth [4 n^(1/p), n/16] = [{lo:.4g}, {hi:.4g}] is empty at n={n}, p={p}"
                )
            return np.geomspace(lo, hi, self.count)
        if self.kind == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data) -> 'XGridSpec':
        if isinstance(data, cls):
            return data
        if isinstance(data, str):
            return cls.parse(data)
        if not isinstance(data, dict):
            raise ConfigError(f"x_grid must be a string or an object, got {type(data).__name__}")
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"unknown x_grid field(s): {', '.join(sorted(unknown))}")
        return cls(**data)


def bandwidth(n: int, p: float) -> tuple:
    """Default experiment bandwidth [4 n^(1/p), n/16]."""
    return 4.0 * n ** (1.0 / p), n / 16.0


def parse_n_list(text: str) -> List[int]:
    """
    "500", "1000,3000,10000", "10..500" (every integer) or "10..500:12"
    (12 log-spaced distinct integers).
    """
    try:
        if ".." in text:
            span, _, count = text.partition(":")
            lo_text, hi_text = span.split("..")
            lo, hi = int(lo_text), int(hi_text)
            if lo > hi:
                raise ConfigError(f"empty n range '{text}'")
            if not count:
                return list(range(lo, hi + 1))
            points = np.unique(np.rint(np.geomspace(max(lo, 1), hi, int(count))).astype(np.int64))
            return [int(v) for v in points]
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"invalid n list '{text}'. Expected N, N1,N2,..., A..B or A..B:K")


@dataclass
class ExperimentConfig:
    chain: Optional[str] = None
    p: Optional[float] = None
    gamma: Optional[float] = None
    n_list: List[int] = field(default_factory=list)
    x_grid: Optional[XGridSpec] = None
    trials: int = 10_000
    seed: int = 0
    truncation_N: int = DEFAULT_TRUNCATION_N
    output_path: Optional[str] = None

    workers: Optional[int] = None      # None: POLYMIX_WORKERS, else cpu count
    kappa: Optional[float] = None      # resolvability gate constant; None runs a pilot fit
    gate: bool = True
    alpha: Optional[float] = None      # x = x_scale * n^alpha grids
    x_scale: float = 4.0
    r: Optional[float] = None          # moment order of the p = 2 shape
    statistic: str = "max_abs_partial_sum"
    method: str = "exact"              # mixing curves
    harris_bins: int = 4096
    suite: Optional[str] = None

    def to_dict(self) -> dict:
        data = asdict(self)
        data['x_grid'] = self.x_grid.to_dict() if self.x_grid is not None else None
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentConfig':
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        data = dict(data)
        if data.get('x_grid') is not None:
            data['x_grid'] = XGridSpec.from_dict(data['x_grid'])
        if isinstance(data.get('n_list'), str):
            data['n_list'] = parse_n_list(data['n_list'])
        elif isinstance(data.get('n_list'), (int, float)):
            data['n_list'] = [data['n_list']]
        return cls(**data)

    def grid_for(self, n: int) -> np.ndarray:
        """x grid at path length n: the x_grid spec, else x_scale * n^alpha."""
        if self.x_grid is not None:
            return self.x_grid.resolve(n, self.p)
        if self.alpha is not None:
            return np.array([self.x_scale * n**self.alpha])
        raise ConfigError("missing required field 'x_grid' (or 'alpha')")

    def validate(self, command: str) -> 'ExperimentConfig':
        """Check every field a command uses before anything is sampled."""
        if self.chain is None:
            raise ConfigError("missing required field 'chain'")
        if self.chain not in CHAINS:
            raise ConfigError(f"chain must be one of {', '.join(CHAINS)}, got '{self.chain}'")
        if self.chain != "doubling":
            if self.p is None:
                raise ConfigError("missing required field 'p'")
            if not (isinstance(self.p, (int, float)) and math.isfinite(self.p) and self.p > 1):
                raise ConfigError(f"field 'p' must be a real > 1, got {self.p}")
        if self.chain == "tower" and self.p is not None and self.p <= 2:
            raise ConfigError(f"the tower experiment is only defined here for p > 2, got p={self.p}")
        if self.gamma is not None and not self.gamma > 0:
            raise ConfigError(f"field 'gamma' must be > 0, got {self.gamma}")
        if not self.n_list:
            raise ConfigError("missing required field 'n_list'")
        if any(int(n) != n or n < 1 for n in self.n_list):
            raise ConfigError(f"field 'n_list' must hold integers >= 1, got {self.n_list}")
        self.n_list = [int(n) for n in self.n_list]
        if not 0 <= int(self.seed) <= MAX_SEED:
            raise ConfigError(f"field 'seed' must be a 64-bit unsigned integer, got {self.seed}")
        if self.truncation_N < 2:
            raise ConfigError(f"field 'truncation_N' must be >= 2, got {self.truncation_N}")
        if self.workers is not None and self.workers < 1:
            raise ConfigError(f"field 'workers' must be >= 1, got {self.workers}")
        if self.harris_bins < 2:
            raise ConfigError(f"field 'harris_bins' must be >= 2, got {self.harris_bins}")

        if command == "mixing":
            if self.method not in MIXING_METHODS:
                raise ConfigError(f"field 'method' must be one of {', '.join(MIXING_METHODS)}, got '{self.method}'")
            if self.method == "mc" and self.trials < MIN_TRIALS:
                raise ConfigError(f"field 'trials' must be >= {MIN_TRIALS}, got {self.trials}")
        if command == "tails":
            if self.trials < MIN_TRIALS:
                raise ConfigError(f"field 'trials' must be >= {MIN_TRIALS}, got {self.trials}")
            if self.statistic not in STATISTICS:
                raise ConfigError(f"field 'statistic' must be one of {', '.join(STATISTICS)}, got '{self.statistic}'")
            if self.x_grid is None and self.alpha is None:
                raise ConfigError("missing required field 'x_grid'")
            if self.x_grid is not None:
                self.x_grid.validate()
                if self.x_grid.kind == "bandwidth" and self.p is None:
                    raise ConfigError("bandwidth x_grid requires field 'p'")
            if self.alpha is not None and not 0.5 < self.alpha <= 1.0:
                raise ConfigError(f"field 'alpha' must lie in (1/2, 1], got {self.alpha}")
            if self.kappa is not None and not self.kappa > 0:
                raise ConfigError(f"field 'kappa' must be > 0, got {self.kappa}")
            for n in self.n_list:
                self.grid_for(n)
        return self


def load_config_file(path: str) -> dict:
    """Read a JSON config file into a plain dict."""
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def merge_config(file_values: dict, overrides: dict) -> ExperimentConfig:
    """File values first, then every flag that was given (not None)."""
    merged = dict(file_values)
    merged.update({key: value for key, value in overrides.items() if value is not None})
    return ExperimentConfig.from_dict(merged)
