"""Monte Carlo sweeps of the sequential coalition game over (gamma, beta) grids.

Every (trial, attempt) pair owns a random stream derived from the run seed by
a ``SeedSequence`` spawn key, so a trial's firm sizes do not depend on
which worker runs it or in what order. The same streams are reused in every
grid cell (common random numbers), which keeps trend comparisons sharp.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .coalitions import MAX_GAME_FIRMS, avg_coalition_size, sequential_game_solve
from .data_impact import CostModel, FirmProfile
from .errors import InfeasibleCosts, InvalidParameters

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

THREADS_ENV = "OLIGOSHARE_THREADS"
MAX_RESAMPLES = 1000


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True)
class ExperimentConfig:
    m: int
    gamma_grid: tuple[float, ...]
    beta_grid: tuple[float, ...]
    mu: float = 1000.0
    sigma: float = 300.0
    trials: int = 1000
    seed: int = 0
    cost_defaults: CostModel = field(default_factory=CostModel)
    output: str | None = None
    output_format: OutputFormat = OutputFormat.CSV

    def __post_init__(self):
        object.__setattr__(self, "gamma_grid", tuple(float(g) for g in self.gamma_grid))
        object.__setattr__(self, "beta_grid", tuple(float(b) for b in self.beta_grid))
        object.__setattr__(self, "output_format", OutputFormat(self.output_format))
        if int(self.m) != self.m or not 2 <= self.m <= MAX_GAME_FIRMS:
            raise InvalidParameters(f"m must be an integer in [2, {MAX_GAME_FIRMS}]")
        lower = -1.0 / (self.m - 1)
        if not self.gamma_grid or not all(lower < g < 1.0 for g in self.gamma_grid):
            raise InvalidParameters(f"every gamma must lie in ({lower:.6g}, 1)")
        if not self.beta_grid or not all(0.0 < b <= 1.0 for b in self.beta_grid):
            raise InvalidParameters("every beta must lie in (0, 1]")
        if self.sigma < 0:
            raise InvalidParameters("sigma must be nonnegative")
        if int(self.trials) != self.trials or self.trials < 1:
            raise InvalidParameters("trials must be a positive integer")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidParameters("seed must be a 64-bit unsigned integer")

    @classmethod
    def from_mapping(cls, data: dict, seed: int | None = None) -> "ExperimentConfig":
        """Build from flat keys; ``cost_defaults`` is an inline table with ``a`` and ``b``."""
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidParameters(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(data)
        cost = kwargs.pop("cost_defaults", None) or {}
        if not isinstance(cost, dict) or set(cost) - {"a", "b"}:
            raise InvalidParameters("cost_defaults takes only the keys a and b")
        kwargs["cost_defaults"] = CostModel(a=cost.get("a", 0.1), b=cost.get("b", 0.1))
        if seed is not None:
            kwargs["seed"] = seed
        for key in ("m", "gamma_grid", "beta_grid"):
            if key not in kwargs:
                raise InvalidParameters(f"config is missing {key!r}")
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | os.PathLike, seed: int | None = None) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        return cls.from_mapping(data, seed)


@dataclass(frozen=True)
class SweepRow:
    gamma: float
    beta: float
    m: int
    mu: float
    sigma: float
    trials: int
    mean_avg_coalition_size: float
    std_error: float
    seed: int
    # infeasible draws replaced by fresh ones
    resamples: int = 0


def trial_rng(seed: int, trial: int, attempt: int = 0) -> np.random.Generator:
    """Independent stream for one draw, keyed by (seed, trial, attempt)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial, attempt)))


def sample_sizes(m: int, mu: float, sigma: float, rng: np.random.Generator) -> list[int]:
    """``m`` normal draws rounded to the nearest integer and clipped below at 1."""
    if sigma < 0:
        raise InvalidParameters("sigma must be nonnegative")
    draws = rng.normal(mu, sigma, size=m)
    return [int(v) for v in np.maximum(np.rint(draws), 1.0)]


def _profiles(sizes: Sequence[int], cost: CostModel, beta: float) -> list[FirmProfile]:
    model = cost.with_beta(beta)
    return [FirmProfile(i, n, model) for i, n in enumerate(sizes)]


def run_trial(config: ExperimentConfig, gamma: float, beta: float, trial: int) -> tuple[float, int]:
    """Average coalition size of one sampled market, and how many draws were rejected."""
    for attempt in range(MAX_RESAMPLES):
        sizes = sample_sizes(config.m, config.mu, config.sigma, trial_rng(config.seed, trial, attempt))
        try:
            result = sequential_game_solve(_profiles(sizes, config.cost_defaults, beta), gamma)
        except InfeasibleCosts:
            continue
        return avg_coalition_size(result.partition), attempt
    raise InfeasibleCosts(-1, f"no feasible market after {MAX_RESAMPLES} draws for trial {trial}")


def _run_chunk(args) -> list[tuple[float, int]]:
    config, gamma, beta, trials = args
    return [run_trial(config, gamma, beta, t) for t in trials]


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise InvalidParameters(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise InvalidParameters(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def _summarise(config: ExperimentConfig, gamma: float, beta: float, values, resamples: int) -> SweepRow:
    arr = np.asarray(values, dtype=float)
    n = arr.size
    mean = math.fsum(arr) / n
    if n > 1:
        var = math.fsum((arr - mean) ** 2) / (n - 1)
        se = math.sqrt(var / n)
    else:
        se = 0.0
    return SweepRow(
        gamma=gamma,
        beta=beta,
        m=config.m,
        mu=config.mu,
        sigma=config.sigma,
        trials=config.trials,
        mean_avg_coalition_size=mean,
        std_error=se,
        seed=config.seed,
        resamples=resamples,
    )


def run_sweep(config: ExperimentConfig, workers: int | None = None) -> list[SweepRow]:
    """One row per (gamma, beta) cell, gamma-major, in grid order.

    ``workers`` defaults to the ``OLIGOSHARE_THREADS`` cap (else the CPU
    count). Output does not depend on it.
    """
    workers = worker_count() if workers is None else max(1, int(workers))
    cells = [(g, b) for g in config.gamma_grid for b in config.beta_grid]
    trials = list(range(config.trials))
    if workers == 1:
        outcomes = [_run_chunk((config, g, b, trials)) for g, b in cells]
    else:
        chunk = max(1, math.ceil(config.trials / workers))
        jobs = [
            (config, g, b, trials[i : i + chunk]) for g, b in cells for i in range(0, config.trials, chunk)
        ]
        per_cell = math.ceil(config.trials / chunk)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, jobs))
        outcomes = [
            [item for part in parts[k * per_cell : (k + 1) * per_cell] for item in part]
            for k in range(len(cells))
        ]
    return [
        _summarise(config, g, b, [v for v, _ in out], sum(r for _, r in out))
        for (g, b), out in zip(cells, outcomes)
    ]


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def rows_to_csv(rows: Sequence[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f.name for f in fields(SweepRow)])
    for row in rows:
        writer.writerow([_fmt(getattr(row, f.name)) for f in fields(SweepRow)])
    return buf.getvalue()


def rows_to_json(rows: Sequence[SweepRow]) -> str:
    def clean(row: SweepRow) -> dict:
        return {k: float(_fmt(v)) if isinstance(v, float) else v for k, v in asdict(row).items()}

    return json.dumps([clean(r) for r in rows], indent=2) + "\n"


def render(rows: Sequence[SweepRow], fmt: OutputFormat | str = OutputFormat.CSV) -> str:
    return rows_to_csv(rows) if OutputFormat(fmt) is OutputFormat.CSV else rows_to_json(rows)


def write_rows(rows: Sequence[SweepRow], path: str | os.PathLike, fmt: OutputFormat | str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(render(rows, fmt))
