"""Monte Carlo size and power of the longest-run test on three variance models.

Every replicate draws its errors from its own counter-based stream,
keyed by ``(master_seed, model, n, c, replicate)``, so results do not
depend on how replicates are spread over workers.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtri

from .combinatorics import critical_value
from .errors import PreconditionError, SimulationError
from .estimation import Dataset, MeanEstimatorSpec
from .lrt import run_test
from .reference import published_cell

__all__ = [
    "MonteCarloConfig",
    "PowerEstimate",
    "SimulationModel",
    "design",
    "estimate_power",
    "generate",
    "known_mean_spec",
    "replicate_seed",
    "reproduce_table",
    "standard_normal",
]

MIN_N, MAX_N = 10, 10_000
DEFAULT_N = (50, 100)
DEFAULT_C = (0.0, 0.5, 1.0)
DEFAULT_LEVELS = (0.05, 0.10)


@dataclass(frozen=True)
class SimulationModel:
    """Regression model ``Y = mu(x) + sigma(x) e`` on [0, 1].

    ======  ===========  ==========================
    model   mu(x)        sigma(x)
    ======  ===========  ==========================
    1       1 + sin(x)   0.5 exp(c x)
    2       1 + x        0.5 (1 + c sin(10 x))**2
    3       1 + x        0.5 (1 + c x)**2
    ======  ===========  ==========================
    """

    id: int
    c: float = 0.0

    def __post_init__(self):
        if self.id not in (1, 2, 3):
            raise PreconditionError(f"model must be 1, 2 or 3, got {self.id!r}")
        if not (self.c >= 0 and math.isfinite(self.c)):
            raise PreconditionError(f"c must be a finite non-negative number, got {self.c!r}")
        object.__setattr__(self, "c", float(self.c))

    def mean(self, x):
        x = np.asarray(x, dtype=float)
        return 1.0 + (np.sin(x) if self.id == 1 else x)

    def scale(self, x):
        x = np.asarray(x, dtype=float)
        c = self.c
        if self.id == 1:
            return 0.5 * np.exp(c * x)
        if self.id == 2:
            return 0.5 * (1.0 + c * np.sin(10.0 * x)) ** 2
        return 0.5 * (1.0 + c * x) ** 2


def design(n: int) -> np.ndarray:
    """Equispaced design ``x_i = (i - 1) / (n - 1)`` on [0, 1]."""
    if n < 2:
        raise PreconditionError(f"design needs n >= 2, got {n}")
    return np.arange(n) / (n - 1)


def standard_normal(seed, size: int) -> np.ndarray:
    """Standard normal variates by inverse CDF of 53-bit Philox uniforms.

    `seed` is anything :class:`numpy.random.SeedSequence` accepts.
    """
    raw = np.random.Philox(np.random.SeedSequence(seed)).random_raw(size)
    u = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0**-53
    return ndtri(u)


def generate(model: SimulationModel, n: int, seed) -> Dataset:
    x = design(n)
    e = standard_normal(seed, n)
    return Dataset(x, model.mean(x) + model.scale(x) * e)


def _float_key(c: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(c)))[0]


def replicate_seed(master_seed: int, model: SimulationModel, n: int, r: int) -> tuple[int, ...]:
    """Seed entropy of one replicate."""
    return (master_seed, model.id, n, _float_key(model.c), r)


def known_mean_spec(model: SimulationModel, n: int) -> MeanEstimatorSpec:
    """Estimator spec carrying the true mean of `model` on the n-point design."""
    return MeanEstimatorSpec("known", known_mean=tuple(model.mean(design(n))))


@dataclass(frozen=True)
class MonteCarloConfig:
    """One cell of a size/power study.

    `convention` selects the discrete level from `target_level`
    (see :func:`longrun.combinatorics.critical_value`); the default
    ``"nearest"`` reproduces the published attained levels.
    """

    model: SimulationModel
    n: int
    replicates: int = 1000
    target_level: float = 0.05
    estimator: MeanEstimatorSpec = field(default_factory=MeanEstimatorSpec)
    master_seed: int = 0
    convention: str = "nearest"

    def __post_init__(self):
        if not MIN_N <= self.n <= MAX_N:
            raise PreconditionError(f"n must lie in [{MIN_N}, {MAX_N}], got {self.n}")
        if self.replicates < 1:
            raise PreconditionError(f"replicates must be >= 1, got {self.replicates}")
        if not 0 <= self.master_seed < 2**64:
            raise PreconditionError("master_seed must be a 64-bit unsigned integer")
        if not 0 < self.target_level < 1:
            raise PreconditionError(f"target_level must lie in (0, 1), got {self.target_level}")
        if self.estimator.kind == "known" and len(self.estimator.known_mean) != self.n:
            raise PreconditionError("known_mean does not match n")


@dataclass(frozen=True)
class PowerEstimate:
    rejections: int
    replicates: int
    critical_value: int
    attained_level: Fraction
    config: MonteCarloConfig
    paper_reference_value: float | None = None

    @property
    def rejection_rate(self) -> float:
        return self.rejections / self.replicates

    @property
    def standard_error(self) -> float:
        p = self.rejection_rate
        return math.sqrt(p * (1.0 - p) / self.replicates)

    def to_row(self) -> dict:
        """Flat record with the stable keys of the CSV/JSON output."""
        cfg = self.config
        return {
            "model": cfg.model.id,
            "n": cfg.n,
            "c": cfg.model.c,
            "level_nominal": cfg.target_level,
            "level_attained": float(self.attained_level),
            "critical_value": self.critical_value,
            "rejection_rate": self.rejection_rate,
            "std_err": self.standard_error,
            "replicates": self.replicates,
            "estimator": cfg.estimator.kind,
            "seed": cfg.master_seed,
            "paper_reference_value": self.paper_reference_value,
        }


def _count_rejections(config: MonteCarloConfig, start: int, stop: int) -> int:
    rejections = 0
    for r in range(start, stop):
        data = generate(config.model, config.n, replicate_seed(config.master_seed, config.model, config.n, r))
        try:
            report = run_test(data, config.estimator, config.target_level, config.convention)
        except Exception as exc:
            raise SimulationError(
                f"replicate {r} of model {config.model.id} (n={config.n}, c={config.model.c}) failed: {exc}"
            ) from exc
        rejections += report.reject
    return rejections


def _chunks(total: int, pieces: int) -> list[tuple[int, int]]:
    pieces = max(1, min(pieces, total))
    bounds = np.linspace(0, total, pieces + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _estimates(configs: Sequence[MonteCarloConfig], workers: int, executor: Executor | None):
    if workers <= 1 and executor is None:
        counts = [_count_rejections(cfg, 0, cfg.replicates) for cfg in configs]
    else:
        own = executor is None
        pool = executor or ProcessPoolExecutor(max_workers=workers)
        try:
            futures = [
                [pool.submit(_count_rejections, cfg, a, b) for a, b in _chunks(cfg.replicates, 2 * max(workers, 1))]
                for cfg in configs
            ]
            counts = [sum(f.result() for f in fs) for fs in futures]
        finally:
            if own:
                pool.shutdown()
    out = []
    for cfg, k in zip(configs, counts):
        rec = critical_value(cfg.n, cfg.target_level, cfg.convention)
        out.append(PowerEstimate(k, cfg.replicates, rec.critical_value, rec.attained_level, cfg))
    return out


def estimate_power(config: MonteCarloConfig, workers: int = 1, executor: Executor | None = None) -> PowerEstimate:
    """Rejection rate of the test over `config.replicates` simulated datasets.

    The result is identical for any `workers` count.
    """
    return _estimates([config], workers, executor)[0]


def reproduce_table(
    n_values: Iterable[int] = DEFAULT_N,
    c_values: Iterable[float] = DEFAULT_C,
    levels: Iterable[float] = DEFAULT_LEVELS,
    replicates: int = 1000,
    seed: int = 0,
    estimator: str | MeanEstimatorSpec = "kernel",
    models: Iterable[int] = (1, 2, 3),
    convention: str = "nearest",
    workers: int = 1,
) -> list[PowerEstimate]:
    """Size and power over a grid of models, sample sizes, c and nominal levels.

    Cells that appear in the published table carry its longest-run value
    (as a fraction) in ``paper_reference_value``.
    """
    configs = []
    for model_id in models:
        for n in n_values:
            for c in c_values:
                model = SimulationModel(model_id, c)
                spec = _resolve_estimator(estimator, model, n)
                for level in levels:
                    configs.append(
                        MonteCarloConfig(model, n, replicates, level, spec, seed, convention)
                    )
    estimates = _estimates(configs, workers, None)
    out = []
    for est in estimates:
        cfg = est.config
        cell = published_cell(cfg.model.id, cfg.n, cfg.model.c, cfg.target_level)
        ref = None if cell is None else cell.longest_run / 100
        out.append(PowerEstimate(est.rejections, est.replicates, est.critical_value, est.attained_level, cfg, ref))
    return out


def _resolve_estimator(estimator, model, n):
    if isinstance(estimator, MeanEstimatorSpec):
        return estimator
    if estimator == "known":
        return known_mean_spec(model, n)
    return MeanEstimatorSpec(estimator)
