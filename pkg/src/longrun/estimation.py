"""Estimation of the mean function on a fixed design, and the squared residuals it leaves."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import EstimationError, PreconditionError

__all__ = [
    "ESTIMATORS",
    "Dataset",
    "MeanEstimatorSpec",
    "ResidualSequence",
    "auto_bandwidth",
    "bandwidth_grid",
    "fit_mean",
    "loo_cv_curve",
]

ESTIMATORS = ("known", "constant", "ols", "kernel")

GRID_SIZE = 30
# a point whose neighbours carry less total kernel weight than this (self-weight is 1)
# is treated as isolated
_MIN_NEIGHBOUR_WEIGHT = 1e-10
# above this size the per-bandwidth LOO operators are not cached
_CACHE_MAX_N = 400
_CHUNK_ROWS = 512


@dataclass(frozen=True, eq=False)
class Dataset:
    """Fixed-design sample ``(x_i, y_i)`` with `x` sorted nondecreasing."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
            raise PreconditionError("x and y must be 1-d arrays of equal length")
        if x.size == 0:
            raise PreconditionError("dataset is empty")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise PreconditionError("x and y must be finite")
        if np.any(np.diff(x) < 0):
            raise PreconditionError("x must be sorted nondecreasing")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)


@dataclass(frozen=True)
class MeanEstimatorSpec:
    """Which estimator of the mean function to use.

    Parameters
    ----------
    kind : {"known", "constant", "ols", "kernel"}
        ``"known"`` takes the true mean values from `known_mean`;
        ``"ols"`` is a straight-line least-squares fit; ``"kernel"`` is a
        Nadaraya-Watson smoother with a Gaussian kernel.
    bandwidth : float or "auto"
        Kernel bandwidth. ``"auto"`` selects it by leave-one-out
        cross-validation (see :func:`auto_bandwidth`).
    known_mean : tuple of float, optional
        Mean values at the design points, for ``kind="known"`` only.
    loo : bool
        Kernel only: compute each residual from the leave-one-out fit.
    """

    kind: str = "kernel"
    bandwidth: float | str = "auto"
    known_mean: tuple[float, ...] | None = field(default=None, repr=False)
    loo: bool = False

    def __post_init__(self):
        if self.kind not in ESTIMATORS:
            raise PreconditionError(f"unknown estimator {self.kind!r}; expected one of {ESTIMATORS}")
        if self.bandwidth != "auto":
            try:
                bw = float(self.bandwidth)
            except (TypeError, ValueError):
                raise PreconditionError(f"bandwidth must be positive or 'auto', got {self.bandwidth!r}") from None
            if not (bw > 0 and np.isfinite(bw)):
                raise PreconditionError(f"bandwidth must be positive, got {self.bandwidth!r}")
            object.__setattr__(self, "bandwidth", bw)
        if (self.kind == "known") != (self.known_mean is not None):
            raise PreconditionError("known_mean must be given exactly when kind='known'")
        if self.known_mean is not None:
            object.__setattr__(self, "known_mean", tuple(float(v) for v in self.known_mean))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "loo": self.loo}
        if self.kind == "kernel":
            out["bandwidth"] = self.bandwidth
        if self.kind == "known":
            out["known_mean"] = list(self.known_mean)
        return out


@dataclass(frozen=True, eq=False)
class ResidualSequence:
    squared_residuals: np.ndarray
    fitted: np.ndarray
    estimator_used: MeanEstimatorSpec

    @property
    def n(self) -> int:
        return self.squared_residuals.size


def _smooth(x, y, h, loo, chunk=_CHUNK_ROWS):
    """Nadaraya-Watson fit at the design points, in row blocks.

    Returns the fitted values and, per point, the kernel weight carried by
    the other points (self-weight is 1).
    """
    fitted = np.empty(x.size)
    neighbour = np.empty(x.size)
    for start in range(0, x.size, chunk):
        rows = slice(start, min(start + chunk, x.size))
        d = (x[rows, None] - x[None, :]) / h
        w = np.exp(-0.5 * d * d)
        total = w.sum(axis=1)
        neighbour[rows] = total - 1.0
        num = w @ y
        if loo:
            num = num - y[rows]
            total = total - 1.0
        with np.errstate(invalid="ignore", divide="ignore"):
            fitted[rows] = num / total
    return fitted, neighbour


def _nadaraya_watson(x, y, h, loo):
    fitted, neighbour = _smooth(x, y, h, loo)
    isolated = np.flatnonzero(neighbour < _MIN_NEIGHBOUR_WEIGHT)
    if isolated.size:
        raise EstimationError(
            f"bandwidth {h:.4g} leaves design point {isolated[0]} with an empty kernel "
            "neighbourhood; use a larger bandwidth"
        )
    return fitted


def bandwidth_grid(x: np.ndarray, size: int = GRID_SIZE) -> np.ndarray:
    """Logarithmic grid from twice the largest design gap to half the design range."""
    x = np.asarray(x, dtype=float)
    span = x[-1] - x[0]
    if span <= 0:
        raise EstimationError("all design points coincide; the mean cannot be smoothed")
    lo, hi = 2.0 * np.diff(x).max(), span / 2.0
    if lo >= hi:
        raise EstimationError(
            f"design too sparse for cross-validation (largest gap {lo / 2:.4g} vs range {span:.4g}); "
            "use the ols estimator"
        )
    return np.geomspace(lo, hi, size)


@lru_cache(maxsize=32)
def _loo_operators(x_bytes: bytes, grid_bytes: bytes):
    x = np.frombuffer(x_bytes)
    grid = np.frombuffer(grid_bytes)
    d = x[:, None] - x[None, :]
    w = np.exp(-0.5 * (d[None, :, :] / grid[:, None, None]) ** 2)
    idx = np.arange(x.size)
    w[:, idx, idx] = 0.0
    den = w.sum(axis=2)
    # rows with no neighbour weight get an infinite CV error
    ok = (den >= _MIN_NEIGHBOUR_WEIGHT).all(axis=1)
    den[den < _MIN_NEIGHBOUR_WEIGHT] = 1.0
    ops = w / den[:, :, None]
    ops.flags.writeable = False
    ok.flags.writeable = False
    return ops, ok


def loo_cv_curve(data: Dataset, grid: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Leave-one-out squared prediction error of the kernel smoother over a bandwidth grid.

    Returns
    -------
    grid : ndarray
        Bandwidths.
    errors : ndarray
        Mean LOO squared error per bandwidth; ``inf`` where some point has
        no neighbours.
    """
    if grid is None:
        grid = bandwidth_grid(data.x)
    grid = np.ascontiguousarray(grid, dtype=float)
    if data.n <= _CACHE_MAX_N:
        ops, ok = _loo_operators(np.ascontiguousarray(data.x).tobytes(), grid.tobytes())
        pred = ops @ data.y
        errors = np.mean((data.y[None, :] - pred) ** 2, axis=1)
        return grid, np.where(ok, errors, np.inf)
    errors = np.empty(grid.size)
    for i, h in enumerate(grid):
        pred, neighbour = _smooth(data.x, data.y, h, loo=True)
        ok = (neighbour >= _MIN_NEIGHBOUR_WEIGHT).all()
        errors[i] = np.mean((data.y - pred) ** 2) if ok else np.inf
    return grid, errors


def auto_bandwidth(data: Dataset) -> float:
    """Bandwidth minimising the leave-one-out CV error over :func:`bandwidth_grid`.

    Requires at least 10 observations.
    """
    if data.n < 10:
        raise EstimationError(
            f"automatic bandwidth needs n >= 10 (got {data.n}); use the ols estimator instead"
        )
    grid, errors = loo_cv_curve(data)
    if not np.isfinite(errors).any():
        raise EstimationError("no bandwidth in the grid gives a finite cross-validation error")
    return float(grid[np.argmin(errors)])


def fit_mean(data: Dataset, spec: MeanEstimatorSpec) -> ResidualSequence:
    """Fit the mean function and return squared residuals at the design points.

    For the kernel estimator the returned ``estimator_used`` carries the
    numeric bandwidth actually applied.
    """
    x, y = data.x, data.y
    if spec.kind == "known":
        if len(spec.known_mean) != data.n:
            raise PreconditionError(f"known_mean has length {len(spec.known_mean)}, expected {data.n}")
        fitted = np.array(spec.known_mean)
    elif spec.kind == "constant":
        fitted = np.full(data.n, y.mean())
    elif spec.kind == "ols":
        design = np.column_stack([np.ones(data.n), x])
        coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
        if rank < 2:
            raise EstimationError("linear fit is singular: all design points coincide")
        fitted = design @ coef
    else:
        h = auto_bandwidth(data) if spec.bandwidth == "auto" else spec.bandwidth
        fitted = _nadaraya_watson(x, y, h, spec.loo)
        spec = replace(spec, bandwidth=h)

    resid = y - fitted
    return ResidualSequence(squared_residuals=resid * resid, fitted=fitted, estimator_used=spec)
