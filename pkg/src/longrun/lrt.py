"""The longest-run test: residuals, median split, longest run, exact decision."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .combinatorics import critical_value, longest_run, p_value
from .errors import SampleTooSmallError
from .estimation import Dataset, MeanEstimatorSpec, ResidualSequence, fit_mean

__all__ = ["MIN_N", "TestReport", "dichotomize", "run_test"]

MIN_N = 4

APPROXIMATION_NOTE = (
    "squared residuals from an estimated mean are only asymptotically independent; "
    "the exact null law is applied at finite n"
)


def dichotomize(residuals: ResidualSequence | np.ndarray) -> np.ndarray:
    """Split squared residuals at their median into a 0/1 sequence.

    The ``n // 2`` largest values become 1 and the rest 0, in design order.
    Ties at the cutoff give the 1 to the smaller index first, so the number
    of ones is always exactly ``n // 2``.
    """
    values = residuals.squared_residuals if isinstance(residuals, ResidualSequence) else residuals
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < MIN_N:
        raise SampleTooSmallError(n, MIN_N)
    top = np.argsort(-values, kind="stable")[: n // 2]
    bits = np.zeros(n, dtype=np.int8)
    bits[top] = 1
    return bits


@dataclass(frozen=True)
class TestReport:
    """Outcome of one longest-run test.

    The test rejects homoscedasticity when `statistic` exceeds
    `critical_value`; `attained_level` is the exact probability of that
    under the null. `p_value` is the exact null probability of a longest
    run at least as long as the one observed.
    """

    __test__ = False  # not a pytest class

    n: int
    statistic: int
    median_squared_residual: float
    critical_value: int
    target_level: float
    attained_level: Fraction
    p_value: Fraction
    reject: bool
    estimator_used: MeanEstimatorSpec
    convention: str = "below"
    note: str = APPROXIMATION_NOTE

    @property
    def decision(self) -> str:
        return "reject H0" if self.reject else "fail to reject H0"

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "statistic": self.statistic,
            "median_squared_residual": self.median_squared_residual,
            "critical_value": self.critical_value,
            "target_level": self.target_level,
            "attained_level": float(self.attained_level),
            "attained_level_exact": _fraction_dict(self.attained_level),
            "p_value": float(self.p_value),
            "p_value_exact": _fraction_dict(self.p_value),
            "decision": self.decision,
            "reject": self.reject,
            "convention": self.convention,
            "estimator": self.estimator_used.to_dict(),
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TestReport":
        est = dict(d["estimator"])
        kind = est.pop("kind")
        return cls(
            n=d["n"],
            statistic=d["statistic"],
            median_squared_residual=d["median_squared_residual"],
            critical_value=d["critical_value"],
            target_level=d["target_level"],
            attained_level=_fraction_from(d["attained_level_exact"]),
            p_value=_fraction_from(d["p_value_exact"]),
            reject=d["reject"],
            estimator_used=MeanEstimatorSpec(kind, **est),
            convention=d["convention"],
            note=d["note"],
        )


def _fraction_dict(f: Fraction) -> dict:
    return {"numerator": str(f.numerator), "denominator": str(f.denominator)}


def _fraction_from(d: dict) -> Fraction:
    return Fraction(int(d["numerator"]), int(d["denominator"]))


def run_test(
    data: Dataset,
    spec: MeanEstimatorSpec,
    target_level: float = 0.05,
    convention: str = "below",
) -> TestReport:
    """Run the longest-run test for heteroscedasticity on `data`.

    Parameters
    ----------
    data : Dataset
        Fixed-design sample, at least 4 observations.
    spec : MeanEstimatorSpec
        Estimator of the mean function.
    target_level : float
        Nominal level in ``(0, 1)``.
    convention : {"below", "nearest"}
        How the discrete attained level is chosen, see
        :func:`longrun.combinatorics.critical_value`.
    """
    if data.n < MIN_N:
        raise SampleTooSmallError(data.n, MIN_N)
    record = critical_value(data.n, target_level, convention)
    residuals = fit_mean(data, spec)
    bits = dichotomize(residuals)
    stat = longest_run(bits)
    return TestReport(
        n=data.n,
        statistic=stat,
        median_squared_residual=float(np.median(residuals.squared_residuals)),
        critical_value=record.critical_value,
        target_level=record.target_level,
        attained_level=record.attained_level,
        p_value=p_value(data.n, stat),
        reject=stat > record.critical_value,
        estimator_used=residuals.estimator_used,
        convention=convention,
    )
