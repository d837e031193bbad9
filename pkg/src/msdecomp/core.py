"""Domain types and the multi-scale storage model.

All sequences are stored chronologically (oldest sample first) as float64
numpy arrays. Containers are frozen dataclasses and their arrays are marked
read-only on construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class DecompositionError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(DecompositionError, ValueError):
    """Input data or configuration violates a documented invariant."""


class PeriodNotDivisible(ValidationError):
    pass


class InsufficientHistory(ValidationError):
    pass


class NonFinite(ValidationError):
    pass


class PeriodOrder(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class TooShort(ValidationError):
    pass


class NotDivisible(ValidationError):
    pass


class ConfigInvalid(ValidationError):
    pass


def as_series(values, name: str = "values") -> np.ndarray:
    """Return `values` as a read-only 1-D float64 array, rejecting NaN/Inf."""
    arr = np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{name} contains NaN or Inf")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled values; `step` is the number of base ticks per sample."""

    values: np.ndarray
    step: int = 1

    def __post_init__(self):
        vals = as_series(self.values)
        if vals.size == 0:
            raise ValidationError("a time series needs at least one sample")
        if int(self.step) < 1:
            raise ValidationError(f"step must be >= 1, got {self.step}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "step", int(self.step))

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class MultiScaleSeries:
    """A recent high-resolution window plus block-averaged older history.

    Parameters
    ----------
    high : TimeSeries
        The most recent ``T_r`` samples at full resolution (step 1).
    low : TimeSeries
        Older history averaged over blocks of ``factor_n`` samples.
    factor_n : int
        Down-sampling factor ``N``.
    period_short, period_long : int
        Seasonal periods ``T_d < T_w`` in base ticks.

    Construction does not validate; call :func:`validate_multiscale`.
    """

    high: TimeSeries
    low: TimeSeries
    factor_n: int
    period_short: int
    period_long: int

    @property
    def high_len(self) -> int:
        return len(self.high)

    @property
    def low_period_short(self) -> int:
        return self.period_short // self.factor_n

    @property
    def low_period_long(self) -> int:
        return self.period_long // self.factor_n

    @property
    def low_window_len(self) -> int:
        return self.high_len // self.factor_n


def validate_multiscale(m: MultiScaleSeries) -> None:
    """Raise a :class:`ValidationError` subclass unless `m` is usable."""
    n, td, tw, tr = m.factor_n, m.period_short, m.period_long, m.high_len
    if n < 1 or td < 1 or tw < 1:
        raise ValidationError("factor and periods must be positive integers")
    for arr, label in ((m.high.values, "high"), (m.low.values, "low")):
        if not np.all(np.isfinite(arr)):
            raise NonFinite(f"{label} series contains NaN or Inf")
    if td >= tw:
        raise PeriodOrder(f"period_short ({td}) must be < period_long ({tw})")
    if m.high.step != 1:
        raise ValidationError("high-resolution series must have step 1")
    if m.low.step != n:
        raise ValidationError(f"low-resolution step {m.low.step} != factor {n}")
    for value, label in ((tr, "high-resolution length"), (td, "period_short"), (tw, "period_long")):
        if value % n:
            raise PeriodNotDivisible(f"{label} {value} is not divisible by factor {n}")
    if tr < 2 * td + 2:
        raise TooShort(f"high-resolution length {tr} < 2*period_short + 2 = {2 * td + 2}")
    total = len(m.low) + tr // n
    need = 2 * (tw // n) + td // n
    if total < need:
        raise InsufficientHistory(
            f"low-resolution coverage {total} < 2*T_w/N + T_d/N = {need}"
        )


@dataclass(frozen=True)
class Decomposition:
    """High-resolution components; `remainder` closes the additive identity."""

    trend: np.ndarray
    seasonal_short: np.ndarray
    seasonal_long: np.ndarray
    remainder: np.ndarray

    def __post_init__(self):
        arrays = [as_series(getattr(self, f), f) for f in
                  ("trend", "seasonal_short", "seasonal_long", "remainder")]
        if len({a.size for a in arrays}) != 1:
            raise DimensionMismatch("all components must have the same length")
        for name, arr in zip(("trend", "seasonal_short", "seasonal_long", "remainder"), arrays):
            object.__setattr__(self, name, arr)

    @classmethod
    def from_components(cls, observed, trend, seasonal_short, seasonal_long) -> "Decomposition":
        """Build a decomposition whose remainder is ``observed`` minus the rest."""
        observed = np.asarray(observed, dtype=np.float64)
        remainder = observed - trend - seasonal_short - seasonal_long
        return cls(trend, seasonal_short, seasonal_long, remainder)

    def __len__(self) -> int:
        return self.trend.size


def reconstruct(d: Decomposition) -> np.ndarray:
    return d.trend + d.seasonal_short + d.seasonal_long + d.remainder


@dataclass(frozen=True)
class LowResEstimates:
    """Differenced low-resolution trend and long seasonal over the recent window.

    ``seasonal_long_level`` is the estimated mean of the long seasonal
    component over the high-resolution window. The differenced targets
    carry no level information, so this scalar is what pins the split of
    constants between trend and long seasonal. ``None`` disables anchoring.
    """

    diff_trend: np.ndarray
    diff_seasonal_long: np.ndarray
    seasonal_long_level: Optional[float] = None

    def __post_init__(self):
        a = as_series(self.diff_trend, "diff_trend")
        b = as_series(self.diff_seasonal_long, "diff_seasonal_long")
        if a.size != b.size:
            raise DimensionMismatch("diff_trend and diff_seasonal_long lengths differ")
        object.__setattr__(self, "diff_trend", a)
        object.__setattr__(self, "diff_seasonal_long", b)

    @property
    def z(self) -> np.ndarray:
        """Stacked targets for the low-resolution consistency term."""
        return np.concatenate([self.diff_trend, self.diff_seasonal_long])
