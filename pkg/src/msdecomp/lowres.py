"""Decomposition of the augmented low-resolution series.

Seasonal differencing at the short low-resolution period removes the short
seasonal component, leaving one seasonality (the long period). A
single-seasonality robust decomposer then splits the differenced series
into a differenced trend and a differenced long seasonal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import admm
from .core import LowResEstimates, MultiScaleSeries, TooShort, validate_multiscale
from .filters import (BilateralParams, SeasonalFilterParams, bilateral_denoise, center_seasonal,
                      nonlocal_seasonal_filter)
from .operators import (build_first_diff, build_second_diff, build_seasonal_diff, downsample,
                        identity, seasonal_difference)

# (series, period) -> (trend, seasonal, remainder)
SingleSeasonalDecomposer = Callable[[np.ndarray, int], tuple[np.ndarray, np.ndarray, np.ndarray]]


def augment_lowres(low, high, n: int) -> np.ndarray:
    """`low` followed by the `n`-block means of `high`; no further checks."""
    return np.concatenate([np.asarray(low, dtype=np.float64), downsample(high, n)])


def build_lowres_series(m: MultiScaleSeries) -> np.ndarray:
    """Stored history followed by the block-averaged high-resolution window."""
    validate_multiscale(m)
    return augment_lowres(m.low.values, m.high.values, m.factor_n)


def lad_trend(series, period: Optional[int], lam_a: float = 1.0, lam_b: float = 10.0,
              cfg: admm.AdmmConfig = admm.AdmmConfig()) -> np.ndarray:
    """Robust trend with sparse first and second differences.

    Solves ``min ||y - t||_1 + lam_a ||D t||_1 + lam_b ||D2 t||_1``. With a
    `period`, the data term compares lag-`period` differences instead,
    which makes it blind to any exactly periodic component; the level is
    then undetermined and the result has zero mean.
    """
    y = np.asarray(series, dtype=np.float64)
    n = y.size
    if period is None:
        data = admm.L1Term(1.0, identity(n), y)
    else:
        data = admm.L1Term(1.0, build_seasonal_diff(n, period), seasonal_difference(y, period))
    prog = admm.SplitProgram(
        terms=(data, admm.L1Term(lam_a, build_first_diff(n)),
               admm.L1Term(lam_b, build_second_diff(n))),
        n=n)
    trend, _ = admm.run(prog, cfg)
    return trend


@dataclass(frozen=True)
class RobustDecomposer:
    """Denoise, robust trend, non-local seasonal; a simplified RobustSTL.

    Instances are callables satisfying :data:`SingleSeasonalDecomposer`.
    """

    lam_a: float = 1.0
    # a light curvature penalty lets the boxes that differencing turns level
    # jumps into stay in the trend
    lam_b: float = 0.3
    bilateral: BilateralParams = BilateralParams(sigma_factor=3.0)
    # excluding the sample's own period keeps isolated spikes out of the seasonal
    seasonal_filter: SeasonalFilterParams = SeasonalFilterParams(
        num_periods=2, phase_half_window=1, sigma_factor=10.0, include_own_period=False)
    admm_config: admm.AdmmConfig = admm.AdmmConfig()
    refine_passes: int = 0

    def __call__(self, series, period: int):
        y = np.asarray(series, dtype=np.float64)
        if period < 1 or y.size < 2 * period:
            raise TooShort(f"need at least two periods ({2 * period} samples), got {y.size}")
        clean = bilateral_denoise(y, self.bilateral)
        trend = lad_trend(clean, period, self.lam_a, self.lam_b, self.admm_config)
        detrended = clean - trend
        # the trend fit ignores the level; put it back before filtering
        trend = trend + float(np.median(detrended))
        seasonal = nonlocal_seasonal_filter(clean - trend, period, self.seasonal_filter)
        seasonal, offset = center_seasonal(seasonal, period)
        trend = trend + offset
        for _ in range(self.refine_passes):
            trend = lad_trend(clean - seasonal, None, self.lam_a, self.lam_b, self.admm_config)
            seasonal = nonlocal_seasonal_filter(clean - trend, period, self.seasonal_filter)
            seasonal, offset = center_seasonal(seasonal, period)
            trend = trend + offset
        remainder = y - trend - seasonal
        return trend, seasonal, remainder


def default_robust_decomposer(series, period: int):
    return RobustDecomposer()(series, period)


def long_seasonal_profile(diff_seasonal, t_short: int, t_long: int,
                          smooth: float = 1e-3) -> np.ndarray:
    """Recover a zero-mean ``t_long``-periodic profile from its ``t_short`` differences.

    ``diff_seasonal[k]`` estimates ``w[(k + t_short) % t_long] - w[k % t_long]``.
    Differences only fix the profile up to a ``t_short``-periodic function;
    a small circular first-difference penalty selects the smoothest one and
    a zero-sum constraint removes the constant.
    """
    d = np.asarray(diff_seasonal, dtype=np.float64)
    k = np.arange(d.size)
    rows = np.zeros((d.size, t_long))
    rows[k, (k + t_short) % t_long] += 1.0
    rows[k, k % t_long] -= 1.0
    circ = np.eye(t_long, k=1) - np.eye(t_long)
    circ[-1, 0] = 1.0
    weight = np.sqrt(smooth * d.size / t_long)
    lhs = np.vstack([rows, weight * circ, np.sqrt(d.size) * np.ones((1, t_long))])
    target = np.concatenate([d, np.zeros(t_long + 1)])
    w, *_ = np.linalg.lstsq(lhs, target, rcond=None)
    return w - w.mean()


def decompose_lowres(m: MultiScaleSeries,
                     dec: Optional[SingleSeasonalDecomposer] = None) -> LowResEstimates:
    """Differenced trend and long seasonal over the high-resolution window."""
    dec = default_robust_decomposer if dec is None else dec
    low = build_lowres_series(m)
    tdl, twl, trl = m.low_period_short, m.low_period_long, m.low_window_len
    g_low = seasonal_difference(low, tdl)
    trend, seasonal, _ = dec(g_low, twl)
    keep = trl - tdl
    # mean of the long seasonal over the window, from the periodic profile
    profile = long_seasonal_profile(seasonal, tdl, twl)
    window_phase = (np.arange(low.size - trl, low.size)) % twl
    level = float(profile[window_phase].mean())
    return LowResEstimates(diff_trend=np.asarray(trend)[-keep:],
                           diff_seasonal_long=np.asarray(seasonal)[-keep:],
                           seasonal_long_level=level)
