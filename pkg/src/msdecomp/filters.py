"""Edge-preserving bilateral smoothing and non-local seasonal filtering."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import TooShort, ValidationError

def robust_scale(s) -> float:
    """Noise scale estimate: 1.4826 times the MAD of first differences.

    Falls back to a tiny positive value when the differences have zero MAD
    (piecewise-constant or very short input) so kernels stay well defined.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.size < 2:
        return 1e-12
    d = np.diff(s)
    scale = 1.4826 * float(np.median(np.abs(d - np.median(d))))
    floor = 1e-9 * max(1.0, float(np.max(np.abs(s))))
    return max(scale, floor)


@dataclass(frozen=True)
class BilateralParams:
    """Window and kernel widths of the bilateral filter.

    ``sigma_value=None`` means "estimate from the data": ``sigma_factor``
    times :func:`robust_scale`.
    """

    half_window: int = 5
    sigma_index: float = 2.0
    sigma_value: Optional[float] = None
    sigma_factor: float = 1.0

    def __post_init__(self):
        if self.half_window < 1 or self.sigma_index <= 0:
            raise ValidationError("half_window and sigma_index must be positive")
        if self.sigma_value is not None and self.sigma_value <= 0:
            raise ValidationError("sigma_value must be positive")
        if self.sigma_factor <= 0:
            raise ValidationError("sigma_factor must be positive")


@dataclass(frozen=True)
class SeasonalFilterParams:
    """Neighbourhood of the non-local seasonal filter.

    ``num_periods`` periods are searched on each side, ``phase_half_window``
    samples around the matching phase. ``include_own_period`` controls
    whether the sample's own period (offset ``k = 0``) is a candidate.
    Value similarity is scaled as in :class:`BilateralParams`.
    """

    num_periods: int = 2
    phase_half_window: int = 1
    sigma_value: Optional[float] = None
    include_own_period: bool = True
    sigma_factor: float = 1.0

    def __post_init__(self):
        if self.num_periods < 1 or self.phase_half_window < 0:
            raise ValidationError("num_periods must be >= 1 and phase_half_window >= 0")
        if self.sigma_value is not None and self.sigma_value <= 0:
            raise ValidationError("sigma_value must be positive")
        if self.sigma_factor <= 0:
            raise ValidationError("sigma_factor must be positive")


def _weighted_mean(s: np.ndarray, idx: np.ndarray, valid: np.ndarray,
                   base_log_w: np.ndarray, sigma_value: float) -> np.ndarray:
    # idx, valid, base_log_w: (n, m) candidate tables. Averaging deviations
    # from the centre keeps constant windows exactly constant; weights are
    # scaled by the row maximum so distant-only rows tend to the nearest
    # candidates instead of underflowing.
    centre = s[:, None]
    dev = np.where(valid, s[np.where(valid, idx, 0)] - centre, 0.0)
    log_w = np.where(valid, base_log_w - dev ** 2 / (2.0 * sigma_value ** 2), -np.inf)
    top = log_w.max(axis=1, keepdims=True)
    top[~np.isfinite(top)] = 0.0
    w = np.exp(log_w - top)
    total = w.sum(axis=1)
    shift = np.divide((w * dev).sum(axis=1), total, out=np.zeros(s.size), where=total > 0)
    return s + shift


def bilateral_denoise(s, p: BilateralParams = BilateralParams()) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.size == 0:
        return s.copy()
    sv = p.sigma_value if p.sigma_value is not None else p.sigma_factor * robust_scale(s)
    offsets = np.arange(-p.half_window, p.half_window + 1)
    idx = np.arange(s.size)[:, None] + offsets[None, :]
    valid = (idx >= 0) & (idx < s.size)
    base = np.broadcast_to(-(offsets ** 2) / (2.0 * p.sigma_index ** 2), idx.shape)
    return _weighted_mean(s, idx, valid, base, sv)


def nonlocal_seasonal_filter(s, t_period: int,
                             p: SeasonalFilterParams = SeasonalFilterParams()) -> np.ndarray:
    """Similarity-weighted mean over same-phase samples of neighbouring periods."""
    s = np.asarray(s, dtype=np.float64)
    if t_period < 1 or s.size < 2 * t_period:
        raise TooShort(f"need at least two periods ({2 * t_period} samples), got {s.size}")
    sv = p.sigma_value if p.sigma_value is not None else p.sigma_factor * robust_scale(s)
    ks = np.arange(-p.num_periods, p.num_periods + 1)
    if not p.include_own_period:
        ks = ks[ks != 0]
    deltas = np.arange(-p.phase_half_window, p.phase_half_window + 1)
    offsets = (ks[:, None] * t_period + deltas[None, :]).ravel()
    idx = np.arange(s.size)[:, None] + offsets[None, :]
    valid = (idx >= 0) & (idx < s.size)
    return _weighted_mean(s, idx, valid, np.zeros(idx.shape), sv)


def phase_means(s, t_period: int) -> np.ndarray:
    """Mean of `s` at each phase ``0 .. t_period - 1`` (partial periods allowed)."""
    s = np.asarray(s, dtype=np.float64)
    phase = np.arange(s.size) % t_period
    return np.bincount(phase, weights=s, minlength=t_period) / np.bincount(phase, minlength=t_period)


def center_seasonal(seasonal, t_period: int) -> tuple[np.ndarray, float]:
    """Shift a seasonal estimate so its per-phase profile averages to zero.

    Returns the centred seasonal and the removed offset, which callers add
    to the trend to keep the additive identity intact.
    """
    seasonal = np.asarray(seasonal, dtype=np.float64)
    offset = float(phase_means(seasonal, min(t_period, seasonal.size)).mean())
    return seasonal - offset, offset
