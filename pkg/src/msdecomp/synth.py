"""Synthetic two-seasonality series with known components.

Randomness comes from ``numpy.random.Generator(PCG64(seed))``; every draw
happens in a fixed order so a seed reproduces a series bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .core import ConfigInvalid, MultiScaleSeries, TimeSeries, validate_multiscale
from .operators import downsample


@dataclass(frozen=True)
class SynthConfig:
    """Generator settings.

    ``amplitude`` is the unit for trend slopes, level jumps and seasonal
    amplitudes, kept separate from ``noise_sigma`` so noiseless series still
    have structure. Outlier spikes are ``outlier_magnitude * noise_sigma``.
    """

    length: int = 3024
    period_short: int = 144
    period_long: int = 1008
    trend_changes: int = 3
    noise_sigma: float = 1.0
    outlier_rate: float = 0.003
    outlier_magnitude: float = 8.0
    warp_strength: float = 0.0
    seed: int = 7
    amplitude: float = 1.0
    # multiplies the level jumps at breakpoints; 0 gives a continuous trend
    jump_scale: float = 1.0
    short_amplitude: float = 2.0
    long_amplitude: float = 3.0
    # recent-window length in which one breakpoint is forced (0 = no constraint)
    recent_window: int = 432
    include_short: bool = True
    include_long: bool = True

    def __post_init__(self):
        if self.length < 1 or self.period_short < 1 or self.period_long < 1:
            raise ConfigInvalid("length and periods must be positive")
        if not self.period_short < self.period_long <= self.length // 2:
            raise ConfigInvalid("need period_short < period_long <= length / 2")
        if not 0.0 <= self.outlier_rate <= 1.0:
            raise ConfigInvalid("outlier_rate must lie in [0, 1]")
        if self.noise_sigma < 0 or self.warp_strength < 0 or self.trend_changes < 0:
            raise ConfigInvalid("noise_sigma, warp_strength and trend_changes must be >= 0")
        if self.outlier_magnitude <= 0 or self.amplitude < 0 or self.jump_scale < 0:
            raise ConfigInvalid("outlier_magnitude must be positive, amplitude and jump_scale "
                                "non-negative")
        if not 0 <= self.recent_window < self.length:
            raise ConfigInvalid("recent_window must lie in [0, length)")

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class GroundTruth:
    series: np.ndarray
    trend: np.ndarray
    seasonal_short: np.ndarray
    seasonal_long: np.ndarray
    noise: np.ndarray
    outliers: np.ndarray
    period_short: int = 0
    period_long: int = 0
    breakpoints: tuple[int, ...] = field(default=())

    def __len__(self) -> int:
        return self.series.size


def _breakpoints(rng, cfg: SynthConfig) -> np.ndarray:
    k = cfg.trend_changes
    if k == 0:
        return np.zeros(0, dtype=int)
    margin = cfg.period_short // 2
    lo, hi = margin, cfg.length - margin
    if cfg.recent_window:
        # last change inside the recent window, away from its edges
        w_lo, w_hi = cfg.length - cfg.recent_window + margin, hi
        last = rng.integers(w_lo, w_hi)
        edges = np.linspace(lo, cfg.length - cfg.recent_window - margin, k)
        rest = [rng.integers(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
        return np.array(rest + [last], dtype=int)
    edges = np.linspace(lo, hi, k + 1)
    return np.array([rng.integers(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])],
                    dtype=int)


def _waveform(rng, t: np.ndarray, period: int, amp: float) -> np.ndarray:
    phases = rng.uniform(0.0, 2.0 * np.pi, size=2)
    w = 2.0 * np.pi / period
    return amp * np.sin(w * t + phases[0]) + 0.5 * amp * np.sin(2.0 * w * t + phases[1])


def generate(cfg: SynthConfig) -> GroundTruth:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n = cfg.length
    t = np.arange(n, dtype=np.float64)
    a = cfg.amplitude

    bps = _breakpoints(rng, cfg)
    slope_max = 2.0 * a / cfg.period_short
    slopes = rng.uniform(-slope_max, slope_max, size=bps.size + 1)
    jumps = (rng.uniform(3.0, 6.0, size=bps.size) * rng.choice([-1.0, 1.0], size=bps.size)
             * a * cfg.jump_scale)
    trend = np.zeros(n)
    level = 0.0
    start = 0
    for i in range(bps.size + 1):
        stop = bps[i] if i < bps.size else n
        trend[start:stop] = level + slopes[i] * (t[start:stop] - start)
        if i < bps.size:
            level = level + slopes[i] * (stop - start) + jumps[i]
        start = stop

    if cfg.warp_strength > 0:
        steps = rng.normal(0.0, 1.0, size=n)
        walk = gaussian_filter1d(np.cumsum(steps), sigma=cfg.period_short / 4.0)
        walk -= walk.mean()
        warped = t + cfg.warp_strength * walk / max(np.abs(walk).max(), 1e-12)
    else:
        warped = t
    s_short = _waveform(rng, warped, cfg.period_short, cfg.short_amplitude * a)
    s_long = _waveform(rng, warped, cfg.period_long, cfg.long_amplitude * a)
    if not cfg.include_short:
        s_short = np.zeros(n)
    if not cfg.include_long:
        s_long = np.zeros(n)

    noise = rng.normal(0.0, cfg.noise_sigma, size=n) if cfg.noise_sigma > 0 else np.zeros(n)
    hits = rng.random(n) < cfg.outlier_rate
    signs = rng.choice([-1.0, 1.0], size=n)
    outliers = np.where(hits, signs * cfg.outlier_magnitude * cfg.noise_sigma, 0.0)

    series = trend + s_short + s_long + noise + outliers
    return GroundTruth(series=series, trend=trend, seasonal_short=s_short,
                       seasonal_long=s_long, noise=noise, outliers=outliers,
                       period_short=cfg.period_short, period_long=cfg.period_long,
                       breakpoints=tuple(int(b) for b in bps))


def split_arrays(series, t_r: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(low, high)``: block means of the older part and the last `t_r` samples."""
    y = np.asarray(series, dtype=np.float64)
    if not 0 < t_r < y.size:
        raise ConfigInvalid(f"high-resolution length {t_r} must lie in (0, {y.size})")
    if (y.size - t_r) % n:
        raise ConfigInvalid(f"older part of {y.size - t_r} samples is not divisible by factor {n}")
    return downsample(y[:y.size - t_r], n), y[y.size - t_r:].copy()


def split_series(series, t_r: int, n: int, period_short: int,
                 period_long: int) -> MultiScaleSeries:
    """Keep the last `t_r` samples at full resolution, block-average the rest."""
    low, high = split_arrays(series, t_r, n)
    m = MultiScaleSeries(high=TimeSeries(high, 1), low=TimeSeries(low, n),
                         factor_n=n, period_short=period_short, period_long=period_long)
    validate_multiscale(m)
    return m


def to_multiscale(gt: GroundTruth, t_r: int, n: int) -> MultiScaleSeries:
    return split_series(gt.series, t_r, n, gt.period_short, gt.period_long)


def fixture_f1(**overrides) -> SynthConfig:
    """The canonical acceptance fixture; keyword arguments override fields."""
    return SynthConfig(**overrides)


# high-resolution window and factor used with fixture_f1
F1_WINDOW = 432
F1_FACTOR = 12
