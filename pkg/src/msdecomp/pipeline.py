"""End-to-end multi-scale decomposition of the high-resolution window."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import admm
from .core import (Decomposition, DecompositionError, DimensionMismatch, LowResEstimates,
                   MultiScaleSeries, ValidationError, validate_multiscale)
from .filters import (BilateralParams, SeasonalFilterParams, bilateral_denoise, center_seasonal,
                      nonlocal_seasonal_filter)
from .lowres import RobustDecomposer, SingleSeasonalDecomposer, decompose_lowres
from .operators import seasonal_difference


@dataclass(frozen=True)
class PipelineConfig:
    """Settings of every stage.

    The high-resolution stage uses `bilateral` and `seasonal_filter`; the
    low-resolution decomposer has its own ``lowres_*`` settings because the
    block-averaged series is far less noisy and much shorter. Defaults were
    calibrated on the synthetic fixture.
    """

    admm: admm.AdmmConfig = admm.AdmmConfig()
    lambdas: tuple[float, float, float] = (1.0, 3.0, 1.0)
    bilateral: BilateralParams = BilateralParams(sigma_factor=3.0)
    # without its own period a large spike has no exact match and stays in the remainder
    seasonal_filter: SeasonalFilterParams = SeasonalFilterParams(
        num_periods=2, phase_half_window=8, sigma_factor=10.0, include_own_period=False)
    lowres_trend_lambdas: tuple[float, float] = (RobustDecomposer.lam_a, RobustDecomposer.lam_b)
    lowres_bilateral: BilateralParams = RobustDecomposer.bilateral
    lowres_seasonal_filter: SeasonalFilterParams = RobustDecomposer.seasonal_filter
    lowres_refine_passes: int = RobustDecomposer.refine_passes
    anchor_long_level: bool = True

    def __post_init__(self):
        if len(self.lambdas) != 3 or min(self.lambdas) < 0:
            raise ValidationError("lambdas must be three non-negative numbers")
        if len(self.lowres_trend_lambdas) != 2 or min(self.lowres_trend_lambdas) < 0:
            raise ValidationError("lowres_trend_lambdas must be two non-negative numbers")
        if self.lowres_refine_passes < 0:
            raise ValidationError("lowres_refine_passes must be >= 0")
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        object.__setattr__(self, "lowres_trend_lambdas",
                           tuple(float(v) for v in self.lowres_trend_lambdas))

    def decomposer(self) -> RobustDecomposer:
        lam_a, lam_b = self.lowres_trend_lambdas
        return RobustDecomposer(lam_a=lam_a, lam_b=lam_b, bilateral=self.lowres_bilateral,
                                seasonal_filter=self.lowres_seasonal_filter,
                                admm_config=self.admm, refine_passes=self.lowres_refine_passes)


class StageError(DecompositionError):
    """Wraps an error with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class StageTimer:
    millis: dict = field(default_factory=dict)

    def run(self, stage, fn, *args, **kwargs):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kwargs)
        except DecompositionError as exc:
            if isinstance(exc, StageError):
                raise
            raise StageError(stage, exc) from exc
        finally:
            self.millis[stage] = self.millis.get(stage, 0.0) + 1e3 * (time.perf_counter() - t0)


def high_res_difference(m: MultiScaleSeries, denoised) -> np.ndarray:
    denoised = np.asarray(denoised, dtype=np.float64)
    if denoised.size != m.high_len:
        raise DimensionMismatch("denoised series must match the high-resolution length")
    return seasonal_difference(denoised, m.period_short)


def split_x(x, t_r: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (2 * t_r,):
        raise DimensionMismatch(f"x must have length {2 * t_r}")
    return x[:t_r].copy(), x[t_r:].copy()


def decompose(m: MultiScaleSeries, cfg: PipelineConfig = PipelineConfig(),
              dec: Optional[SingleSeasonalDecomposer] = None,
              timings: Optional[dict] = None) -> tuple[Decomposition, admm.SolveReport]:
    """Decompose the high-resolution window of `m` into four components.

    Errors from any stage are re-raised as :class:`StageError` naming the
    stage. Pass a dict as `timings` to receive wall-clock milliseconds per
    stage.
    """
    timer = StageTimer()
    timer.run("validate", validate_multiscale, m)
    dec = cfg.decomposer() if dec is None else dec
    raw = np.asarray(m.high.values, dtype=np.float64)
    t_r, t_d = m.high_len, m.period_short

    denoised = timer.run("denoise", bilateral_denoise, raw, cfg.bilateral)
    g_h = timer.run("difference", high_res_difference, m, denoised)
    est: LowResEstimates = timer.run("lowres", decompose_lowres, m, dec)
    problem = timer.run("assemble", admm.AdmmProblem.build, g_h, est.z, t_r, t_d,
                        m.factor_n, cfg.lambdas)
    x, report = timer.run("admm", admm.run, problem, cfg.admm)
    trend, seasonal_long = split_x(x, t_r)

    if cfg.anchor_long_level and est.seasonal_long_level is not None:
        shift = est.seasonal_long_level - seasonal_long.mean()
        seasonal_long += shift
        trend -= shift

    def _short(detail):
        s = nonlocal_seasonal_filter(detail, t_d, cfg.seasonal_filter)
        return center_seasonal(s, t_d)

    seasonal_short, offset = timer.run("seasonal_short", _short, raw - trend - seasonal_long)
    trend = trend + offset
    if timings is not None:
        timings.update(timer.millis)
    return Decomposition.from_components(raw, trend, seasonal_short, seasonal_long), report
