"""What the coarse-series stage contributes.

Differencing the block-averaged series at the short period cancels the
short seasonal, leaving a series with one seasonality. Its robust
decomposition gives the differenced trend and long seasonal that anchor
the full-resolution solve.
"""

import numpy as np

from msdecomp import generate, lowres
from msdecomp.operators import downsample, seasonal_difference
from msdecomp.synth import F1_FACTOR, F1_WINDOW, fixture_f1, to_multiscale

gt = generate(fixture_f1())
m = to_multiscale(gt, F1_WINDOW, F1_FACTOR)
low = lowres.build_lowres_series(m)
lag = m.low_period_short
g = seasonal_difference(low, lag)
print(f"coarse series: {low.size} samples; differenced at lag {lag}: {g.size}")

# the short seasonal has no effect on the differenced coarse series
short_only = seasonal_difference(downsample(gt.seasonal_short, F1_FACTOR), lag)
print(f"largest differenced short-seasonal value: {np.max(np.abs(short_only)):.2e}")

est = lowres.decompose_lowres(m)
keep = est.diff_trend.size
true_trend = seasonal_difference(downsample(gt.trend, F1_FACTOR), lag)[-keep:]
true_long = seasonal_difference(downsample(gt.seasonal_long, F1_FACTOR), lag)[-keep:]


def rmse(a, b):
    return float(np.sqrt(np.mean((a - b) ** 2)))


print(f"\nover the {keep} coarse samples aligned with the recent window:")
print(f"  differenced trend RMSE          {rmse(est.diff_trend, true_trend):.3f}")
print(f"  differenced long seasonal RMSE  {rmse(est.diff_seasonal_long, true_long):.3f}")
print(f"  their sum RMSE                  "
      f"{rmse(est.diff_trend + est.diff_seasonal_long, true_trend + true_long):.3f}")
print(f"  coarse noise after differencing "
      f"{np.sqrt(2) * gt.noise.std() / np.sqrt(F1_FACTOR):.3f} (for scale)")

level_true = gt.seasonal_long[-F1_WINDOW:].mean()
print(f"\nlong-seasonal mean over the window: estimated {est.seasonal_long_level:.3f}, "
      f"true {level_true:.3f}")
print("differences carry no level, so this scalar is what splits constants between "
      "trend and long seasonal")
