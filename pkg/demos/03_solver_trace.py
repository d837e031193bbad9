"""Watch the ADMM solve on the fixture.

Prints the penalty, the largest relative primal residual and the objective
every 25 iterations, then shows that the solution is far below the
objective at zero.
"""

import numpy as np

from msdecomp import admm
from msdecomp.filters import bilateral_denoise
from msdecomp.lowres import decompose_lowres
from msdecomp.operators import seasonal_difference
from msdecomp.pipeline import PipelineConfig
from msdecomp.synth import F1_FACTOR, F1_WINDOW, fixture_f1, generate, to_multiscale

cfg = PipelineConfig()
m = to_multiscale(generate(fixture_f1()), F1_WINDOW, F1_FACTOR)
g_h = seasonal_difference(bilateral_denoise(m.high.values, cfg.bilateral), m.period_short)
est = decompose_lowres(m, cfg.decomposer())
problem = admm.AdmmProblem.build(g_h, est.z, m.high_len, m.period_short, m.factor_n, cfg.lambdas)

print(f"{'iter':>5}{'rho':>11}{'max primal res':>16}{'objective':>12}")


def trace(state, _system):
    if state.iteration % 25 == 0 or state.iteration == 1:
        res = max(admm.primal_residuals(problem, state))
        print(f"{state.iteration:>5}{state.rho:>11.2e}{res:>16.2e}"
              f"{admm.objective(problem, state.x):>12.3f}")


x, report = admm.run(problem, cfg.admm, callback=trace)
print(f"\nstopped after {report.iterations_run} iterations (converged={report.converged})")
print(f"objective {report.final_objective:.3f} vs {admm.objective(problem, np.zeros_like(x)):.3f} "
      f"at x = 0")
fit = np.abs(problem.op_dhat_td.apply(x) - g_h).sum() / np.abs(g_h).sum()
print(f"relative L1 misfit of the differenced data: {fit:.3f}")
print(f"{report.factorizations} factorizations, one per distinct penalty value")
