"""ADMM solver for the high-resolution trend / long-seasonal objective.

The objective is

    ||g - Dhat_T x||_1 + lam1 ||z - B x||_2^2 + lam2 ||Dhat x||_1 + lam3 ||Dhat2 x||_1

over ``x = [trend; seasonal_long]``. Each L1 term is split as ``p_i = M_i x``
and the augmented Lagrangian is minimised block-wise: proximal updates of
the ``p_i``, an exact linear solve for ``x``, then dual ascent on the
multipliers ``u_i``. The penalty ``rho`` grows geometrically.

The machinery is written for a generic :class:`SplitProgram` (a sum of
weighted L1 terms plus one optional quadratic) so the low-resolution trend
filter reuses it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import DecompositionError, DimensionMismatch, NonFinite, ValidationError
from .operators import (BandedOperator, bdiag_double, build_aggregation, build_first_diff,
                        build_seasonal_diff, build_second_diff, compose, hstack_double)

log = logging.getLogger(__name__)


class SingularSystem(DecompositionError):
    """The x-update normal matrix is numerically singular."""

    def __init__(self, message: str, smallest_pivot: float):
        super().__init__(f"{message} (smallest pivot {smallest_pivot:.3e})")
        self.smallest_pivot = smallest_pivot


def soft_threshold(v, k):
    """Element-wise ``sign(v) * max(|v| - k, 0)``; the prox of ``k * |.|``."""
    v = np.asarray(v, dtype=np.float64)
    if np.any(np.asarray(k) < 0):
        raise ValidationError("threshold must be non-negative")
    out = np.sign(v) * np.maximum(np.abs(v) - k, 0.0)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# generic split program

@dataclass(frozen=True)
class L1Term:
    """``weight * ||offset - op @ x||_1``; ``offset=None`` means zero."""

    weight: float
    op: BandedOperator
    offset: Optional[np.ndarray] = None

    def target(self) -> np.ndarray:
        return np.zeros(self.op.n_rows) if self.offset is None else self.offset


@dataclass(frozen=True)
class SplitProgram:
    """Sum of L1 terms plus ``quad_weight * ||quad_target - quad_op @ x||^2``.

    ``blocks`` partitions ``x`` into contiguous segments. When every active
    operator annihilates constants on a segment, the normal matrix is
    singular along that constant and the solver returns the solution with
    zero segment mean.
    """

    terms: tuple[L1Term, ...]
    n: int
    quad_weight: float = 0.0
    quad_op: Optional[BandedOperator] = None
    quad_target: Optional[np.ndarray] = None
    blocks: tuple[int, ...] = ()

    def __post_init__(self):
        for t in self.terms:
            if t.op.n_cols != self.n:
                raise DimensionMismatch("every operator must have n columns")
            if t.weight < 0:
                raise ValidationError("term weights must be non-negative")
        if self.quad_op is not None and self.quad_op.n_cols != self.n:
            raise DimensionMismatch("quadratic operator must have n columns")
        if not self.blocks:
            object.__setattr__(self, "blocks", (self.n,))
        if sum(self.blocks) != self.n:
            raise DimensionMismatch("blocks must partition x")

    @property
    def has_quad(self) -> bool:
        return self.quad_op is not None and self.quad_weight > 0

    @cached_property
    def gram(self) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """``(sum of M_i^T M_i over active terms, 2 w B^T B)``, independent of rho."""
        l1 = sp.csr_matrix((self.n, self.n))
        for i in self.active():
            m = self.terms[i].op.to_scipy()
            l1 = l1 + m.T @ m
        quad = sp.csr_matrix((self.n, self.n))
        if self.has_quad:
            b = self.quad_op.to_scipy()
            quad = 2.0 * self.quad_weight * (b.T @ b)
        return l1.tocsr(), quad.tocsr()

    def active(self) -> list[int]:
        return [i for i, t in enumerate(self.terms) if t.weight > 0]

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionMismatch(f"x must have length {self.n}")
        val = sum(t.weight * np.abs(t.target() - t.op.apply(x)).sum() for t in self.terms)
        if self.has_quad:
            r = self.quad_target - self.quad_op.apply(x)
            val += self.quad_weight * float(r @ r)
        return float(val)


@dataclass(frozen=True)
class AdmmConfig:
    rho0: float = 1e-5
    rho_growth: float = 1.15
    rho_max: float = 1e4
    max_iterations: int = 500
    tol_primal: float = 1e-6
    tol_change: float = 1e-8

    def __post_init__(self):
        if not (0 < self.rho0 <= self.rho_max):
            raise ValidationError("need 0 < rho0 <= rho_max")
        if self.rho_growth < 1:
            raise ValidationError("rho_growth must be >= 1")
        if self.max_iterations < 1 or self.tol_primal <= 0 or self.tol_change <= 0:
            raise ValidationError("iteration limit and tolerances must be positive")


@dataclass(frozen=True)
class AdmmState:
    """Iterate of the splitting: ``x``, auxiliaries ``aux[i]``, multipliers ``mult[i]``."""

    x: np.ndarray
    aux: tuple[np.ndarray, ...]
    mult: tuple[np.ndarray, ...]
    rho: float
    iteration: int = 0

    # names used for the three-term objective
    @property
    def p_bar(self):
        return self.aux[0]

    @property
    def p_prime(self):
        return self.aux[1]

    @property
    def p_dprime(self):
        return self.aux[2]

    @property
    def u1(self):
        return self.mult[0]

    @property
    def u2(self):
        return self.mult[1]

    @property
    def u3(self):
        return self.mult[2]


@dataclass(frozen=True)
class SolveReport:
    iterations_run: int
    final_primal_residuals: tuple[float, ...]
    final_objective: float
    converged: bool
    factorizations: int = 0


def initial_state(prog: "SplitProgram | AdmmProblem", rho: float) -> AdmmState:
    prog = _program(prog)
    zeros = tuple(np.zeros(t.op.n_rows) for t in prog.terms)
    return AdmmState(np.zeros(prog.n), zeros, zeros, float(rho))


def _program(p) -> SplitProgram:
    return p.program if isinstance(p, AdmmProblem) else p


class FactorizedSystem:
    """Sparse LU of the x-update matrix ``Q`` for one value of ``rho``.

    Segments on which ``Q`` annihilates constants are handled by pinning the
    segment's first unknown, solving the reduced (nonsingular) system and
    removing the segment mean afterwards. The right-hand side is always
    orthogonal to those constants, so the full residual stays at round-off.
    """

    def __init__(self, prog: SplitProgram, rho: float):
        if rho <= 0:
            raise ValidationError("rho must be positive")
        self.rho = float(rho)
        n = prog.n
        l1, quad = prog.gram
        q = (self.rho * l1 + quad).tocsc()
        self.matrix = q
        scale = abs(q).max() if q.nnz else 0.0
        if scale == 0.0:
            raise SingularSystem("normal matrix is zero", 0.0)

        self.pinned = []          # (start, stop) of segments with a constant null vector
        start = 0
        for size in prog.blocks:
            ind = np.zeros(n)
            ind[start:start + size] = 1.0
            if np.abs(q @ ind).max() <= 1e-12 * scale * np.sqrt(size):
                self.pinned.append((start, start + size))
            start += size
        drop = [s for s, _ in self.pinned]
        self.keep = np.setdiff1d(np.arange(n), drop)
        reduced = q[self.keep][:, self.keep].tocsc()
        try:
            self._lu = spla.splu(reduced, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:  # SuperLU reports exact singularity this way
            raise SingularSystem(f"normal matrix is singular: {exc}", 0.0) from None
        piv = np.abs(self._lu.U.diagonal())
        self.smallest_pivot = float(piv.min())
        if self.smallest_pivot <= 1e-13 * float(piv.max()):
            raise SingularSystem("normal matrix is numerically singular", self.smallest_pivot)
        self.n = n

    def solve(self, h) -> np.ndarray:
        h = np.asarray(h, dtype=np.float64)
        x = np.zeros(self.n)
        x[self.keep] = self._lu.solve(h[self.keep])
        for s, e in self.pinned:
            x[s:e] -= x[s:e].mean()
        return x

    def residual(self, x, h) -> float:
        return float(np.linalg.norm(self.matrix @ x - h))


def rhs(prog: "SplitProgram | AdmmProblem", st: AdmmState) -> np.ndarray:
    """Right-hand side ``h`` of the x-update."""
    prog = _program(prog)
    h = np.zeros(prog.n)
    for i in prog.active():
        h += prog.terms[i].op.apply_transpose(st.mult[i] + st.rho * st.aux[i])
    if prog.has_quad:
        h += 2.0 * prog.quad_weight * prog.quad_op.apply_transpose(prog.quad_target)
    return h


def assemble_normal_matrix(p: "SplitProgram | AdmmProblem", rho: float) -> FactorizedSystem:
    return FactorizedSystem(_program(p), rho)


def x_update(sys: FactorizedSystem, p, st: AdmmState) -> np.ndarray:
    if sys.rho != st.rho:
        raise ValidationError(f"system factorized for rho={sys.rho}, state has rho={st.rho}")
    return sys.solve(rhs(p, st))


def auxiliary_update(p, st: AdmmState) -> tuple[np.ndarray, ...]:
    """Exact minimisers of the augmented Lagrangian in each ``p_i``.

    For the term ``w ||b - p||_1`` coupled to ``M x`` the minimiser is
    ``b - S(b - M x + u / rho, w / rho)``; with ``b = 0`` this reduces to
    ``S(M x - u / rho, w / rho)``.
    """
    prog = _program(p)
    out = []
    for t, u in zip(prog.terms, st.mult):
        mx = t.op.apply(st.x)
        if t.offset is None:
            out.append(soft_threshold(mx - u / st.rho, t.weight / st.rho))
        else:
            out.append(t.offset - soft_threshold(t.offset - mx + u / st.rho, t.weight / st.rho))
    return tuple(out)


def multiplier_update(p, st: AdmmState) -> tuple[np.ndarray, ...]:
    prog = _program(p)
    return tuple(u + st.rho * (a - t.op.apply(st.x))
                 for t, a, u in zip(prog.terms, st.aux, st.mult))


def primal_residuals(p, st: AdmmState) -> tuple[float, ...]:
    """``||p_i - M_i x|| / (1 + ||M_i x||)`` for every term."""
    prog = _program(p)
    res = []
    for t, a in zip(prog.terms, st.aux):
        mx = t.op.apply(st.x)
        res.append(float(np.linalg.norm(a - mx) / (1.0 + np.linalg.norm(mx))))
    return tuple(res)


def augmented_lagrangian(p, st: AdmmState) -> float:
    """Augmented Lagrangian over the active (positive-weight) terms."""
    prog = _program(p)
    val = 0.0
    for i in prog.active():
        t = prog.terms[i]
        r = st.aux[i] - t.op.apply(st.x)
        val += (t.weight * np.abs(t.target() - st.aux[i]).sum()
                + float(st.mult[i] @ r) + 0.5 * st.rho * float(r @ r))
    if prog.has_quad:
        q = prog.quad_target - prog.quad_op.apply(st.x)
        val += prog.quad_weight * float(q @ q)
    return float(val)


def run(p, cfg: AdmmConfig = AdmmConfig(),
        callback: Optional[Callable[[AdmmState, FactorizedSystem], None]] = None,
        ) -> tuple[np.ndarray, SolveReport]:
    """Iterate auxiliary, x and multiplier updates until convergence.

    Factorizations are memoised per ``rho`` for the duration of the run.
    `callback`, if given, is called after every x-update with the state and
    the factorization that produced it.
    """
    prog = _program(p)
    st = initial_state(prog, cfg.rho0)
    cache: dict[float, FactorizedSystem] = {}
    converged = False
    res: tuple[float, ...] = tuple(0.0 for _ in prog.terms)
    it = 0
    for it in range(1, cfg.max_iterations + 1):
        st = replace(st, aux=auxiliary_update(prog, st))
        sys = cache.get(st.rho)
        if sys is None:
            sys = cache[st.rho] = FactorizedSystem(prog, st.rho)
        x_old = st.x
        st = replace(st, x=x_update(sys, prog, st), iteration=it)
        if not np.all(np.isfinite(st.x)):
            raise NonFinite(f"ADMM iterate became non-finite at iteration {it}")
        if callback is not None:
            callback(st, sys)
        st = replace(st, mult=multiplier_update(prog, st))
        res = primal_residuals(prog, st)
        change = np.linalg.norm(st.x - x_old) / (1.0 + np.linalg.norm(st.x))
        if max(res) <= cfg.tol_primal and change <= cfg.tol_change:
            converged = True
            break
        st = replace(st, rho=min(st.rho * cfg.rho_growth, cfg.rho_max))
    report = SolveReport(iterations_run=it, final_primal_residuals=res,
                         final_objective=prog.objective(st.x), converged=converged,
                         factorizations=len(cache))
    log.debug("admm finished: %s", report)
    return st.x, report


# --------------------------------------------------------------------------
# the two-component high-resolution problem

@dataclass(frozen=True)
class AdmmProblem:
    """One instance of the high-resolution objective.

    ``x`` stacks the trend and the long seasonal (``2 * T_r`` entries).
    """

    g_h: np.ndarray
    z: np.ndarray
    op_dhat_td: BandedOperator
    op_b: BandedOperator
    op_dhat: BandedOperator
    op_dhat2: BandedOperator
    lambda1: float
    lambda2: float
    lambda3: float
    program: SplitProgram = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ops = (self.op_dhat_td, self.op_b, self.op_dhat, self.op_dhat2)
        if len({o.n_cols for o in ops}) != 1 or ops[0].n_cols % 2:
            raise DimensionMismatch("all operators must share an even column count 2*T_r")
        g = np.asarray(self.g_h, dtype=np.float64)
        z = np.asarray(self.z, dtype=np.float64)
        if g.shape != (self.op_dhat_td.n_rows,):
            raise DimensionMismatch("g_h length must equal the seasonal-difference row count")
        if z.shape != (self.op_b.n_rows,):
            raise DimensionMismatch("z length must equal the aggregation-difference row count")
        if min(self.lambda1, self.lambda2, self.lambda3) < 0:
            raise ValidationError("lambdas must be non-negative")
        object.__setattr__(self, "g_h", g)
        object.__setattr__(self, "z", z)
        t_r = self.t_r
        prog = SplitProgram(
            terms=(L1Term(1.0, self.op_dhat_td, g),
                   L1Term(float(self.lambda2), self.op_dhat),
                   L1Term(float(self.lambda3), self.op_dhat2)),
            n=2 * t_r, quad_weight=float(self.lambda1), quad_op=self.op_b, quad_target=z,
            blocks=(t_r, t_r))
        object.__setattr__(self, "program", prog)

    @property
    def t_r(self) -> int:
        return self.op_dhat_td.n_cols // 2

    @classmethod
    def build(cls, g_h, z, t_r: int, t_d: int, n: int,
              lambdas: Sequence[float] = (1.0, 0.1, 1.0)) -> "AdmmProblem":
        """Assemble all operators for window ``t_r``, short period ``t_d`` and factor ``n``."""
        d_td = build_seasonal_diff(t_r, t_d)
        b_block = compose(build_seasonal_diff(t_r // n, t_d // n), build_aggregation(t_r, n))
        lam1, lam2, lam3 = lambdas
        return cls(g_h=g_h, z=z,
                   op_dhat_td=hstack_double(d_td),
                   op_b=bdiag_double(b_block),
                   op_dhat=bdiag_double(build_first_diff(t_r)),
                   op_dhat2=bdiag_double(build_second_diff(t_r)),
                   lambda1=lam1, lambda2=lam2, lambda3=lam3)


def objective(p: AdmmProblem, x) -> float:
    return p.program.objective(x)
