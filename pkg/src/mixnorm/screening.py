"""Safe group screening for the regularization path.

The dual feasible region is F = {theta : ||B_i^T theta||_qbar <= 1 for all
groups i}, and the dual optimum theta*(lam) is the projection of Y/lam onto
F, related to the primal optimum by theta*(lam) = (Y - B X*) / lam.  A group
is discardable whenever ||B_i^T theta*(lam)||_qbar < 1, and although
theta*(lam) is unknown before solving, it can be trapped in a ball built
from a previously solved parameter lam_old > lam_new:

    a = (Y/lam_new - theta_old) / 2
    b = Y/lam_old - theta_old            if lam_old < lam_max
      = B_* d_max                        if lam_old = lam_max
    v = a - (<a,b>/||b||^2) b            (coefficient clamped at 0)
    theta*(lam_new) lies in ball(theta_old + v, ||v||)

where B_* is the group attaining lam_max = max_i ||B_i^T Y||_qbar and d_max
is the Hoelder-equality direction pairing with B_*^T (Y/lam_max).  Combined
with the operator bound ||B_i^T u||_qbar <= T_i ||u||_2, the test

    ||B_i^T center||_qbar < 1 - T_i * radius

certifies X*_i = 0 without touching the unsolved problem.  Theta estimates
coming from inexact primal solutions are rescaled into F first.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidParameterError
from .model import (
    GroupPartition,
    GroupedVector,
    ProblemInstance,
    QKind,
    classify_q,
    dual_exponent,
    group_norms,
    lq_norm,
)
from .solver import SolveResult, SolverConfig, solve

_REL_SLACK = 1e-12


class LambdaMax(NamedTuple):
    """Smallest penalty that zeroes everything, and the group attaining it."""

    value: float
    group: int


def lambda_max(inst: ProblemInstance) -> LambdaMax:
    """max_i ||B_i^T Y||_qbar; the solution is identically zero iff lam >= it."""
    corr = inst.B.T @ inst.Y
    norms = group_norms(corr, inst.partition, dual_exponent(inst.q))
    g = int(np.argmax(norms))  # lowest index on ties
    return LambdaMax(float(norms[g]), g)


@dataclass(frozen=True)
class DualPoint:
    """A dual estimate theta tied to the penalty it came from."""

    theta: np.ndarray
    lam: float


def dual_from_primal(inst: ProblemInstance, X: GroupedVector) -> DualPoint:
    """Feasible dual point (Y - B x) / lam, rescaled into F.

    At the exact primal optimum the raw point is already feasible and the
    rescale is a no-op.  With an inexact X it can poke slightly outside F,
    and screening safety rests on feasibility, so the division by
    ``dual_feasibility_scale`` is not optional.
    """
    if inst.lam <= 0:
        raise InvalidParameterError("dual point requires lam > 0")
    theta = (inst.Y - inst.B @ X.values) / inst.lam
    theta = theta / dual_feasibility_scale(inst, theta)
    return DualPoint(theta, inst.lam)


def dual_feasibility_scale(inst: ProblemInstance, theta: np.ndarray) -> float:
    """max(1, max_i ||B_i^T theta||_qbar); dividing theta by it lands in F."""
    norms = group_norms(inst.B.T @ theta, inst.partition, dual_exponent(inst.q))
    return max(1.0, float(norms.max()))


def group_bound_constant(block: np.ndarray, qbar: float) -> float:
    """Smallest T with ||block^T u||_qbar <= T ||u||_2 for all u.

    Rows of block^T are the block's columns, so T is the qbar-norm of the
    vector of column 2-norms (max column norm when qbar = inf).
    """
    col_norms = np.sqrt(np.sum(block * block, axis=0))
    return lq_norm(col_norms, qbar)


@dataclass(frozen=True)
class GroupBoundCache:
    """Per-group operator-bound constants, computed once per instance."""

    T: np.ndarray


def group_bound_cache(inst: ProblemInstance) -> GroupBoundCache:
    col_norms = np.sqrt(np.sum(inst.B * inst.B, axis=0))
    return GroupBoundCache(group_norms(col_norms, inst.partition, dual_exponent(inst.q)))


def hoelder_direction(u: np.ndarray, q: float) -> np.ndarray:
    """Unit-q-norm d with <d, u> = ||u||_qbar (Hoelder equality).

    Finite q in (1, inf): d = sgn(u) |u|^(qbar-1), rescaled.  q = inf pairs
    with the l1 norm, so d = sgn(u); q = 1 pairs with the max norm, so d is
    the signed coordinate vector at the largest |u_j| (lowest index on
    ties).
    """
    u = np.asarray(u, dtype=np.float64)
    if not np.any(u):
        raise InvalidParameterError("cannot build a pairing direction for u = 0")
    kind = classify_q(q)
    if kind is QKind.INF:
        d = np.sign(u).astype(np.float64)
    elif kind is QKind.ONE:
        d = np.zeros_like(u)
        j = int(np.argmax(np.abs(u)))
        d[j] = np.sign(u[j])
    else:
        qbar = q / (q - 1.0)
        d = np.sign(u) * np.power(np.abs(u), qbar - 1.0)
    return d / lq_norm(d, q)


@dataclass(frozen=True)
class ScreeningBall:
    """center/radius trapping theta*(lam_new); ``degenerate`` marks the
    fallback taken when the reference direction b vanished.

    ``ab_inner`` records <a, b> before the nonnegative clamp.  The theory
    says it cannot be negative (up to rounding), and keeping it around lets
    callers audit that premise.
    """

    center: np.ndarray
    radius: float
    degenerate: bool = False
    ab_inner: float = 0.0


def screening_ball(inst: ProblemInstance, lam_new: float, lam_old: float,
                   theta_old: DualPoint, lmax: LambdaMax | None = None) -> ScreeningBall:
    """Ball containing theta*(lam_new), built from the solution at lam_old."""
    if not (0 < lam_new < lam_old):
        raise InvalidParameterError(
            f"need 0 < lam_new < lam_old, got lam_new={lam_new!r}, lam_old={lam_old!r}"
        )
    lmax = lmax or lambda_max(inst)
    if lam_old > lmax.value * (1.0 + 1e-9):
        raise InvalidParameterError("lam_old exceeds the zero-solution threshold")
    theta = theta_old.theta / dual_feasibility_scale(inst, theta_old.theta)
    a = 0.5 * (inst.Y / lam_new - theta)
    if lam_old >= lmax.value * (1.0 - _REL_SLACK):
        u = inst.block(lmax.group).T @ (inst.Y / lmax.value)
        b = inst.block(lmax.group) @ hoelder_direction(u, inst.q)
    else:
        b = inst.Y / lam_old - theta
    bb = float(np.dot(b, b))
    if bb == 0.0:
        return ScreeningBall(theta + a, float(np.linalg.norm(a)), degenerate=True)
    ab = float(np.dot(a, b))
    coef = max(0.0, ab / bb)
    v = a - coef * b
    return ScreeningBall(theta + v, float(np.linalg.norm(v)), degenerate=False,
                         ab_inner=ab)


def discard_from_ball(inst: ProblemInstance, ball: ScreeningBall,
                      cache: GroupBoundCache | None = None) -> np.ndarray:
    """Boolean mask, True where the ball test certifies the group is zero."""
    cache = cache or group_bound_cache(inst)
    norms = group_norms(inst.B.T @ ball.center, inst.partition, dual_exponent(inst.q))
    return norms < 1.0 - cache.T * ball.radius


def screen_groups(inst: ProblemInstance, lam_new: float, lam_old: float,
                  theta_old: DualPoint, cache: GroupBoundCache | None = None) -> np.ndarray:
    """Safe discard mask for lam_new given the dual estimate at lam_old.

    lam_new at or above lambda_max discards everything outright.
    """
    if lam_new <= 0:
        raise InvalidParameterError("lam_new must be positive")
    lmax = lambda_max(inst)
    if lam_new >= lmax.value * (1.0 - _REL_SLACK):
        return np.ones(inst.partition.s, dtype=bool)
    ball = screening_ball(inst, lam_new, lam_old, theta_old, lmax)
    return discard_from_ball(inst, ball, cache)


# ---------------------------------------------------------------------------
# sequential screening along a decreasing parameter sequence

ZERO_GROUP_NORM = 1e-6


@dataclass
class SequentialStep:
    lam: float
    mask: np.ndarray
    solution: np.ndarray
    objective: float
    iterations: int
    groups_kept: int
    rejection_ratio: float
    screen_time: float
    solve_time: float


@dataclass
class SequentialScreenResult:
    lam_max: float
    steps: list[SequentialStep] = field(default_factory=list)

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([st.lam for st in self.steps])

    @property
    def rejection_ratios(self) -> np.ndarray:
        return np.array([st.rejection_ratio for st in self.steps])


def reduced_instance(inst: ProblemInstance, keep: np.ndarray, lam: float
                     ) -> tuple[ProblemInstance, np.ndarray]:
    """Sub-problem over the kept groups; also returns the column mask."""
    sizes = inst.partition.sizes_array()
    col_keep = np.repeat(keep, sizes)
    sub_part = GroupPartition(tuple(int(s) for s in sizes[keep]))
    sub = ProblemInstance(inst.B[:, col_keep], inst.Y, sub_part, inst.q, lam)
    return sub, col_keep


def _rejection_ratio(discarded: int, x_full: np.ndarray, inst: ProblemInstance) -> float:
    true_zero = int(np.count_nonzero(
        group_norms(x_full, inst.partition, inst.q) <= ZERO_GROUP_NORM))
    return discarded / true_zero if true_zero > 0 else 0.0


def screen_sequential(inst: ProblemInstance, lambdas, solver_config: SolverConfig | None = None,
                      solve_fn: Callable[[ProblemInstance, GroupedVector], SolveResult] | None = None,
                      warm_start: bool = True) -> SequentialScreenResult:
    """Screen-then-solve down a strictly decreasing penalty sequence.

    Each step screens against the previous step's dual estimate (the very
    first against Y/lam_max), solves the reduced problem warm-started from
    the previous solution, and re-embeds zeros for the discarded groups.
    A repeated lambda reuses the previous mask as is.
    """
    lambdas = np.asarray(lambdas, dtype=np.float64).ravel()
    if lambdas.size == 0 or np.any(lambdas <= 0):
        raise InvalidParameterError("lambda sequence must be positive and nonempty")
    if np.any(np.diff(lambdas) > 0):
        raise InvalidParameterError("lambda sequence must be nonincreasing")
    solver_config = solver_config or SolverConfig()
    if solve_fn is None:
        def solve_fn(sub, start):  # noqa: D401 - tiny closure
            return solve(sub, solver_config, x0=start)

    lmax = lambda_max(inst)
    cache = group_bound_cache(inst)
    result = SequentialScreenResult(lam_max=lmax.value)
    s = inst.partition.s
    prev_lam = lmax.value
    prev_x = np.zeros(inst.p)
    prev_mask = np.ones(s, dtype=bool)

    for lam in lambdas:
        t0 = time.perf_counter()
        if lam >= lmax.value * (1.0 - _REL_SLACK):
            mask = np.ones(s, dtype=bool)
        elif lam == prev_lam:
            mask = prev_mask.copy()
        else:
            theta = DualPoint((inst.Y - inst.B @ prev_x) / prev_lam, prev_lam)
            ball = screening_ball(inst, lam, prev_lam, theta, lmax)
            mask = discard_from_ball(inst, ball, cache)
        t_screen = time.perf_counter() - t0

        t0 = time.perf_counter()
        if mask.all():
            x_full = np.zeros(inst.p)
            obj = 0.5 * float(np.dot(inst.Y, inst.Y))
            iters = 0
        else:
            sub, col_keep = reduced_instance(inst, ~mask, lam)
            start = GroupedVector(
                prev_x[col_keep] if warm_start else np.zeros(int(col_keep.sum())),
                sub.partition,
            )
            res = solve_fn(sub, start)
            x_full = np.zeros(inst.p)
            x_full[col_keep] = res.solution.values
            obj = float(res.f_history[-1])
            iters = res.iterations
        t_solve = time.perf_counter() - t0

        result.steps.append(SequentialStep(
            lam=float(lam),
            mask=mask,
            solution=x_full,
            objective=obj,
            iterations=iters,
            groups_kept=int(s - mask.sum()),
            rejection_ratio=_rejection_ratio(int(mask.sum()), x_full, inst),
            screen_time=t_screen,
            solve_time=t_solve,
        ))
        # a step at or above lambda_max has theta* = Y/lam_max; store that pair
        prev_lam = min(float(lam), lmax.value)
        prev_x, prev_mask = x_full, mask
    return result
