"""Regularization paths and the joint-sparsity recovery experiment.

A path solves the same instance at a decreasing sequence of penalties
lam = r * lam_max, warm-starting each solve from the previous solution and
optionally running the safe screening test before each solve.  The recovery
experiment builds a multi-response problem (one group per predictor row),
stacks it into an equivalent single-response instance, and traces the
estimation error along a geometric path.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidParameterError
from .model import GroupPartition, GroupedVector, ProblemInstance
from .screening import ZERO_GROUP_NORM, lambda_max, screen_sequential
from .solver import SolverConfig, solve
from .synth import SynthSpec, gen_joint_sparse


def linear_ratios(n: int = 91, lo: float = 0.1, hi: float = 1.0) -> np.ndarray:
    """n equally spaced ratios from hi down to lo (inclusive)."""
    return np.linspace(hi, lo, n)


def geometric_ratios(n: int = 100, base: float = 0.9) -> np.ndarray:
    """base^0, base^1, ..., base^(n-1)."""
    return np.power(base, np.arange(n, dtype=np.float64))


@dataclass(frozen=True)
class PathSpec:
    """What to run: ratio grid, screening toggle, solver knobs."""

    ratios: tuple[float, ...]
    screening: bool = False
    solver: SolverConfig = field(default_factory=SolverConfig)
    warm_start: bool = True
    store_solutions: bool = True
    seed_info: int | None = None

    def __post_init__(self):
        r = np.asarray(self.ratios, dtype=np.float64)
        if r.size == 0:
            raise InvalidParameterError("ratio grid is empty")
        if np.any(r <= 0) or np.any(r > 1.0 + 1e-12):
            raise InvalidParameterError("ratios must lie in (0, 1]")
        if np.any(np.diff(r) > 0):
            raise InvalidParameterError("ratios must be nonincreasing")
        object.__setattr__(self, "ratios", tuple(float(x) for x in r))


@dataclass
class PathResult:
    """Per-penalty statistics (and solutions unless disabled)."""

    lambdas: np.ndarray
    ratios: np.ndarray
    objectives: np.ndarray
    iterations: np.ndarray
    groups_kept: np.ndarray
    rejection_ratios: np.ndarray
    solve_times: np.ndarray
    screen_times: np.ndarray
    solutions: list[np.ndarray] | None
    lam_max: float
    screening: bool
    seed_info: int | None

    @property
    def total_solve_time(self) -> float:
        return float(self.solve_times.sum())

    @property
    def total_screen_time(self) -> float:
        return float(self.screen_times.sum())

    @property
    def total_time(self) -> float:
        return self.total_solve_time + self.total_screen_time


def run_path(inst: ProblemInstance, spec: PathSpec) -> PathResult:
    """Solve along spec.ratios * lam_max; screening per spec.screening."""
    lmax = lambda_max(inst).value
    if lmax <= 0:
        raise InvalidParameterError("lambda_max is zero; the path is trivially zero")
    ratios = np.asarray(spec.ratios)
    lambdas = ratios * lmax

    if spec.screening:
        seq = screen_sequential(inst, lambdas, solver_config=spec.solver,
                                warm_start=spec.warm_start)
        steps = seq.steps
        return PathResult(
            lambdas=lambdas,
            ratios=ratios.copy(),
            objectives=np.array([st.objective for st in steps]),
            iterations=np.array([st.iterations for st in steps]),
            groups_kept=np.array([st.groups_kept for st in steps]),
            rejection_ratios=np.array([st.rejection_ratio for st in steps]),
            solve_times=np.array([st.solve_time for st in steps]),
            screen_times=np.array([st.screen_time for st in steps]),
            solutions=[st.solution for st in steps] if spec.store_solutions else None,
            lam_max=lmax,
            screening=True,
            seed_info=spec.seed_info,
        )

    s = inst.partition.s
    objectives, iterations, solve_times, solutions = [], [], [], []
    groups_kept = np.full(lambdas.size, s)
    x_prev = GroupedVector.zeros(inst.partition)
    for lam in lambdas:
        sub = inst.with_lam(float(lam))
        t0 = time.perf_counter()
        res = solve(sub, spec.solver, x0=x_prev if spec.warm_start else None)
        solve_times.append(time.perf_counter() - t0)
        objectives.append(float(res.f_history[-1]))
        iterations.append(res.iterations)
        solutions.append(res.solution.values.copy())
        x_prev = res.solution
    return PathResult(
        lambdas=lambdas,
        ratios=ratios.copy(),
        objectives=np.asarray(objectives),
        iterations=np.asarray(iterations),
        groups_kept=groups_kept,
        rejection_ratios=np.zeros(lambdas.size),
        solve_times=np.asarray(solve_times),
        screen_times=np.zeros(lambdas.size),
        solutions=solutions if spec.store_solutions else None,
        lam_max=lmax,
        screening=False,
        seed_info=spec.seed_info,
    )


def stacked_instance(A: np.ndarray, Y: np.ndarray, q: float, lam: float) -> ProblemInstance:
    """Single-response equivalent of the multi-response problem.

    min 0.5 ||A W - Y||_F^2 + lam sum_i ||row_i(W)||_q becomes a grouped
    vector problem: w concatenates the rows of W, the design places A once
    per response column, and group i (size k) holds row i of W.
    """
    A = np.asarray(A, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    m, d = A.shape
    if Y.shape[0] != m:
        raise DimensionError("response row count does not match the design")
    k = Y.shape[1]
    B = np.zeros((m * k, d * k))
    for t in range(k):
        B[t * m:(t + 1) * m, t::k] = A
    part = GroupPartition((k,) * d)
    return ProblemInstance(B, Y.T.ravel(), part, q, lam)


@dataclass
class RecoveryReport:
    """Estimation error along a geometric path on synthetic joint-sparse data."""

    ratios: np.ndarray
    lambdas: np.ndarray
    frob_errors: np.ndarray
    best_index: int
    best_solution: np.ndarray          # d x k matrix at the best penalty
    final_row_norms: np.ndarray        # row 2-norms at the best penalty
    true_support: np.ndarray
    lam_max: float

    @property
    def best_error(self) -> float:
        return float(self.frob_errors[self.best_index])


def recovery_experiment(gen_spec: SynthSpec, q: float = 2.0, num_ratios: int = 35,
                        solver_config: SolverConfig | None = None,
                        screening: bool = False) -> RecoveryReport:
    """Generate joint-sparse data, trace a geometric path, report errors.

    The error at each penalty is ||W_hat - W_true||_F on the d x k
    coefficient matrix.
    """
    A, X_true, Y = gen_joint_sparse(gen_spec)
    d, k = X_true.shape
    inst = stacked_instance(A, Y, q, 0.0)
    spec = PathSpec(
        ratios=tuple(geometric_ratios(num_ratios)),
        screening=screening,
        solver=solver_config or SolverConfig(),
        seed_info=gen_spec.seed,
    )
    result = run_path(inst, spec)
    x_true_flat = X_true.ravel()
    errors = np.array([float(np.linalg.norm(sol - x_true_flat)) for sol in result.solutions])
    best = int(np.argmin(errors))
    best_mat = result.solutions[best].reshape(d, k)
    return RecoveryReport(
        ratios=result.ratios,
        lambdas=result.lambdas,
        frob_errors=errors,
        best_index=best,
        best_solution=best_mat,
        final_row_norms=np.linalg.norm(best_mat, axis=1),
        true_support=np.linalg.norm(X_true, axis=1) > ZERO_GROUP_NORM,
        lam_max=result.lam_max,
    )
