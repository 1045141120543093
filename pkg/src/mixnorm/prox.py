"""Proximal operator of the (grouped) lq norm.

For a single group the operator is

    pi_q(v; lam) = argmin_x  0.5 ||x - v||_2^2 + lam ||x||_q ,

with the whole-vector operator applying pi_q group by group.  The minimizer
is unique, it is exactly zero iff lam >= ||v||_qbar (qbar the conjugate
exponent), it inherits the signs of v, and on the support it satisfies

    x + lam * ||x||_q^(1-q) * x^(q-1) = v      (componentwise, x > 0)

after reducing to positive v.  q = 1 (soft threshold), q = 2 (norm
shrinkage) and q = inf (clip at the l1-ball projection threshold) have
closed forms.  For general finite q the optimality system is solved through
the scalar substitution c = lam * ||x||_q^(1-q):

  * for fixed c, each coordinate solves  h(x) = x + c x^(q-1) - v_i = 0,
    which has a unique root in (0, v_i);
  * c* is the unique zero of  phi(c) = lam * psi(c) - c  on [c_lo, c_hi],
    where psi(c) = (sum_i x_i(c)^q)^((1-q)/q), phi(c_lo) >= 0 >= phi(c_hi).

The outer zero find is a bisection whose per-coordinate inner brackets are
cached and shrink monotonically: x_i(c) is strictly decreasing in c, so the
roots computed at the current bracket endpoints always sandwich the root at
any interior c.  Inner solves are bisections safeguarded with Newton steps
inside the live bracket.  All general-q groups of a vector are solved in one
lock-step batch; each group freezes independently once its own stopping rule
fires, so batched results match solo calls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BracketError,
    DimensionError,
    InputError,
    InvalidExponentError,
    InvalidParameterError,
)
from .model import GroupPartition, GroupedVector, QKind, classify_q, dual_exponent, group_norms, lq_norm

# Relative slack on the zero test lam >= ||v||_qbar; errs toward returning 0.
ZERO_SLACK = 1e-12
# |phi| at which the outer zero find declares victory.
PHI_TOL = 1e-12
_MAX_OUTER = 400
_MAX_INNER = 80


@dataclass(frozen=True)
class ProxParams:
    """Per-call parameters: positive weight lam, exponent q, bisection delta."""

    lam: float
    q: float
    delta: float = 1e-8

    def __post_init__(self):
        if not (isinstance(self.lam, (int, float)) and self.lam > 0 and math.isfinite(self.lam)):
            raise InvalidParameterError(f"lam must be a positive finite real, got {self.lam!r}")
        classify_q(self.q)
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise InvalidParameterError(f"delta must be positive, got {self.delta!r}")


@dataclass
class ZeroFindState:
    """Live state of the batched nested zero find (one entry per group /
    per coordinate).  Outer brackets [c_lo, c_hi] and the cached inner
    brackets [x_lo, x_hi] all shrink monotonically across iterations;
    x_lo holds the roots at c_hi and x_hi the roots at c_lo."""

    c_lo: np.ndarray
    c_hi: np.ndarray
    x_lo: np.ndarray
    x_hi: np.ndarray
    frozen: np.ndarray
    outer_iters: int = 0


def soft_threshold(v: np.ndarray, lam: float) -> np.ndarray:
    """Componentwise sgn(v) * max(|v| - lam, 0)."""
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def _validate_group_input(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise DimensionError("prox input must be a nonempty vector")
    if not np.isfinite(v).all():
        raise InputError("prox input contains non-finite entries")
    return v


def prox_inf(v: np.ndarray, lam: float) -> np.ndarray:
    """Prox of lam * ||.||_inf for 0 < lam < ||v||_1.

    The answer clips |v| at the threshold t* solving
    sum_i max(|v_i| - t, 0) = lam, i.e. v minus its Euclidean projection
    onto the l1 ball of radius lam.  t* is found exactly from the sorted
    breakpoints, no iteration.
    """
    v = _validate_group_input(v)
    if not lam > 0:
        raise InvalidParameterError(f"lam must be positive, got {lam!r}")
    a = np.abs(v)
    if lam >= a.sum():
        raise InvalidParameterError("prox_inf requires lam < ||v||_1; caller handles the zero case")
    asort = np.sort(a)[::-1]
    cs = np.cumsum(asort)
    j = np.arange(1, a.size + 1)
    # number of entries strictly above t*: the largest j with asort[j-1] > (cs[j-1]-lam)/j
    jstar = int(np.count_nonzero(asort * j > cs - lam))
    t = (cs[jstar - 1] - lam) / jstar
    return np.sign(v) * np.minimum(a, t)


def _h_roots(v, c, q, lo, hi):
    """Componentwise root of h(x) = x + c x^(q-1) - v inside (lo, hi).

    h is strictly increasing with h(lo) < 0 < h(hi); bisection interleaved
    with bracket-safeguarded Newton steps, run until the brackets are at
    relative float resolution.  Returns the refined roots; lo/hi are not
    modified in place.
    """
    lo = lo.copy()
    hi = hi.copy()
    x = 0.5 * (lo + hi)
    qm1 = q - 1.0
    qm2 = q - 2.0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        for _ in range(_MAX_INNER):
            h = x + c * np.power(x, qm1) - v
            neg = h < 0.0
            lo = np.where(neg, x, lo)
            hi = np.where(neg, hi, x)
            if np.all(hi - lo <= 1e-15 * hi):
                break
            dh = 1.0 + c * qm1 * np.power(x, qm2)
            xn = x - h / dh
            inside = (xn > lo) & (xn < hi)
            x = np.where(inside, xn, 0.5 * (lo + hi))
    return np.clip(x, lo, hi)


def _psi(x, starts, rep_sizes, q):
    """Per-group ||x||_q^(1-q) for strictly positive x, max-rescaled."""
    gmax = np.maximum.reduceat(x, starts)
    scaled = x / np.repeat(gmax, rep_sizes)
    sums = np.add.reduceat(np.power(scaled, q), starts)
    return np.power(gmax, 1.0 - q) * np.power(sums, (1.0 - q) / q)


def _general_q_batch(v, sizes, lam, q, delta):
    """Solve the general-q prox for every group of the concatenated positive
    vector ``v`` (group g occupies sizes[g] consecutive entries).

    Preconditions (caller-enforced): all entries strictly positive and
    finite, and lam < ||v_g||_qbar for every group g.  Returns the positive
    minimizers, concatenated the same way.
    """
    sizes = np.asarray(sizes, dtype=np.intp)
    starts = np.concatenate(([0], np.cumsum(sizes)))[:-1]
    qbar = q / (q - 1.0)

    gn = group_norms(v, GroupPartition(tuple(int(s) for s in sizes)), qbar)
    eps = (gn - lam) / gn
    if np.any(eps <= 0.0):
        raise InvalidParameterError("general-q solve requires lam < ||v||_qbar for every group")

    eps_c = np.repeat(eps, sizes)
    with np.errstate(over="ignore"):
        # candidate c at each coordinate: omega_i evaluated at eps * v_i
        ci = (1.0 - eps_c) / (np.power(eps_c, q - 1.0) * np.power(v, q - 2.0))
    if not np.isfinite(ci).all():
        raise BracketError("outer bracket overflowed; inputs out of numerical range")
    c_lo = np.minimum.reduceat(ci, starts)
    c_hi = np.maximum.reduceat(ci, starts)

    # roots at the bracket endpoints seed the inner bracket cache
    x_hi = _h_roots(v, np.repeat(c_lo, sizes), q, np.zeros_like(v), v.copy())
    phi_lo = lam * _psi(x_hi, starts, sizes, q) - c_lo
    x_lo = _h_roots(v, np.repeat(c_hi, sizes), q, np.zeros_like(v), x_hi)
    phi_hi = lam * _psi(x_lo, starts, sizes, q) - c_hi

    guard = 1e-9 * np.maximum(1.0, c_hi)
    if np.any(phi_lo < -guard) or np.any(phi_hi > guard):
        raise BracketError("phi lost its sign change on the initial bracket")

    state = ZeroFindState(
        c_lo=c_lo.copy(), c_hi=c_hi.copy(), x_lo=x_lo.copy(), x_hi=x_hi.copy(),
        frozen=np.zeros(sizes.size, dtype=bool),
    )
    x_cur = x_hi.copy()

    # endpoints that already are roots, and degenerate zero-width brackets
    width_floor = np.maximum(4.0 * np.finfo(np.float64).eps * np.abs(state.c_hi), 5e-324)
    at_lo = phi_lo <= PHI_TOL
    at_hi = (phi_hi >= -PHI_TOL) & ~at_lo
    tiny = (state.c_hi - state.c_lo) <= width_floor
    state.c_hi = np.where(at_lo, state.c_lo, state.c_hi)
    state.c_lo = np.where(at_hi, state.c_hi, state.c_lo)
    take_lo_root = np.repeat(at_hi, sizes)
    x_cur = np.where(take_lo_root, x_lo, x_cur)
    state.frozen |= at_lo | at_hi | tiny

    while not state.frozen.all() and state.outer_iters < _MAX_OUTER:
        state.outer_iters += 1
        c_mid = 0.5 * (state.c_lo + state.c_hi)
        c_rep = np.repeat(c_mid, sizes)
        x_cur = _h_roots(v, c_rep, q, state.x_lo, state.x_hi)
        phi = lam * _psi(x_cur, starts, sizes, q) - c_mid

        live = ~state.frozen
        up = live & (phi > 0.0)
        dn = live & (phi < 0.0)
        state.c_lo = np.where(up, c_mid, state.c_lo)
        state.c_hi = np.where(dn, c_mid, state.c_hi)
        up_c = np.repeat(up, sizes)
        dn_c = np.repeat(dn, sizes)
        state.x_hi = np.where(up_c, x_cur, state.x_hi)
        state.x_lo = np.where(dn_c, x_cur, state.x_lo)

        width_floor = np.maximum(4.0 * np.finfo(np.float64).eps * np.abs(state.c_hi), 5e-324)
        done = live & (
            (np.abs(phi) <= PHI_TOL) | ((state.c_hi - state.c_lo) <= width_floor)
        )
        state.c_lo = np.where(done, c_mid, state.c_lo)
        state.c_hi = np.where(done, c_mid, state.c_hi)
        state.frozen |= done

    return x_cur


def prox_general_q(v_pos, lam: float, q: float, delta: float = 1e-8):
    """General-q prox on a strictly positive vector with lam < ||v||_qbar.

    Exposed separately so the nested zero-find path can be exercised
    directly (including at q = 2.0, where it must agree with the closed
    form).  Returns the strictly positive minimizer.
    """
    v = _validate_group_input(v_pos)
    if np.any(v <= 0.0):
        raise InputError("prox_general_q expects strictly positive entries")
    if not (1.0 < q < math.inf):
        raise InvalidExponentError(f"general-q solve needs 1 < q < inf, got {q!r}")
    if not (isinstance(lam, (int, float)) and lam > 0):
        raise InvalidParameterError(f"lam must be positive, got {lam!r}")
    if not (delta > 0):
        raise InvalidParameterError(f"delta must be positive, got {delta!r}")
    return _general_q_batch(v, np.array([v.size]), float(lam), float(q), float(delta))


def outer_phi(v_pos, lam: float, q: float, c: float):
    """phi(c) = lam * psi(c) - c for a single positive group; test hook.

    psi(c) = ||x(c)||_q^(1-q) where x(c) solves the coordinate equations
    x + c x^(q-1) = v.  phi(0) = lam * ||v||_q^(1-q) > 0 and phi has a
    unique zero at the prox solution's scalar c*.
    """
    v = _validate_group_input(v_pos)
    if np.any(v <= 0.0):
        raise InputError("outer_phi expects strictly positive entries")
    if c < 0:
        raise InvalidParameterError("c must be nonnegative")
    if c == 0.0:
        return float(lam * lq_norm(v, q) ** (1.0 - q))
    x = _h_roots(v, np.full_like(v, c), q, np.zeros_like(v), v.copy())
    return float(lam * lq_norm(x, q) ** (1.0 - q) - c)


def prox_group(v, params: ProxParams) -> np.ndarray:
    """Prox of lam * ||.||_q for one group; handles every q >= 1.

    Returns exact zero when lam >= ||v||_qbar (up to a relative slack of
    1e-12 that errs toward zero), otherwise dispatches on the exponent tag.
    """
    v = _validate_group_input(v)
    kind = classify_q(params.q)
    qbar = dual_exponent(params.q)
    if params.lam >= lq_norm(v, qbar) * (1.0 - ZERO_SLACK):
        return np.zeros_like(v)
    if kind is QKind.ONE:
        return soft_threshold(v, params.lam)
    if kind is QKind.TWO:
        n2 = lq_norm(v, 2.0)
        return ((n2 - params.lam) / n2) * v
    if kind is QKind.INF:
        return prox_inf(v, params.lam)
    nz = v != 0.0
    out = np.zeros_like(v)
    a = np.abs(v[nz])
    out[nz] = np.sign(v[nz]) * _general_q_batch(
        a, np.array([a.size]), params.lam, params.q, params.delta
    )
    return out


def _prox_concat(values: np.ndarray, partition: GroupPartition, lam: float, q: float,
                 delta: float) -> np.ndarray:
    """Group-wise prox on a flat array; the solver's hot path."""
    if lam == 0.0:
        return values.copy()
    kind = classify_q(q)
    qbar = dual_exponent(q)
    sizes = partition.sizes_array()
    gn = group_norms(values, partition, qbar)
    zero_g = lam >= gn * (1.0 - ZERO_SLACK)
    zero_c = np.repeat(zero_g, sizes)

    if kind is QKind.ONE:
        out = soft_threshold(values, lam)
        out[zero_c] = 0.0
        return out
    if kind is QKind.TWO:
        denom = np.where(gn > 0.0, gn, 1.0)
        factor = np.where(zero_g, 0.0, (gn - lam) / denom)
        return values * np.repeat(factor, sizes)
    if kind is QKind.INF:
        out = np.zeros_like(values)
        for i in range(partition.s):
            if zero_g[i]:
                continue
            sl = partition.slice(i)
            out[sl] = prox_inf(values[sl], lam)
        return out

    out = np.zeros_like(values)
    keep_c = ~zero_c & (values != 0.0)
    if not keep_c.any():
        return out
    counts = np.add.reduceat(keep_c.astype(np.intp), partition.starts)
    live_sizes = counts[~zero_g & (counts > 0)]
    a = np.abs(values[keep_c])
    x = _general_q_batch(a, live_sizes, lam, q, delta)
    out[keep_c] = np.sign(values[keep_c]) * x
    return out


def prox_all(V: GroupedVector, lam: float, q: float, delta: float = 1e-8) -> GroupedVector:
    """Apply the group prox to every group of a grouped vector.

    lam = 0 returns a copy of the input.  Input validation failures name
    the offending group.
    """
    classify_q(q)
    if not (isinstance(lam, (int, float)) and lam >= 0 and math.isfinite(lam)):
        raise InvalidParameterError(f"lam must be a finite nonnegative real, got {lam!r}")
    if not delta > 0:
        raise InvalidParameterError(f"delta must be positive, got {delta!r}")
    values = V.values
    bad = ~np.isfinite(values)
    if bad.any():
        j = int(np.flatnonzero(bad)[0])
        g = int(np.searchsorted(V.partition.offsets, j, side="right") - 1)
        raise InputError(f"non-finite entry in group {g}")
    return GroupedVector(_prox_concat(values, V.partition, float(lam), float(q), float(delta)),
                         V.partition)
