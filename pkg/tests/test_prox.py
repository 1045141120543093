"""Proximal operator tests.

The frozen arrays below were produced by the independent oracles in
mixnorm.oracle (grid search at resolution 0.02, i.e. final spacing 2e-5
after refinement, and the brentq-based scalar solver at xtol 1e-14).
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixnorm.errors import InputError, InvalidExponentError, InvalidParameterError
from mixnorm.model import GroupPartition, GroupedVector, dual_exponent, group_norms, lq_norm
from mixnorm.prox import (ProxParams, outer_phi, prox_all, prox_general_q,
                          prox_group, prox_inf, soft_threshold)


def optimality_residual(x, v, lam, q):
    """Infinity norm of x + lam * ||x||_q^(1-q) * sign(x)|x|^(q-1) - v.

    Zero exactly when x solves the group prox for finite q > 1 with x != 0.
    """
    nx = lq_norm(x, q)
    if nx == 0.0:
        return np.abs(v).max()
    grad = lam * nx ** (1 - q) * np.sign(x) * np.abs(x) ** (q - 1)
    return np.abs(x + grad - v).max()


# ---------------------------------------------------------------------------
# closed-form cases

def test_soft_threshold_small_case():
    v = np.array([3.0, -2.0, 0.5])
    assert np.allclose(soft_threshold(v, 1.0), [2.0, -1.0, 0.0])


def test_prox_inf_small_case():
    assert np.allclose(prox_inf(np.array([3.0, 1.0]), 1.0), [2.0, 1.0])


def test_prox_q2_small_case():
    x = prox_group(np.array([3.0, 4.0]), ProxParams(lam=1.0, q=2.0))
    assert np.allclose(x, [2.4, 3.2], atol=1e-12)


def test_prox_inf_budget_identity(rng):
    # the amount clipped off equals lam whenever the prox is nonzero
    for _ in range(50):
        v = rng.standard_normal(int(rng.integers(1, 9))) * 3
        lam = rng.uniform(0.05, 0.95) * np.abs(v).sum()
        x = prox_inf(v, lam)
        assert np.abs(v - x).sum() == pytest.approx(lam, rel=1e-10, abs=1e-12)
        # clipping never flips signs and never grows a coordinate
        assert np.all(np.abs(x) <= np.abs(v) + 1e-15)
        assert np.all(x * v >= 0)


def test_prox_inf_ties():
    x = prox_inf(np.array([2.0, 2.0, 2.0]), 1.5)
    assert np.allclose(x, [1.5, 1.5, 1.5])


def test_single_coordinate_any_q_is_soft_threshold():
    # with one coordinate the penalty is lam*|x| regardless of q
    for q in (1.0, 1.5, 2.0, 7.0, np.inf):
        x = prox_group(np.array([4.0]), ProxParams(lam=1.0, q=q))
        assert x[0] == pytest.approx(3.0, abs=1e-10)


# ---------------------------------------------------------------------------
# frozen oracle values (see module docstring)

FROZEN = [
    # v, lam, q, expected (brentq oracle), grid oracle agreement witnessed at 1e-5
    ([1.0, 3.0], 1.0, 4.0, [0.91195221531484494, 2.0295240367490983]),
    ([2.0, -1.0, 0.5], 0.8, 1.5, [1.273403798959013, -0.53086180545735107, 0.20702860058770195]),
    ([-3.0, 2.5], 1.5, 3.0, [-1.932207068300682, 1.6865049171298949]),
    ([1.2, 0.7, -2.2], 0.6, 2.5, [0.9778010827083643, 0.59462627914556532, -1.6935285641486333]),
    ([4.0], 1.0, 7.0, [3.0]),
]


@pytest.mark.parametrize("v,lam,q,want", FROZEN)
def test_general_q_frozen_values(v, lam, q, want):
    x = prox_group(np.array(v), ProxParams(lam=lam, q=q))
    assert np.allclose(x, want, atol=5e-9)


# ---------------------------------------------------------------------------
# threshold behavior

@pytest.mark.parametrize("q", [1.0, 1.5, 2.0, 3.0, np.inf])
def test_zero_iff_lam_at_dual_norm(q, rng):
    for _ in range(20):
        v = rng.standard_normal(int(rng.integers(1, 7))) * 2
        if not np.any(v):
            continue
        thresh = lq_norm(v, dual_exponent(q))
        above = prox_group(v, ProxParams(lam=thresh * (1 + 1e-3), q=q))
        below = prox_group(v, ProxParams(lam=thresh * (1 - 1e-3), q=q))
        assert np.all(above == 0.0)
        assert np.any(below != 0.0)


def test_zero_input_stays_zero():
    for q in (1.0, 1.7, 2.0, np.inf):
        x = prox_group(np.zeros(3), ProxParams(lam=0.5, q=q))
        assert np.all(x == 0.0)


# ---------------------------------------------------------------------------
# optimality residual across regimes

@pytest.mark.parametrize("q", [1.3, 1.5, 2.5, 4.0, 5.0, 10.0])
def test_general_q_optimality(q, rng):
    for _ in range(30):
        n = int(rng.integers(1, 9))
        v = rng.standard_normal(n) * rng.uniform(0.5, 4.0)
        if not np.any(v):
            continue
        lam = rng.uniform(0.05, 0.95) * lq_norm(v, dual_exponent(q))
        if lam == 0:
            continue
        x = prox_group(v, ProxParams(lam=lam, q=q))
        assert optimality_residual(x, v, lam, q) <= 1e-6


def test_sign_and_magnitude_structure(rng):
    # prox preserves signs and never exceeds |v| coordinatewise
    for q in (1.4, 3.0):
        v = rng.standard_normal(6) * 2
        lam = 0.4 * lq_norm(v, dual_exponent(q))
        x = prox_group(v, ProxParams(lam=lam, q=q))
        assert np.all(x * v >= 0)
        assert np.all(np.abs(x) <= np.abs(v) + 1e-12)


def test_near_one_exponent_close_to_soft_threshold(rng):
    v = rng.standard_normal(5) * 2
    lam = 0.3 * np.abs(v).max()
    x_soft = soft_threshold(v, lam)
    x_gen = prox_group(v, ProxParams(lam=lam, q=1.001))
    assert np.abs(x_gen - x_soft).max() < 1e-2


def test_general_machinery_at_q2_matches_closed_form(rng):
    for _ in range(40):
        v = rng.standard_normal(int(rng.integers(1, 10))) * 3
        if not np.any(v):
            continue
        lam = rng.uniform(0.05, 0.95) * np.linalg.norm(v)
        closed = prox_group(v, ProxParams(lam=lam, q=2.0))
        forced = np.sign(v) * prox_general_q(np.abs(v), lam, 2.0)
        assert np.abs(closed - forced).max() <= 1e-7


# ---------------------------------------------------------------------------
# outer zero-finding structure

def test_outer_phi_sign_change():
    v = np.abs(np.array([1.0, 3.0]))
    lam, q = 1.0, 4.0
    # phi(0) = lam * ||v||_q^(1-q) > 0, and phi is eventually negative
    assert outer_phi(v, lam, q, 0.0) > 0
    assert outer_phi(v, lam, q, 1e6) < 0
    # the solved c makes phi vanish
    x = prox_general_q(v, lam, q)
    c_star = lam * lq_norm(x, q) ** (1 - q)
    assert abs(outer_phi(v, lam, q, c_star)) < 1e-9


def test_outer_phi_single_sign_change(rng):
    # phi crosses zero exactly once on a fine grid
    v = np.abs(rng.standard_normal(4)) + 0.1
    lam, q = 0.5 * lq_norm(v, dual_exponent(3.0)), 3.0
    cs = np.linspace(0.0, 50.0, 4001)
    vals = np.array([outer_phi(v, lam, q, c) for c in cs])
    signs = np.sign(vals)
    changes = np.count_nonzero(np.diff(signs[signs != 0]))
    assert changes == 1


def test_fixed_point_iteration_can_fail_where_zero_finding_succeeds():
    """Naive alternation x <- shrink(v, c), c <- lam*||x||^(1-q) can cycle.

    This is the motivating failure case for the nested bisection: on this
    input the alternation bounces between two clusters without settling,
    while the bracketed zero-finder hits the optimality condition.
    """
    v = np.array([1.0, 3.0])
    lam, q = 1.0, 4.0

    from mixnorm.prox import _h_roots  # inner solver reused directly

    c = 1e-3  # start near the unpenalized end
    iterates = []
    for _ in range(200):
        x = _h_roots(v, np.full(2, c), q, np.zeros(2), v.copy())
        c_next = lam * lq_norm(x, q) ** (1 - q)
        iterates.append(c_next)
        if abs(c_next - c) <= 1e-12 * max(1.0, c):
            break
        c = c_next
    tail = np.array(iterates[-20:])
    fixed_point_converged = tail.std() <= 1e-9 * max(1.0, tail.mean())

    x_bisect = prox_general_q(v, lam, q)
    assert optimality_residual(x_bisect, v, lam, q) <= 1e-8
    if fixed_point_converged:
        x_fp = _h_roots(v, np.full(2, c), q, np.zeros(2), v.copy())
        assert optimality_residual(x_fp, v, lam, q) > 1e-6


# ---------------------------------------------------------------------------
# whole-vector prox

def test_prox_all_mixed_groups(rng):
    part = GroupPartition((3, 1, 4, 2))
    v = GroupedVector(rng.standard_normal(10) * 2, part)
    for q in (1.0, 1.5, 2.0, 3.0, np.inf):
        lam = 0.4
        out = prox_all(v, lam, q)
        for i in range(part.s):
            solo = prox_group(v.group(i).copy(), ProxParams(lam=lam, q=q))
            assert np.allclose(out.group(i), solo, atol=1e-12), f"group {i} q={q}"


def test_prox_all_batched_matches_solo_general_q(rng):
    # many groups of different sizes, one lock-step batched solve
    sizes = tuple(int(s) for s in rng.integers(1, 8, size=30))
    part = GroupPartition(sizes)
    v = GroupedVector(rng.standard_normal(part.p) * 3, part)
    lam, q = 0.7, 2.6
    out = prox_all(v, lam, q)
    for i in range(part.s):
        solo = prox_group(v.group(i).copy(), ProxParams(lam=lam, q=q))
        assert np.allclose(out.group(i), solo, atol=1e-10)


def test_prox_all_zero_lambda_is_identity(rng):
    part = GroupPartition((2, 3))
    v = GroupedVector(rng.standard_normal(5), part)
    out = prox_all(v, 0.0, 2.5)
    assert np.array_equal(out.values, v.values)


def test_prox_all_rejects_nonfinite():
    part = GroupPartition((2, 2))
    v = GroupedVector(np.array([1.0, np.nan, 0.0, 1.0]), part)
    with pytest.raises(InputError, match="group 0"):
        prox_all(v, 0.5, 2.0)


def test_prox_params_validation():
    with pytest.raises(InvalidParameterError):
        ProxParams(lam=0.0, q=2.0)
    with pytest.raises(InvalidParameterError):
        ProxParams(lam=-1.0, q=2.0)
    with pytest.raises(InvalidExponentError):
        ProxParams(lam=1.0, q=0.5)
    with pytest.raises(InvalidParameterError):
        ProxParams(lam=1.0, q=2.0, delta=0.0)


def test_prox_group_coordinates_with_zero_entries():
    # zero coordinates stay zero, the rest still satisfy optimality
    v = np.array([2.0, 0.0, -1.0, 0.0])
    lam, q = 0.8, 3.0
    x = prox_group(v, ProxParams(lam=lam, q=q))
    assert x[1] == 0.0 and x[3] == 0.0
    assert optimality_residual(x[[0, 2]], v[[0, 2]], lam, q) <= 1e-8


def test_delta_controls_inner_root_accuracy():
    # the documented guarantee: each inner root residual h(x) is small
    v = np.array([1.0, 3.0])
    lam, q, delta = 1.0, 4.0, 1e-8
    x = prox_general_q(np.abs(v), lam, q, delta=delta)
    c = lam * lq_norm(x, q) ** (1 - q)
    h = x + c * x ** (q - 1) - np.abs(v)
    assert np.abs(h).max() <= 10 * delta


# ---------------------------------------------------------------------------
# property-based sweep

@given(
    n=st.integers(1, 6),
    q=st.sampled_from([1.0, 1.5, 2.0, 3.0, 6.0, np.inf]),
    u=st.floats(0.1, 0.9),
    seed=st.integers(0, 2 ** 16),
)
def test_prox_properties(n, q, u, seed):
    g = np.random.default_rng(seed)
    v = g.standard_normal(n) * g.uniform(0.5, 3.0)
    if not np.any(v):
        return
    lam = u * lq_norm(v, dual_exponent(q))
    if lam <= 0:
        return
    x = prox_group(v, ProxParams(lam=lam, q=q))
    # nonexpansive toward v and objective no worse than at v (0.5||x-v||^2 term)
    fx = 0.5 * np.sum((x - v) ** 2) + lam * lq_norm(x, q)
    fv = lam * lq_norm(v, q)
    assert fx <= fv + 1e-10
    assert np.linalg.norm(x) <= np.linalg.norm(v) + 1e-12
