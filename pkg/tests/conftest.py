import numpy as np
import pytest

from mixnorm.model import GroupPartition, ProblemInstance

try:
    from hypothesis import settings
    settings.register_profile("suite", max_examples=25, deadline=None,
                              derandomize=True)
    settings.load_profile("suite")
except ImportError:
    pass


def random_partition(rng, p, max_groups=None):
    """Random contiguous partition of p coordinates."""
    max_groups = max_groups or max(1, p // 2)
    s = int(rng.integers(1, max_groups + 1))
    cuts = np.sort(rng.choice(np.arange(1, p), size=s - 1, replace=False)) if s > 1 else np.array([], dtype=int)
    edges = np.concatenate(([0], cuts, [p]))
    return GroupPartition(tuple(int(b - a) for a, b in zip(edges[:-1], edges[1:])))


def random_instance(rng, m, p, q, lam_ratio=0.3, partition=None):
    """Gaussian design instance with lam set to lam_ratio * lambda_max."""
    from mixnorm.screening import lambda_max
    B = rng.standard_normal((m, p))
    Y = rng.standard_normal(m)
    part = partition or random_partition(rng, p)
    inst = ProblemInstance(B, Y, part, q, 0.0)
    lmax = lambda_max(inst).value
    return inst.with_lam(lam_ratio * lmax)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
