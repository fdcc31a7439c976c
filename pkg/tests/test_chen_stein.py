import math

import numpy as np
import pytest

from fpp.chen_stein import (
    DependencyFamily,
    exact_tv_small,
    family_from_joint,
    poisson_pmf,
    random_dissociated_joint,
    soundness_sweep,
    stein_bound,
)
from fpp.errors import InvalidFamily, InvalidParameter, SizeError


def independent_joint(ps, chi=1.0):
    joint = np.array(1.0)
    for p in ps:
        joint = np.multiply.outer(joint, np.array([1 - p, p]))
    return np.multiply.outer(joint, np.array([1 - chi, chi]))


def test_poisson_pmf_examples():
    assert poisson_pmf(0.0, 0) == 1.0
    assert poisson_pmf(1.0, 1) == pytest.approx(math.exp(-1))
    assert sum(poisson_pmf(20.0, k) for k in range(201)) == pytest.approx(1.0, abs=1e-12)


def test_bound_independent_pair():
    fam = DependencyFamily([0.5, 0.5], [set(), set()], {}, 0.0)
    assert stein_bound(fam) == pytest.approx(0.5)


def test_bound_single_variable():
    assert stein_bound(DependencyFamily([0.3], [set()], {}, 0.0)) == pytest.approx(0.09)


def test_bound_chi_never_one():
    tv, bound = exact_tv_small(independent_joint([0.2, 0.4], chi=0.0), [set(), set()])
    assert bound >= 2 >= tv


def test_five_independent_bernoullis():
    tv, bound = exact_tv_small(independent_joint([0.1] * 5), [set()] * 5)
    assert bound == pytest.approx(0.05)
    assert 0 < tv <= bound


def test_coupled_pair():
    joint = np.zeros((2, 2, 2))
    joint[0, 0, 1] = 0.7
    joint[1, 1, 1] = 0.3
    fam = family_from_joint(joint, [{1}, {0}])
    assert fam.pair_terms[(0, 1)] == pytest.approx(0.3)
    tv, bound = exact_tv_small(joint, [{1}, {0}])
    # formula: sum_i (p_i^2 + p_i p_j + E[X_i X_j chi]) over both indices
    assert bound == pytest.approx(2 * (0.09 + 0.09 + 0.3))
    assert tv <= bound


def test_empty_family():
    tv, bound = exact_tv_small(np.array([0.0, 1.0]), [])
    assert tv == 0.0 and bound == 0.0


def test_missing_pair_term():
    with pytest.raises(InvalidFamily):
        stein_bound(DependencyFamily([0.1, 0.2], [{1}, {0}], {(0, 1): 0.01}, 0.0))


def test_family_validation():
    with pytest.raises(InvalidFamily):
        DependencyFamily([1.2], [set()], {}, 0.0)
    with pytest.raises(InvalidFamily):
        DependencyFamily([0.1], [{0}], {}, 0.0)
    with pytest.raises(InvalidFamily):
        DependencyFamily([0.1, 0.1], [{1}, {0}], {(0, 1): 0.5, (1, 0): 0.05}, 0.0)


def test_exact_size_limits():
    with pytest.raises(SizeError):
        exact_tv_small(np.full((2,) * 14, 2.0**-14))
    with pytest.raises(InvalidParameter):
        exact_tv_small(np.full((2, 2, 2), 0.2))


def test_random_families_have_valid_neighbourhoods():
    # X_i independent of the X_j outside N_i: check pairwise factorization
    rng = np.random.default_rng(3)
    for _ in range(50):
        joint, nbs = random_dissociated_joint(rng, 5)
        xs = joint.sum(axis=-1)
        for i in range(5):
            for j in range(5):
                if j != i and j not in nbs[i]:
                    axes = tuple(a for a in range(5) if a not in (i, j))
                    pij = xs.sum(axis=axes)
                    outer = np.outer(pij.sum(axis=1), pij.sum(axis=0))
                    assert np.allclose(pij, outer, atol=1e-12)


def test_soundness_sweep():
    res = soundness_sweep(np.random.default_rng(0), families=300, max_m=8)
    assert res.violations == 0 and res.worst_slack >= 0
