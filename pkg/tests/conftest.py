import numpy as np
import pytest

from shrinkerlab.cone import ConeSpec
from shrinkerlab.curvature import mean_curvature_spec, ratio_perturbed_spec
from shrinkerlab.shrinker import solve_shrinker


@pytest.fixture(scope="session")
def e1_n2():
    return mean_curvature_spec(2)


@pytest.fixture(scope="session")
def e1_n3():
    return mean_curvature_spec(3)


@pytest.fixture(scope="session")
def ratio_n3():
    return ratio_perturbed_spec(3, 0.1, +1)


@pytest.fixture(scope="session")
def cone08():
    return ConeSpec(2, 0.8)


@pytest.fixture(scope="session")
def end08(e1_n2, cone08):
    """The E1 shrinker end asymptotic to the sigma = 0.8 cone (n = 2)."""
    return solve_shrinker(e1_n2, cone08)


@pytest.fixture(scope="session")
def end08b(e1_n2, cone08):
    """A genuinely different end: same flow, slope 0.8 * 1.001."""
    return solve_shrinker(e1_n2, ConeSpec(2, 0.8 * 1.001))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)
