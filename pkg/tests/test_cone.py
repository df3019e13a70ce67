import numpy as np
import pytest

from shrinkerlab.cone import (ConeSpec, check_uniqueness_hypothesis,
                              cone_nabla_A, cone_principal_curvatures,
                              ellipticity_lambda, kappa_bound_rotsym,
                              kappa_constant, max_admissible_epsilon,
                              ratio_family)
from shrinkerlab.curvature import mean_curvature_spec, ratio_perturbed_spec
from shrinkerlab.errors import ArgumentError


def test_cone_spec_validation():
    with pytest.raises(ArgumentError):
        ConeSpec(1, 1.0)
    with pytest.raises(ArgumentError):
        ConeSpec(3, -1.0)
    with pytest.raises(ArgumentError):
        ConeSpec(3, 1.0, orientation=0)


def test_cone_principal_curvatures():
    cone = ConeSpec(3, 1.0)
    lam = cone_principal_curvatures(cone, 1.0)
    assert np.allclose(lam[:-1], 1 / np.sqrt(2))
    assert lam[-1] == 0.0
    # degree -1 scaling and the vanishing ray curvature
    lam2 = cone_principal_curvatures(cone, 2.0)
    assert np.allclose(lam2[:-1], lam[:-1] / 2)
    assert lam2[-1] == 0.0
    with pytest.raises(ArgumentError):
        cone_principal_curvatures(cone, 0.0)


def test_cone_nabla_A_components():
    cone = ConeSpec(3, 1.0)
    T = cone_nabla_A(cone, 1.0)
    # |X|^2 = 2 at s = 1, sigma = 1
    assert T[0, 0, 2] == pytest.approx(-0.5, rel=1e-12)
    assert T[2, 2, 2] == 0.0
    assert T[0, 1, 2] == 0.0
    # total symmetry under index permutations
    for perm in [(0, 2, 1), (2, 0, 1), (1, 2, 0), (2, 1, 0)]:
        assert np.allclose(T, np.transpose(T, perm), atol=1e-15)
    # entries with all indices below n or two+ ray indices vanish
    assert T[0, 0, 0] == 0.0 and T[0, 2, 2] == 0.0


def test_ellipticity_values():
    cone = ConeSpec(3, 1.0)
    assert ellipticity_lambda(mean_curvature_spec(3), cone) == 1.0
    for eps in (1e-2, 1e-3):
        lam = ellipticity_lambda(ratio_perturbed_spec(3, eps, +1), cone)
        assert lam == pytest.approx(1.0 / (1.0 + eps), rel=1e-12)


def test_kappa_constant_vanishes_for_mean_curvature():
    cone = ConeSpec(3, 1.0)
    assert kappa_constant(mean_curvature_spec(3), cone) == 0.0


def test_kappa_scale_free_and_linear_in_eps():
    cone = ConeSpec(3, 1.0)
    ratios = []
    for eps in (1e-2, 1e-3, 1e-4):
        kap = kappa_constant(ratio_perturbed_spec(3, eps, +1), cone)
        ratios.append(kap / eps)
    assert max(ratios) / min(ratios) < 1.001   # kappa(eps)/eps bounded
    # a two-point grid and a dense one agree (integrand constant along rays)
    spec = ratio_perturbed_spec(3, 1e-3, +1)
    assert kappa_constant(spec, cone, grid_points=2) == pytest.approx(
        kappa_constant(spec, cone, grid_points=64), rel=1e-12)


def test_kappa_bound_dominates():
    cone = ConeSpec(3, 1.0)
    for eps in (1e-3, 1e-2, 0.05):
        for sign in (+1, -1):
            spec = ratio_perturbed_spec(3, eps, sign)
            assert kappa_constant(spec, cone) <= kappa_bound_rotsym(spec)
    assert kappa_bound_rotsym(mean_curvature_spec(3)) == 0.0


def test_hypothesis_report_for_mean_curvature():
    rep = check_uniqueness_hypothesis(mean_curvature_spec(3), ConeSpec(3, 1.0))
    assert rep.satisfied and rep.kappa == 0.0
    assert rep.bound == pytest.approx(1.0 / 1296.0)
    d = rep.to_dict()
    assert d["satisfied"] is True and "note" in d


def test_hypothesis_fails_above_threshold():
    cone = ConeSpec(3, 1.0)
    rep = check_uniqueness_hypothesis(ratio_perturbed_spec(3, 0.01, +1), cone)
    assert not rep.satisfied


def test_max_admissible_epsilon():
    cone = ConeSpec(3, 1.0)
    eps_star, bracket = max_admissible_epsilon(ratio_family(3), cone, tol=1e-6)
    assert eps_star > 0
    assert bracket[1] - bracket[0] <= 1e-6
    fam = ratio_family(3)
    assert check_uniqueness_hypothesis(fam(bracket[0]), cone).satisfied
    assert not check_uniqueness_hypothesis(fam(bracket[1]), cone).satisfied
    # kappa = sqrt(2) eps and bound = (1+eps)^-3/1296 cross near 1/(1296 sqrt 2)
    assert eps_star == pytest.approx(1.0 / (1296.0 * np.sqrt(2.0)), rel=1e-2)


def test_hypothesis_monotone_in_eps():
    cone = ConeSpec(3, 1.0)
    fam = ratio_family(3)
    flags = [check_uniqueness_hypothesis(fam(e), cone).satisfied
             for e in np.geomspace(1e-5, 1e-2, 8)]
    # once violated, stays violated on this grid
    assert flags == sorted(flags, reverse=True)
