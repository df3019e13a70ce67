"""Acceptance suite: one test per criterion, at the stated tolerances.

Each test prints a single pass/fail line including its runtime against the
budget (visible with pytest -s; always embedded in assertion messages).
"""

import time

import numpy as np
import pytest

from shrinkerlab.cone import (ConeSpec, check_uniqueness_hypothesis,
                              kappa_constant, max_admissible_epsilon,
                              ratio_family)
from shrinkerlab.config import RunConfig
from shrinkerlab.curvature import (MatrixPoint, eval_F, eval_f, grad_f,
                                   hess_f, mean_curvature_spec,
                                   ratio_perturbed_spec)
from shrinkerlab.experiments import (deviation_decay_experiment, run_all,
                                     simulate_flow_experiment,
                                     verify_carleman_experiment)
from shrinkerlab.reports import dumps_json
from shrinkerlab.revolution import (cylinder_profile, shrinker_residual,
                                    sphere_profile)
from shrinkerlab.shrinker import ShootState, integrate_profile, uniqueness_scan


class criterion:
    def __init__(self, num, budget, label):
        self.num, self.budget, self.label = num, budget, label

    def __enter__(self):
        self.t0 = time.time()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.time() - self.t0
        status = "PASS" if exc_type is None and elapsed <= self.budget \
            else "FAIL"
        print(f"[criterion {self.num}] {status}: {self.label} "
              f"({elapsed:.1f} s / budget {self.budget:.0f} s)")
        if exc_type is None:
            assert elapsed <= self.budget, \
                f"criterion {self.num} exceeded its runtime budget " \
                f"({elapsed:.1f} s > {self.budget} s)"
        return False


def _fd_grad(f, lam, h):
    out = np.zeros(lam.size)
    for i in range(lam.size):
        e = np.zeros(lam.size)
        e[i] = h
        out[i] = (f(lam + e) - f(lam - e)) / (2 * h)
    return out


def _fd_hess(f, lam, h):
    n = lam.size
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n); ei[i] = h
            ej = np.zeros(n); ej[j] = h
            out[i, j] = (f(lam + ei + ej) - f(lam + ei - ej)
                         - f(lam - ei + ej) + f(lam - ei - ej)) / (4 * h * h)
    return out


def test_criterion_1_curvature_kernel():
    with criterion(1, 10.0, "curvature kernel properties and derivatives"):
        rng = np.random.default_rng(101)
        for n in (2, 3, 4):
            specs = [mean_curvature_spec(n),
                     ratio_perturbed_spec(n, 0.2, +1),
                     ratio_perturbed_spec(n, 0.05, -1)]
            for spec in specs:
                lam = rng.uniform(0.2, 2.5, (1000, n))
                rho = rng.uniform(0.5, 2.0, 1000)
                for k in range(1000):
                    v = lam[k]
                    f0 = spec.value(v)
                    perm = rng.permutation(n)
                    assert abs(spec.value(v[perm]) - f0) <= 1e-12 * abs(f0)
                    assert abs(spec.value(rho[k] * v) - rho[k] * f0) \
                        <= 1e-12 * abs(rho[k] * f0)
                    g = spec.gradient(v)
                    assert abs(np.dot(v, g) - f0) <= 1e-8 * abs(f0)
                # derivative oracles: central differences at h = 1e-5 |lam|
                for k in range(150):
                    v = lam[k]
                    h = 1e-5 * np.linalg.norm(v)
                    g = grad_f(spec, v)
                    gfd = _fd_grad(spec.value, v, h)
                    assert np.max(np.abs(g - gfd)) <= \
                        1e-6 * max(1.0, np.max(np.abs(g)))
                    H = hess_f(spec, v)
                    Hfd = _fd_hess(spec.value, v, h)
                    assert np.max(np.abs(H - Hfd)) <= \
                        1e-4 * max(1.0, np.max(np.abs(H)))
            # conjugation invariance of the matrix function
            spec = specs[1]
            for k in range(1000):
                v = rng.uniform(0.2, 2.5, n)
                Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
                S = Q @ np.diag(v) @ Q.T
                assert abs(eval_F(spec, S) - eval_f(spec, np.sort(v)[::-1])) \
                    <= 1e-10


def test_criterion_2_hypothesis_checker():
    with criterion(2, 30.0, "hypothesis checker: E1 exact, eps family"):
        cone = ConeSpec(3, 1.0)
        rep = check_uniqueness_hypothesis(mean_curvature_spec(3), cone)
        assert rep.kappa == 0.0 and rep.satisfied is True
        for sign in (+1, -1):
            eps_grid = np.geomspace(1e-4, 1e-2, 7)
            kap = np.array([kappa_constant(ratio_perturbed_spec(3, e, sign),
                                           cone) for e in eps_grid])
            slope = np.polyfit(np.log(eps_grid), np.log(kap), 1)[0]
            assert abs(slope - 1.0) <= 0.1
            eps_star, bracket = max_admissible_epsilon(
                ratio_family(3, sign), cone, tol=1e-6)
            assert eps_star > 0
            assert bracket[1] - bracket[0] <= 1e-6


def test_criterion_3_shrinker_oracles():
    with criterion(3, 10.0, "shrinker oracles: sphere, cylinder, plane"):
        n = 3
        spec = mean_curvature_spec(n)
        zs = np.linspace(-1.2, 1.2, 201)
        sphere = sphere_profile(n, np.sqrt(2.0 * n), zs)
        assert np.max(np.abs(shrinker_residual(spec, sphere))) <= 1e-10
        zc = np.linspace(0.0, 40.0, 801)
        cylinder = cylinder_profile(n, np.sqrt(2.0 * (n - 1)), zc)
        assert np.max(np.abs(shrinker_residual(spec, cylinder))) <= 1e-10
        # flat plane through the origin: all curvatures and X.N vanish
        assert eval_f(spec, np.zeros(n)) + 0.5 * 0.0 == 0.0
        res = integrate_profile(spec, ShootState(0.0, 2.0, 0.0), 40.0,
                                tol=1e-9)
        assert not res.blew_up
        assert np.max(np.abs(res.profile.r - 2.0)) <= 1e-6


def test_criterion_4_uniqueness_scan():
    with criterion(4, 60.0, "uniqueness scan: one matched cluster (n=2)"):
        spec = mean_curvature_spec(2)
        cone = ConeSpec(2, 0.8)
        scan = uniqueness_scan(spec, cone, count=200, refine_tol=1e-12)
        assert scan["cluster_count"] == 1
        assert len(scan["grid"]) == 200
        cl = scan["clusters"][0]
        assert cl["slope_residual"] <= 1e-4
        assert cl["tail_exponent"] <= -0.8
        # tolerance tightening never increases the cluster count
        scan2 = uniqueness_scan(spec, cone, count=200, refine_tol=1e-14)
        assert scan2["cluster_count"] <= scan["cluster_count"]


def test_criterion_5_flow_fidelity():
    with criterion(5, 120.0, "flow fidelity: sphere, stationarity, evolution"):
        cfg = RunConfig(**{"cone": {"n": 2, "sigma": 0.8}})
        out = simulate_flow_experiment(cfg)["summary"]["results"]
        assert out["sphere"]["max_error"] <= 1e-5
        assert out["sphere"]["max_error"] / out["sphere"]["max_error_refined"] \
            >= 2.0
        assert out["stationarity"]["improvement"] >= 2.0
        assert out["stationarity"]["drift"] <= 1e-6
        for key in ("shape_prof", "shape_rot", "metric_prof"):
            assert out["evolution"]["ratios"][key] >= 2.0
        assert out["evolution"]["baseline"]["shape_prof"] <= 1e-4 * 10
        assert out["cone_decay"]["slope"] >= 0.9


def test_criterion_6_deviation_pipeline():
    with criterion(6, 120.0, "deviation pipeline: zeros, oracles, decay"):
        cfg = RunConfig(**{"cone": {"n": 2, "sigma": 0.8}})
        out = deviation_decay_experiment(cfg)["summary"]["results"]
        assert out["self_pair_max_h"] == 0.0
        assert out["offset_oracle_error"] <= 1e-10
        assert np.isfinite(out["elliptic"]["fitted_C"])
        assert np.isfinite(out["parabolic"]["fitted_C"])
        assert out["companion_decay"]["slope"] >= 0.9
        assert out["companion_monotone"] is True
        assert out["exponential_fit"]["relative_error"] <= 0.02


def test_criterion_7_carleman_certification():
    with criterion(7, 300.0, "Carleman margins, identity, global slack"):
        cfg = RunConfig(**{
            "cone": {"n": 2, "sigma": 0.8},
            "carleman": {"M_values": [1.0, 4.0, 16.0],
                         "tau_values": [0.25, 1.0],
                         "R": 10.0, "bump_count": 100,
                         "time_slices": 40, "samples": 221}})
        out = verify_carleman_experiment(cfg)["summary"]["results"]
        assert out["margins"]["worst_114"] >= -1e-6
        assert out["margins"]["worst_115"] >= -1e-6
        assert out["margins"]["psi_negative_samples"] == 0
        assert out["identity"]["improvement"] >= 2.0
        assert out["identity"]["zero_function_residual"] == 0.0
        assert out["global_slack"]["draws"] >= 100
        assert out["global_slack"]["worst"] >= -1e-8
        assert out["eq124_worst"] <= 1e-8


def test_criterion_8_reproducibility():
    with criterion(8, 180.0, "byte-identical summaries for fixed config+seed"):
        cfg = RunConfig(**{
            "cone": {"n": 2, "sigma": 0.8},
            "seed": 17,
            "solver": {"grid_count": 24},
            "flow": {"snapshots": 9},
            "carleman": {"bump_count": 12, "time_slices": 16, "samples": 81}})
        first = run_all(cfg)
        second = run_all(cfg)
        assert dumps_json(first["summary"]) == dumps_json(second["summary"])
        assert sorted(first["artifacts"]) == sorted(second["artifacts"])
        for path, content in first["artifacts"].items():
            assert second["artifacts"][path] == content, path
