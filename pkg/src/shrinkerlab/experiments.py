"""The five reproducible experiments behind the service endpoints and the CLI.

Each experiment maps a validated RunConfig to a deterministic summary dict
plus named CSV artifacts (returned in memory; the CLI writes them to the
output directory).  Randomized draws use a generator seeded from the config
seed plus a fixed per-experiment offset, so identical (config, seed) pairs
produce byte-identical reports.
"""

import numpy as np

from . import __version__
from .cone import (check_uniqueness_hypothesis, kappa_bound_rotsym,
                   kappa_constant, max_admissible_epsilon, ratio_family)
from .carleman import (bump_test_function, carleman_identity_check,
                       global_carleman_check, shrinker_flow_frames, tensor_a,
                       verify_pointwise_inequalities, verify_tensor_bounds)
from .config import effective_config
from .curvature import mean_curvature_spec
from .deviation import (DeviationField, OffsetCompanion, deviation_field,
                        deviation_elliptic_residual, exponential_decay_fit,
                        parabolic_deviation_residual, slice_spline_evaluator)
from .errors import ShrinkerlabError
from .flow import (ConeTangentPatch, DiskPatch, FlowPatch, frame_from_profile,
                   metric_evolution_check, rescaled_decay_fit, run_flow,
                   self_similar_graph, shape_evolution_check,
                   shrinker_patch_graph, sphere_cap_graph)
from .reports import csv_table
from .revolution import ProfileFrame, cylinder_profile, profile_geometry, sphere_profile
from .shrinker import solve_shrinker, uniqueness_scan
from .revolution import shrinker_residual

__all__ = ["EXPERIMENTS", "run_experiment", "run_all"]


def _versions():
    import scipy
    return {"shrinkerlab": __version__, "numpy": np.__version__,
            "scipy": scipy.__version__}


def _wrap(name, cfg, results, artifacts):
    embedded = effective_config(cfg)
    embedded.pop("output_dir", None)   # deployment detail, not an input
    return {
        "summary": {
            "experiment": name,
            "config": embedded,
            "versions": _versions(),
            "results": results,
        },
        "artifacts": artifacts,
    }


# ---------------------------------------------------------------------------


def check_hypothesis_experiment(cfg):
    """Hypothesis constants for the configured spec plus the eps-family study."""
    spec = cfg.curvature_spec()
    cone = cfg.cone_spec()
    report = check_uniqueness_hypothesis(spec, cone)

    sign = int(cfg.spec.params.get("sign", 1)) if "sign" in cfg.spec.params else 1
    family = ratio_family(cone.n, sign)
    eps_grid = np.geomspace(1e-4, 1e-2, 7)
    kappas = np.array([kappa_constant(family(e), cone) for e in eps_grid])
    fit = np.polyfit(np.log(eps_grid), np.log(np.maximum(kappas, 1e-300)), 1)
    eps_star, bracket = max_admissible_epsilon(family, cone, tol=1e-6)

    results = {
        "hypothesis": report.to_dict(),
        "kappa_bound_rotsym": kappa_bound_rotsym(spec)
        if spec.name != "E1" else 0.0,
        "family_study": {
            "eps_grid": eps_grid.tolist(),
            "kappa": kappas.tolist(),
            "fit_exponent": float(fit[0]),
            "eps_star": float(eps_star),
            "bracket": [float(bracket[0]), float(bracket[1])],
            "bracket_width": float(bracket[1] - bracket[0]),
        },
    }
    art = {"kappa_vs_eps.csv": csv_table(
        ["eps", "kappa"], list(zip(eps_grid, kappas)))}
    return _wrap("check-hypothesis", cfg, results, art)


def solve_shrinker_experiment(cfg):
    """Uniqueness scan plus the backward-orbit end asymptotic to the cone."""
    spec = cfg.curvature_spec()
    cone = cfg.cone_spec()
    sv = cfg.solver
    scan = uniqueness_scan(spec, cone, bracket=sv.grid_bracket,
                           count=sv.grid_count, refine_tol=sv.refine_tol,
                           z_far=sv.z_far, tol=min(sv.tol, 1e-11),
                           slope_tol=sv.slope_tol)
    end = solve_shrinker(spec, cone)
    z_grid = np.linspace(max(end.z_min * 1.02, 0.6), sv.z_far, 512)
    prof = end.profile(z_grid)
    res = np.abs(shrinker_residual(spec, prof))

    results = {
        "scan": {k: scan[k] for k in
                 ("clusters", "cluster_count", "hypothesis", "parameters")},
        "end": end.diagnostics,
        "profile_max_residual": float(np.max(res)),
    }
    art = {
        "shoot_results.csv": csv_table(
            ["initial_slope", "sigma_hat", "matched", "z_reached",
             "blow_up_side"],
            [(g["initial_slope"], g["sigma_hat"], g["matched"],
              g["z_reached"], g["blow_up_side"]) for g in scan["grid"]]),
        "matched_profile.csv": _profile_csv(prof),
    }
    return _wrap("solve-shrinker", cfg, results, art)


def _profile_csv(prof):
    header = (f"# n={prof.n} orientation={prof.orientation:+d} "
              f"derivative_source={prof.derivative_source}\n")
    body = csv_table(["z", "r", "r1", "r2"],
                     list(zip(prof.z, prof.r, prof.r1, prof.r2)))
    return header + body


def simulate_flow_experiment(cfg):
    """Sphere fidelity, rescaled stationarity, decay fit, evolution residuals."""
    n = cfg.cone.n
    spec_e1 = mean_curvature_spec(n)
    spec = cfg.curvature_spec()
    sigma = cfg.cone.sigma
    dx = cfg.flow.dx
    results = {}
    artifacts = {}

    # shrinking sphere against the closed form (always f = E1)
    Rf = lambda t: np.sqrt(1.0 - 2.0 * n * t)
    L = 0.55 * Rf(-0.5)
    exact = lambda xx, tt: -np.sqrt(Rf(tt) ** 2 - xx**2)
    sphere_levels = []
    for level in range(2):
        nx = max(int(round(L / (dx / (1 + level)))) + 1, 33)
        x = np.linspace(0.0, L, nx)
        fp = FlowPatch(DiskPatch(n), x, exact(x, -1.0), -1.0, baseline=exact,
                       cfl_max=cfg.flow.cfl_max)
        run = run_flow(spec_e1, fp, np.linspace(-1.0, -0.5, 11))
        err = max(float(np.max(np.abs(run.snapshots[i] - exact(x, t))))
                  for i, t in enumerate(run.times))
        sphere_levels.append(err)
        if level == 0:
            artifacts["sphere_radius.csv"] = csv_table(
                ["t", "radius", "exact", "max_error"],
                [(t, -run.snapshots[i][0], Rf(t),
                  float(np.max(np.abs(run.snapshots[i] - exact(x, t)))))
                 for i, t in enumerate(run.times)])
    results["sphere"] = {
        "max_error": sphere_levels[0],
        "max_error_refined": sphere_levels[1],
        "target_radius_law": "R(t) = sqrt(R0^2 - 2 n t)",
    }

    # rescaled stationarity on the cone-tangent patch at the shrinker graph
    sol = solve_shrinker(spec_e1 if spec.name == "E1" else spec,
                         cfg.cone_spec())
    p_anchor = cfg.carleman.R
    patch = ConeTangentPatch(n, sigma, p_anchor)
    drifts = []
    for level in range(2):
        nx = 65 * (1 + level)
        x = np.linspace(-2.5, 2.5, nx)
        u0 = shrinker_patch_graph(sol, patch, x)
        bc = lambda xx, tt, u0=u0, x=x: np.interp(xx, x, u0)
        fp = FlowPatch(patch, x, u0.copy(), 0.0, baseline=bc, rescaled=True,
                       cfl_max=cfg.flow.cfl_max)
        run = run_flow(sol.spec, fp, [0.0, 0.25, 0.5])
        drifts.append(float(np.max(np.abs(run.snapshots[-1] - u0))))
    results["stationarity"] = {
        "drift": drifts[0], "drift_refined": drifts[1],
        "improvement": drifts[0] / max(drifts[1], 1e-300),
    }

    # unrescaled shrinker flow toward the cone: linear-in-(-t) decay fit
    x = np.linspace(-2.0, 2.0, 97)
    u_ex = self_similar_graph(sol, patch, (x[0], x[-1]), cfg.flow.t_min)
    fp = FlowPatch(patch, x, u_ex(x, -1.0), -1.0,
                   baseline=lambda xx, tt: np.zeros_like(xx),
                   boundary=u_ex, cfl_max=cfg.flow.cfl_max)
    times = -np.geomspace(1.0, -cfg.flow.t_min, cfg.flow.snapshots)
    run = run_flow(sol.spec, fp, times)
    fit = rescaled_decay_fit(run, t_min_required=cfg.flow.t_min)
    sim_err = max(float(np.max(np.abs(run.snapshots[i] - u_ex(x, t))))
                  for i, t in enumerate(run.times))
    results["cone_decay"] = {"C": fit["C"], "slope": fit["slope"],
                             "pde_vs_dilation_error": sim_err}
    artifacts["cone_decay.csv"] = csv_table(
        ["t", "sup_u_minus_w"], list(zip(run.times, fit["sup_series"])))

    # evolution residuals (shape operator and metric), sphere run frames
    evol = []
    for level in range(2):
        nx = max(int(round(L / (dx / (1 + level)))) + 1, 33)
        x = np.linspace(0.0, L, nx)
        fp = FlowPatch(DiskPatch(n), x, exact(x, -1.0), -1.0, baseline=exact,
                       cfl_max=cfg.flow.cfl_max)
        nsnap = 9 * (1 + level)
        run = run_flow(spec_e1, fp, np.linspace(-1.0, -0.8, nsnap))
        mid = len(run.times) // 2
        frames = [run.frame(i) for i in (mid - 1, mid, mid + 1)]
        chk = shape_evolution_check(spec_e1, frames, 1)
        chk["metric_prof"] = metric_evolution_check(
            spec_e1, run, (mid - 1, mid, mid + 1))
        evol.append(chk)
    results["evolution"] = {
        "baseline": evol[0], "refined": evol[1],
        "ratios": {k: evol[0][k] / max(evol[1][k], 1e-300)
                   for k in ("shape_prof", "shape_rot", "metric_prof")},
    }
    artifacts["evolution_residuals.csv"] = csv_table(
        ["level", "shape_prof", "shape_rot", "metric_rot", "metric_prof"],
        [(i, e["shape_prof"], e["shape_rot"], e["metric_rot"],
          e["metric_prof"]) for i, e in enumerate(evol)])

    return _wrap("simulate-flow", cfg, results, artifacts)


def deviation_decay_experiment(cfg):
    """Deviation pipeline: oracles, pair residuals, decay and exponential fits."""
    spec = cfg.curvature_spec()
    cone = cfg.cone_spec()
    n = cone.n
    sol = solve_shrinker(spec, cone)
    zg = np.linspace(4.5, 7.5, 161)
    base = sol.profile(zg)
    results = {}
    artifacts = {}

    # identity pair: everything must vanish exactly
    dev0 = deviation_field(base, sol)
    results["self_pair_max_h"] = float(np.max(np.abs(dev0.h)))

    # constant-offset oracle (closed-form offset cylinder)
    delta = 0.037
    zc = np.linspace(0.0, 4.0, 161)
    cylb = cylinder_profile(3, 2.0, zc)
    ev = lambda z: (np.full_like(np.asarray(z, dtype=float), 2.0 - delta),
                    np.zeros_like(np.asarray(z, dtype=float)))
    devc = deviation_field(cylb, ev)
    results["offset_oracle_error"] = float(np.max(np.abs(devc.h - delta)))

    # nearby-slope genuine pair: elliptic + parabolic residual contracts
    sol2 = solve_shrinker(spec, cfg.cone_spec().__class__(
        n, cone.sigma * 1.001, cone.orientation))
    dev = deviation_field(base, sol2)
    er = deviation_elliptic_residual(spec, base, dev)
    results["elliptic"] = {"fitted_C": er["fitted_C"],
                           "max_abs_lhs": er["max_abs_lhs"]}
    artifacts["elliptic_residual.csv"] = csv_table(
        ["z", "h", "lhs", "bound"],
        list(zip(zg, dev.h, er["lhs"], er["bound"])))

    times = -np.geomspace(1.0, 0.5, 9)
    profs = [sol.slice_profile(t, zg) for t in times]

    devs = [deviation_field(p, slice_spline_evaluator(sol2, t, (zg[0], zg[-1])), t=t)
            for t, p in zip(times, profs)]
    pr = parabolic_deviation_residual(spec, profs, devs, times, len(times) // 2)
    results["parabolic"] = {"fitted_C": pr["fitted_C"],
                            "max_abs_residual": pr["max_abs_residual"]}

    # same-cone companion: linear decay of sup|h_t| and Eq-21 boundedness
    comp = OffsetCompanion(sol, c=0.05)
    tmin = -cfg.flow.t_min
    ct = -np.geomspace(1.0, tmin, cfg.flow.snapshots)
    sups, xh = [], []
    h_list, x_list = [], []
    for t in ct:
        baset = sol.slice_profile(t, zg)
        devt = deviation_field(baset, comp.scaled_evaluator(t, (zg[0], zg[-1])), t=t)
        rho = np.hypot(baset.r, baset.z)
        sups.append(float(np.max(np.abs(devt.h))))
        xh.append(float(np.max(np.abs(devt.h) * rho)))
        h_list.append(devt.h)
        x_list.append(rho)
    slope = float(np.polyfit(np.log(-ct), np.log(sups), 1)[0])
    results["companion_decay"] = {
        "slope": slope,
        "sup_h_final": sups[-1],
        "max_xnorm_h": max(xh),
        "terminal_ok": bool(sups[-1] <= sups[0] * (-ct[-1]) * 3.0),
    }
    artifacts["deviation_decay.csv"] = csv_table(
        ["t", "sup_h", "sup_xnorm_h"], list(zip(ct, sups, xh)))

    # exponential-decay fit: synthetic oracle with a known Lambda
    lam0 = 40.0
    rng_t = -np.geomspace(1.0, 0.4, 9)
    xn = profile_geometry(base)["position_norm"]
    synth = [np.exp(xn**2 / (lam0 * t)) for t in rng_t]
    fit = exponential_decay_fit(rng_t, [xn] * len(rng_t), synth)
    results["exponential_fit"] = {
        "lambda_true": lam0, "lambda_hat": fit["lambda_hat"],
        "relative_error": abs(fit["lambda_hat"] - lam0) / lam0,
    }
    # measured monotonicity of the companion decay at fixed samples
    mono = all(sups[i + 1] < sups[i] for i in range(len(sups) - 1))
    results["companion_monotone"] = bool(mono)

    return _wrap("deviation-decay", cfg, results, artifacts)


def verify_carleman_experiment(cfg):
    """Margins, integral identity, and global inequality on a shrinker flow."""
    spec = cfg.curvature_spec()
    cone = cfg.cone_spec()
    cl = cfg.carleman
    sol = solve_shrinker(spec, cone)
    lam_ell = 1.0 if spec.name == "E1" else None
    if lam_ell is None:
        from .cone import ellipticity_lambda
        lam_ell = ellipticity_lambda(spec, cone)
    kap = 0.0 if spec.name == "E1" else kappa_constant(spec, cone)

    root = np.sqrt(1.0 + cone.sigma**2)
    zeta = np.linspace(0.9 * cl.R / root * 0.78, 1.6 * cl.R / root,
                       cl.samples)
    results = {"ellipticity": lam_ell, "kappa": kap}
    artifacts = {}
    rng = np.random.default_rng(cfg.seed + 1013)

    margin_rows = []
    slack_rows = []
    worst114, worst115 = np.inf, np.inf
    worst_slack = np.inf
    psi_neg = 0
    eq124_worst = 0.0
    for tau in cl.tau_values:
        times = np.concatenate(
            [-np.geomspace(tau, tau * 4e-3, cl.time_slices), [0.0]])
        frames, cts = shrinker_flow_frames(spec, sol, zeta, times)
        for fr in frames[:-1]:
            eq124_worst = max(eq124_worst, float(np.max(np.abs(
                fr.x_tan**2 - (fr.position_norm**2 - (2 * fr.t * fr.F) ** 2)))))
        for M in cl.M_values:
            rep = verify_pointwise_inequalities(
                spec, frames, cts, M, tau, lam_ell, R=cl.R,
                margin_tol=cl.margin_tol)
            worst114 = min(worst114, rep["worst_margin_114"])
            worst115 = min(worst115, rep["worst_margin_115"])
            psi_neg += rep["psi_negative_samples"]
            margin_rows.append((M, tau, rep["worst_margin_114"],
                                rep["worst_margin_115"],
                                rep["psi_negative_samples"]))
            per_combo = max(int(cl.bump_count // (len(cl.M_values)
                                                  * len(cl.tau_values))), 1)
            lo, hi = zeta[0], zeta[-1]
            for _ in range(per_combo):
                width = rng.uniform(0.08, 0.2) * (hi - lo)
                center = rng.uniform(lo + 1.4 * width, hi - 1.4 * width)
                amp = rng.uniform(0.3, 3.0)
                power = int(rng.integers(0, 3))
                g = global_carleman_check(
                    spec, frames, cts,
                    bump_test_function(center, width, amp, power),
                    M, tau, lam_ell)
                worst_slack = min(worst_slack, g["slack"])
                slack_rows.append((M, tau, center, width, amp, power,
                                   g["slack"], g["lhs"]))

    results["margins"] = {
        "worst_114": float(worst114), "worst_115": float(worst115),
        "psi_negative_samples": int(psi_neg),
        "margin_tol": cl.margin_tol,
        "satisfied": bool(worst114 >= -cl.margin_tol
                          and worst115 >= -cl.margin_tol),
    }
    results["eq124_worst"] = eq124_worst
    results["global_slack"] = {
        "worst": float(worst_slack), "draws": len(slack_rows),
        "nonnegative": bool(worst_slack >= -1e-8),
    }

    # identity residual at two refinement levels (M=first, tau=last)
    Mi, ti = cl.M_values[0], cl.tau_values[-1]
    ident = []
    for level in (1, 2):
        zl = np.linspace(zeta[0], zeta[-1], (cl.samples - 1) * level + 1)
        tl = np.concatenate(
            [-np.geomspace(ti, ti * 4e-3, cl.time_slices * level), [0.0]])
        fr_l, ct_l = shrinker_flow_frames(spec, sol, zl, tl)
        u_fn = bump_test_function(0.5 * (zeta[0] + zeta[-1]),
                                  0.18 * (zeta[-1] - zeta[0]), 1.0, 1)
        res = carleman_identity_check(spec, fr_l, ct_l, u_fn, M=Mi, tau=ti,
                                      lam=lam_ell)
        ident.append(res["relative_residual"])
    zero = carleman_identity_check(
        spec, fr_l, ct_l, bump_test_function(zeta.mean(), 1.0, 0.0),
        M=Mi, tau=ti, lam=lam_ell)
    results["identity"] = {
        "relative_residual": ident[0],
        "relative_residual_refined": ident[1],
        "improvement": ident[0] / max(ident[1], 1e-300),
        "zero_function_residual": zero["residual"],
    }

    # tensor bounds on the t=-tau slice (collapsed pair)
    prof = sol.slice_profile(-cl.tau_values[-1], zeta)
    ct0 = tensor_a(spec, prof, None, nodes=cl.quadrature_nodes)
    xnorm = profile_geometry(prof)["position_norm"]
    results["tensor_bounds"] = verify_tensor_bounds(
        ct0, lam_ell, max(kap, 1e-30), cl.R, xnorm)

    artifacts["margins.csv"] = csv_table(
        ["M", "tau", "worst_margin_114", "worst_margin_115", "psi_negative"],
        margin_rows)
    artifacts["slack.csv"] = csv_table(
        ["M", "tau", "center", "width", "amplitude", "t_power", "slack",
         "lhs"], slack_rows)
    return _wrap("verify-carleman", cfg, results, artifacts)


EXPERIMENTS = {
    "check-hypothesis": check_hypothesis_experiment,
    "solve-shrinker": solve_shrinker_experiment,
    "simulate-flow": simulate_flow_experiment,
    "deviation-decay": deviation_decay_experiment,
    "verify-carleman": verify_carleman_experiment,
}


def run_experiment(name, cfg):
    if name == "all":
        return run_all(cfg)
    if name not in EXPERIMENTS:
        raise ShrinkerlabError(f"unknown experiment '{name}'")
    return EXPERIMENTS[name](cfg)


def run_all(cfg):
    """Every experiment in a fixed order, with merged artifacts."""
    results = {}
    artifacts = {}
    for name in ("check-hypothesis", "solve-shrinker", "simulate-flow",
                 "deviation-decay", "verify-carleman"):
        out = EXPERIMENTS[name](cfg)
        results[name] = out["summary"]["results"]
        for path, content in out["artifacts"].items():
            artifacts[f"{name}/{path}"] = content
    return _wrap("all", cfg, results, artifacts)
