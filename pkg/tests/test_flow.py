import numpy as np
import pytest

from shrinkerlab.curvature import mean_curvature_spec
from shrinkerlab.errors import ArgumentError, StepRejected
from shrinkerlab.flow import (ConeTangentPatch, DiskPatch, FlowPatch,
                              flow_step, frame_from_profile,
                              metric_evolution_check, rescaled_decay_fit,
                              run_flow, self_similar_graph,
                              shape_evolution_check, shrinker_patch_graph,
                              sphere_cap_graph, stable_dt)


def sphere_radius(n, t):
    return np.sqrt(1.0 - 2.0 * n * t)


def sphere_exact(n):
    return lambda x, t: -np.sqrt(sphere_radius(n, t) ** 2 - x**2)


def make_sphere_patch(n=2, nx=49):
    L = 0.55 * sphere_radius(n, -0.5)
    x = np.linspace(0.0, L, nx)
    exact = sphere_exact(n)
    return FlowPatch(DiskPatch(n), x, exact(x, -1.0), -1.0, baseline=exact)


def test_flow_step_zero_dt_is_identity(e1_n2):
    fp = make_sphere_patch()
    out = flow_step(e1_n2, fp, 0.0)
    assert np.array_equal(out.u, fp.u) and out.t == fp.t


def test_flow_step_rejects_cfl_violation(e1_n2):
    fp = make_sphere_patch()
    dt_ok = stable_dt(e1_n2, fp)
    with pytest.raises(StepRejected) as err:
        flow_step(e1_n2, fp, 10.0 * dt_ok)
    assert 0 < err.value.suggested_dt <= dt_ok * (1 + 1e-12)


def test_sphere_flow_matches_closed_form(e1_n2):
    n = 2
    fp = make_sphere_patch(n)
    run = run_flow(e1_n2, fp, np.linspace(-1.0, -0.7, 5))
    exact = sphere_exact(n)
    err = max(np.max(np.abs(run.snapshots[i] - exact(run.x, t)))
              for i, t in enumerate(run.times))
    assert err < 1e-5
    assert run.max_cfl <= fp.cfl_max + 1e-12


def test_rescaled_stationarity(end08, e1_n2):
    patch = ConeTangentPatch(2, 0.8, 10.0)
    x = np.linspace(-2.0, 2.0, 49)
    u0 = shrinker_patch_graph(end08, patch, x)
    bc = lambda xx, tt: np.interp(xx, x, u0)
    fp = FlowPatch(patch, x, u0.copy(), 0.0, baseline=bc, rescaled=True)
    run = run_flow(e1_n2, fp, [0.0, 0.2])
    assert np.max(np.abs(run.snapshots[-1] - u0)) < 1e-8


def test_decay_fit_synthetic_slope():
    """u = w + (-t)/|X| has fitted slope 1 and constant 1."""
    n = 2
    patch = ConeTangentPatch(n, 1.0, 10.0)
    x = np.linspace(-2.0, 2.0, 65)
    times = -np.geomspace(1.0, 0.02, 12)
    snaps = []
    for t in times:
        u1 = np.zeros_like(x)
        g = patch.geometry(x, np.zeros_like(x), u1, u1)
        snaps.append((-t) / g["position_norm"])
    from shrinkerlab.flow import FlowRun
    run = FlowRun(patch, x, times, np.array(snaps), False,
                  lambda xx, tt: np.zeros_like(xx), mean_curvature_spec(n))
    fit = rescaled_decay_fit(run)
    assert fit["slope"] == pytest.approx(1.0, abs=0.02)
    # |X| is measured on the displaced graph, hence the tiny offset from 1
    assert fit["C"] == pytest.approx(1.0, rel=1e-3)


def test_decay_fit_zero_flags_exact(e1_n2):
    patch = ConeTangentPatch(2, 1.0, 10.0)
    x = np.linspace(-2.0, 2.0, 65)
    times = -np.geomspace(1.0, 0.02, 6)
    from shrinkerlab.flow import FlowRun
    run = FlowRun(patch, x, times, np.zeros((6, 65)), False,
                  lambda xx, tt: np.zeros_like(xx), e1_n2)
    fit = rescaled_decay_fit(run)
    assert fit["flag"] == "exact-zero" and fit["C"] == 0.0


def test_unrescaled_shrinker_flow_matches_dilation(end08, e1_n2):
    """The PDE evolution of the shrinker graph is its exact dilation."""
    patch = ConeTangentPatch(2, 0.8, 10.0)
    x = np.linspace(-1.5, 1.5, 49)
    u_ex = self_similar_graph(end08, patch, (x[0], x[-1]), -0.25)
    fp = FlowPatch(patch, x, u_ex(x, -1.0), -1.0,
                   baseline=lambda xx, tt: np.zeros_like(xx), boundary=u_ex)
    run = run_flow(e1_n2, fp, [-1.0, -0.6, -0.3])
    err = max(np.max(np.abs(run.snapshots[i] - u_ex(x, t)))
              for i, t in enumerate(run.times))
    assert err < 1e-9


def test_shape_evolution_check_requires_neighbors(e1_n2, end08):
    zg = np.linspace(5.0, 8.0, 64)
    frames = [frame_from_profile(e1_n2, end08.slice_profile(t, zg), t)
              for t in (-1.0, -0.9, -0.8)]
    with pytest.raises(ArgumentError):
        shape_evolution_check(e1_n2, frames, 0)


def test_shape_evolution_on_exact_flow(e1_n2, end08):
    """Residuals on exact slices converge at scheme order in dt."""
    zg = np.linspace(5.0, 8.0, 321)
    out = []
    for dt in (0.02, 0.01):
        times = (-0.9 - dt, -0.9, -0.9 + dt)
        frames = [frame_from_profile(e1_n2, end08.slice_profile(t, zg), t)
                  for t in times]
        out.append(shape_evolution_check(e1_n2, frames, 1))
    assert out[1]["shape_prof"] < out[0]["shape_prof"]
    assert out[0]["shape_prof"] / out[1]["shape_prof"] > 2.0
    assert out[0]["shape_rot"] / out[1]["shape_rot"] > 2.0
    assert out[0]["metric_rot"] / out[1]["metric_rot"] > 2.0


def test_static_plane_evolution_zero(e1_n2):
    """A static plane (all curvatures zero) has identically zero residuals."""
    from shrinkerlab.flow import SliceFrame
    x = np.linspace(5.0, 8.0, 64)
    zeros = np.zeros_like(x)

    def plane_frame(t):
        return SliceFrame(n=2, t=t, x=x, speed=np.ones_like(x),
                          kappa_prof=zeros, kappa_rot=zeros, F=zeros,
                          support=zeros, position_norm=x, x_tan=x,
                          rho=x, mu=1.0 / x, v_label=zeros)

    frames = [plane_frame(t) for t in (-1.0, -0.9, -0.8)]
    chk = shape_evolution_check(e1_n2, frames, 1)
    assert chk["shape_prof"] == 0.0 and chk["shape_rot"] == 0.0


def test_metric_evolution_check(e1_n2):
    fp = make_sphere_patch(2, nx=65)
    run = run_flow(e1_n2, fp, np.linspace(-1.0, -0.9, 5))
    res = metric_evolution_check(e1_n2, run, (1, 2, 3))
    assert res < 5e-3


def test_patch_grid_validation(e1_n2):
    with pytest.raises(ArgumentError):
        FlowPatch(DiskPatch(2), np.array([0.0, 0.1, 0.3]), np.zeros(3), -1.0)


def test_cone_patch_profile_roundtrip(end08):
    """from_profile inverts the patch coordinates of the graphed end."""
    patch = ConeTangentPatch(2, 0.8, 10.0)
    x = np.linspace(-1.0, 1.0, 17)
    u = shrinker_patch_graph(end08, patch, x)
    zeta, r = patch.to_profile_points(x, u)
    # the graph points lie on the end, so its profile reproduces the radii
    r_true, _, _ = end08.evaluate(zeta)
    assert np.max(np.abs(r - r_true)) < 1e-10
