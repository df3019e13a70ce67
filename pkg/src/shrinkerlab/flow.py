"""Graph curvature flow in the rotational reduction.

The flow moves a hypersurface with normal speed f(kappa); graphs over a
reference plane evolve by

    du/dt = sqrt(1 + u'^2) f(kappa(u))

(method of lines: 4th-order central differences in space, RK4 in time,
explicit with a parabolic CFL bound).  Two patch geometries cover the desk
experiments, both reduced to a 1D meridian grid by rotational symmetry:

* DiskPatch: graph over a hyperplane through the origin perpendicular to the
  symmetry axis (shrinking-sphere caps; the coordinate is the in-plane
  radius, with even symmetry at the axis);
* ConeTangentPatch: graph over the tangent plane of the reference cone at an
  anchor point (the coordinate runs along the meridian tangent; the cone's
  own graph is identically zero there, since cones are ruled).

The rescaled variant adds the dilation drift (X.N)/2 to the normal speed and
runs in the slow time tau = -log(-t); self-shrinkers are its stationary
points.  The module also builds per-snapshot SliceFrame objects carrying the
geometric fields and the label drift needed to convert fixed-label time
derivatives into normal-parametrization ones, and it measures the evolution
equations of the metric and the shape operator as refinement-converging
residuals.
"""

from dataclasses import dataclass, field

import numpy as np

_trapz = getattr(np, "trapezoid", np.trapz)

from .curvature import eval_f_rows, grad_f, grad_f_rows, hess_f
from .errors import ArgumentError, DomainError, StepRejected
from .meridian import fd4_d1, fd4_d2
from .revolution import ProfileCurve, profile_geometry

__all__ = [
    "DiskPatch",
    "ConeTangentPatch",
    "FlowPatch",
    "FlowRun",
    "flow_step",
    "run_flow",
    "rescaled_decay_fit",
    "SliceFrame",
    "frame_from_profile",
    "frame_from_patch",
    "normal_time_derivative",
    "shape_evolution_check",
    "metric_evolution_check",
    "sphere_cap_graph",
    "shrinker_patch_graph",
    "self_similar_graph",
]

CFL_MAX = 0.2


def sphere_area(m):
    """Area of the unit sphere S^{m-1} in R^m."""
    from math import gamma, pi
    return 2.0 * pi ** (m / 2.0) / gamma(m / 2.0)


# ---------------------------------------------------------------------------
# patch geometries


class DiskPatch:
    """Graph over the hyperplane through the origin, axis perpendicular.

    The grid coordinate is the in-plane radius rho >= 0; fields are even in
    rho, which the derivative operators enforce by ghost reflection when the
    grid starts at 0.
    """

    kind = "disk"

    def __init__(self, n):
        self.n = int(n)
        self.sigma = None

    def geometry(self, x, u, u1, u2):
        speed2 = 1.0 + u1**2
        speed = np.sqrt(speed2)
        kp = u2 / (speed2 * speed)
        with np.errstate(divide="ignore", invalid="ignore"):
            kr = np.where(np.abs(x) > 1e-12, u1 / (np.maximum(np.abs(x), 1e-300) * speed), kp)
        support = (u - x * u1) / speed
        rho = np.abs(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            mu = np.where(rho > 1e-12, 1.0 / (np.maximum(rho, 1e-300) * speed), np.nan)
        return {
            "speed": speed,
            "kappa_prof": kp,
            "kappa_rot": kr,
            "support": support,
            "position_norm": np.hypot(x, u),
            "x_tan": (x + u * u1) / speed,
            "rho": rho,
            "mu": mu,
        }

    def even_at_axis(self, x):
        return bool(abs(x[0]) < 1e-12)


class ConeTangentPatch:
    """Graph over the tangent plane of the cone at |X_C| = anchor_norm.

    Coordinates: x along the meridian tangent (sigma nu, 1)/sqrt(1+sigma^2),
    height toward the axis along the cone normal.  The anchor radial
    coordinate p = |X_C| enters the support term; the cone's graph is w = 0.
    """

    kind = "cone"

    def __init__(self, n, sigma, anchor_norm):
        self.n = int(n)
        self.sigma = float(sigma)
        self.p = float(anchor_norm)
        self.root = np.sqrt(1.0 + self.sigma**2)

    def geometry(self, x, u, u1, u2):
        sig, p, root = self.sigma, self.p, self.root
        speed2 = 1.0 + u1**2
        speed = np.sqrt(speed2)
        rho = sig * p / root + (sig * x - u) / root
        kp = u2 / (speed2 * speed)
        kr = (1.0 + sig * u1) / (root * speed * rho)
        support = (u - (x + p) * u1) / speed
        mu = (sig - u1) / (root * speed * rho)
        return {
            "speed": speed,
            "kappa_prof": kp,
            "kappa_rot": kr,
            "support": support,
            "position_norm": np.sqrt((p + x) ** 2 + u**2),
            "x_tan": ((p + x) + u * u1) / speed,
            "rho": rho,
            "mu": mu,
        }

    def even_at_axis(self, x):
        return False

    # conversions between the patch graph and profile coordinates ----------

    def to_profile_points(self, x, u):
        """(zeta, r) of the graph points in axis coordinates."""
        sig, root = self.sigma, self.root
        s_hat = self.p / root
        zeta = s_hat + (x + sig * u) / root
        r = sig * s_hat + (sig * x - u) / root
        return zeta, r

    def from_profile(self, evaluate, x, z_bounds=None):
        """Graph height of a profile r(z) over the patch line, per grid node.

        ``evaluate`` maps z to (r, r1, r2); the meridian coordinate of the
        profile point that projects onto patch coordinate x solves
        (sigma r(z) + z)/root - p = x, which is monotone in z.
        """
        from scipy.optimize import brentq

        sig, p, root = self.sigma, self.p, self.root

        def xi(z):
            r = evaluate(z)[0]
            return (sig * r + z) / root - p

        if z_bounds is None:
            z_bounds = (1e-3, 10.0 * (p + float(np.max(np.abs(x)))) + 10.0)
        out = np.empty_like(x)
        for i, xv in enumerate(x):
            zi = brentq(lambda z: xi(z) - xv, z_bounds[0], z_bounds[1],
                        xtol=1e-13)
            r = evaluate(zi)[0]
            out[i] = (sig * zi - r) / root
        return out


# ---------------------------------------------------------------------------
# the semidiscrete flow


@dataclass
class FlowPatch:
    """State of a graph flow on a 1D patch grid."""

    patch: object
    x: np.ndarray
    u: np.ndarray
    t: float
    baseline: object = None      # callable (x, t) -> w samples, or None
    rescaled: bool = False
    boundary: object = None      # callable (x, t) -> boundary values; default baseline
    cfl_max: float = CFL_MAX
    boundary_width: int = 3

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.u = np.asarray(self.u, dtype=float)
        dx = np.diff(self.x)
        if np.max(dx) - np.min(dx) > 1e-9 * np.max(dx):
            raise ArgumentError("patch grid must be uniform")
        if self.u.shape != self.x.shape:
            raise ArgumentError("u and x must have matching shapes")

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    def baseline_samples(self, t=None):
        if self.baseline is None:
            return np.zeros_like(self.x)
        return np.asarray(self.baseline(self.x, self.t if t is None else t))


def _padded_derivatives(patch, x, u, dx):
    """u', u'' by FD4, with even ghost reflection at a disk-patch axis."""
    if patch.even_at_axis(x):
        k = 4
        ue = np.concatenate([u[k:0:-1], u])
        d1 = fd4_d1(ue, dx)[k:]
        d2 = fd4_d2(ue, dx)[k:]
        return d1, d2
    return fd4_d1(u, dx), fd4_d2(u, dx)


def _speed_rows(spec, geom):
    n = spec.n
    m = geom["kappa_prof"].size
    lam = np.empty((m, n))
    lam[:, 0] = geom["kappa_prof"]
    lam[:, 1:] = geom["kappa_rot"][:, None]
    return eval_f_rows(spec, lam)


def _flow_rhs(spec, patch_geom, fp, x, u, t):
    u1, u2 = _padded_derivatives(patch_geom, x, u, fp.dx)
    g = patch_geom.geometry(x, u, u1, u2)
    F = _speed_rows(spec, g)
    rhs = g["speed"] * F
    if fp.rescaled:
        rhs = rhs + 0.5 * g["speed"] * g["support"]
    return rhs, g


def _max_diffusivity(spec, patch_geom, fp, x, u):
    u1, u2 = _padded_derivatives(patch_geom, x, u, fp.dx)
    g = patch_geom.geometry(x, u, u1, u2)
    if spec.name == "E1":
        dmax = 1.0
    else:
        n = spec.n
        sub = slice(None, None, max(1, x.size // 16))
        lam = np.empty((x[sub].size, n))
        lam[:, 0] = g["kappa_prof"][sub]
        lam[:, 1:] = g["kappa_rot"][sub, None]
        dmax = float(np.max(grad_f_rows(spec, lam)))
    return dmax / float(np.min(1.0 + u1**2))


def stable_dt(spec, fp):
    """Largest dt passing the parabolic CFL bound for the current state."""
    D = _max_diffusivity(spec, fp.patch, fp, fp.x, fp.u)
    return fp.cfl_max * fp.dx**2 / D


def _apply_boundary(fp, u, t):
    bc = fp.boundary or fp.baseline
    if bc is None:
        return u
    w = fp.boundary_width
    vals = np.asarray(bc(fp.x, t))
    if not fp.patch.even_at_axis(fp.x):
        u[:w] = vals[:w]
    u[-w:] = vals[-w:]
    return u


def flow_step(spec, fp, dt):
    """One explicit RK4 step of the graph flow; returns a new FlowPatch.

    dt = 0 is the identity.  A dt above the parabolic CFL bound raises
    StepRejected carrying a usable suggestion.
    """
    if dt == 0.0:
        return FlowPatch(fp.patch, fp.x, fp.u.copy(), fp.t, fp.baseline,
                         fp.rescaled, fp.boundary, fp.cfl_max,
                         fp.boundary_width)
    dt_ok = stable_dt(spec, fp)
    if dt > dt_ok * (1.0 + 1e-12):
        raise StepRejected(
            f"dt={dt:.3e} violates the CFL bound {dt_ok:.3e}", suggested_dt=dt_ok)

    x, t, u = fp.x, fp.t, fp.u

    def rhs(uv, tv):
        return _flow_rhs(spec, fp.patch, fp, x, uv, tv)[0]

    k1 = rhs(u, t)
    k2 = rhs(u + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = rhs(u + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = rhs(u + dt * k3, t + dt)
    u_new = u + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    u_new = _apply_boundary(fp, u_new, t + dt)
    return FlowPatch(fp.patch, x, u_new, t + dt, fp.baseline, fp.rescaled,
                     fp.boundary, fp.cfl_max, fp.boundary_width)


@dataclass
class FlowRun:
    """Stored snapshots of a flow: times and u arrays on a fixed grid."""

    patch: object
    x: np.ndarray
    times: np.ndarray
    snapshots: np.ndarray       # (len(times), len(x))
    rescaled: bool
    baseline: object
    spec: object
    max_cfl: float = 0.0

    def flow_patch(self, i):
        return FlowPatch(self.patch, self.x, self.snapshots[i].copy(),
                         float(self.times[i]), self.baseline, self.rescaled)

    def frame(self, i):
        return frame_from_patch(self.spec, self.patch, self.x,
                                self.snapshots[i], float(self.times[i]),
                                rescaled=self.rescaled)


def run_flow(spec, fp, snapshot_times, safety=0.9):
    """March the flow through the given snapshot times (adaptive CFL dt)."""
    snapshot_times = np.asarray(snapshot_times, dtype=float)
    if snapshot_times.ndim != 1 or snapshot_times.size < 1:
        raise ArgumentError("need at least one snapshot time")
    if snapshot_times[0] < fp.t - 1e-14:
        raise ArgumentError("snapshot times must start at or after the state time")

    snaps = []
    times = []
    max_cfl = 0.0
    cur = fp
    for t_target in snapshot_times:
        while cur.t < t_target - 1e-14:
            dt = min(safety * stable_dt(spec, cur), t_target - cur.t)
            max_cfl = max(max_cfl, dt / stable_dt(spec, cur) * cur.cfl_max)
            cur = flow_step(spec, cur, dt)
        snaps.append(cur.u.copy())
        times.append(cur.t)
    return FlowRun(fp.patch, fp.x, np.asarray(times), np.asarray(snaps),
                   fp.rescaled, fp.baseline, spec, max_cfl)


# ---------------------------------------------------------------------------
# decay fit (|u - w| <= C (-t)/|X|)


def rescaled_decay_fit(run, t_min_required=-0.05, floor=1e-15):
    """Fit C in |u(., t) - w| <= C(-t)/|X| over an unrescaled run to t ~ 0.

    Also reports the slope of log sup|u - w| against log(-t), the testable
    linear-decay claim (slope >= 0.9 expected for a shrinker flow).
    """
    times = run.times
    if times[-1] < t_min_required:
        raise ArgumentError(
            f"run must reach t >= {t_min_required} (got {times[-1]:.3g})")
    if times.size < 4:
        raise ArgumentError("need at least 4 snapshots for the decay fit")

    sups = np.empty(times.size)
    C = 0.0
    for i, t in enumerate(times):
        fp = run.flow_patch(i)
        w = fp.baseline_samples(t)
        diff = np.abs(fp.u - w)
        sups[i] = float(np.max(diff))
        if t < 0:
            u1, u2 = _padded_derivatives(run.patch, run.x, fp.u, fp.dx)
            g = run.patch.geometry(run.x, fp.u, u1, u2)
            C = max(C, float(np.max(diff * g["position_norm"] / (-t))))

    mask = (times < 0) & (sups > floor)
    if np.count_nonzero(mask) < 3:
        return {"C": 0.0, "slope": float("nan"), "sup_series": sups.tolist(),
                "flag": "exact-zero"}
    A = np.vstack([np.log(-times[mask]), np.ones(np.count_nonzero(mask))]).T
    coef, res, *_ = np.linalg.lstsq(A, np.log(sups[mask]), rcond=None)
    return {
        "C": C,
        "slope": float(coef[0]),
        "intercept": float(coef[1]),
        "fit_residual": float(res[0]) if np.size(res) else 0.0,
        "sup_series": sups.tolist(),
        "flag": "",
    }


# ---------------------------------------------------------------------------
# slice frames: geometry fields + label drift on a meridian grid


@dataclass
class SliceFrame:
    """Per-sample geometry of one time slice on a uniform 1D label grid.

    ``v_label`` is the label drift of the normal parametrization: the
    normal-parametrization time derivative of any invariant field Q(label,t)
    is dQ/dt|_label + v_label * dQ/dlabel, evaluated at the slice time.
    """

    n: int
    t: float
    x: np.ndarray            # labels (uniform)
    speed: np.ndarray        # ds/dlabel
    kappa_prof: np.ndarray
    kappa_rot: np.ndarray
    F: np.ndarray            # f(kappa)
    support: np.ndarray      # X . N
    position_norm: np.ndarray
    x_tan: np.ndarray        # X . e_p
    rho: np.ndarray
    mu: np.ndarray
    v_label: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    def d_dlabel(self, y):
        return fd4_d1(y, self.dx)

    def d_ds(self, y):
        return self.d_dlabel(y) / self.speed

    def d2_ds2(self, y):
        return self.d_ds(self.d_ds(y))

    @property
    def H(self):
        return self.kappa_prof + (self.n - 1) * self.kappa_rot

    def area_weight(self):
        """Reduced surface measure: dH^n = area(S^{n-1}) rho^{n-1} ds."""
        return sphere_area(self.n) * self.rho ** (self.n - 1) * self.speed

    def integrate(self, y):
        """Integral over the slice of an invariant sample array (trapezoid)."""
        return float(_trapz(y * self.area_weight(), dx=self.dx))


def frame_from_profile(spec, profile, t, extra=None):
    """SliceFrame of a profile slice; labels are the axial coordinates."""
    g = profile_geometry(profile)
    lam = np.empty((profile.size, profile.n))
    lam[:, 0] = g["kappa_prof"]
    lam[:, 1:] = g["kappa_rot"][:, None]
    F = eval_f_rows(spec, lam)
    phi = g["phi"]
    return SliceFrame(
        n=profile.n, t=float(t), x=profile.z,
        speed=g["speed_factor"],
        kappa_prof=g["kappa_prof"], kappa_rot=g["kappa_rot"], F=F,
        support=g["support"], position_norm=g["position_norm"],
        x_tan=g["x_tan"], rho=profile.r, mu=g["mu"],
        v_label=F * profile.r1 * phi,
        extra=extra or {})


def frame_from_patch(spec, patch, x, u, t, rescaled=False):
    """SliceFrame of a flow snapshot; labels are the patch coordinates."""
    if rescaled:
        raise ArgumentError("normal-parametrization frames are defined for "
                            "unrescaled runs")
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    dx = float(x[1] - x[0])
    u1, u2 = _padded_derivatives(patch, x, u, dx)
    g = patch.geometry(x, u, u1, u2)
    F = _speed_rows(spec, g)
    v = -F * u1 / g["speed"]
    return SliceFrame(
        n=patch.n, t=float(t), x=x,
        speed=g["speed"],
        kappa_prof=g["kappa_prof"], kappa_rot=g["kappa_rot"], F=F,
        support=g["support"], position_norm=g["position_norm"],
        x_tan=g["x_tan"], rho=g["rho"], mu=g["mu"],
        v_label=v,
        extra={"u": u, "u1": u1, "u2": u2})


def normal_time_derivative(frames, values, index):
    """Normal-parametrization d/dt of a field given at matching labels.

    ``frames``/``values`` are time-ordered lists; a centered difference in t
    at ``index`` plus the label-drift advection term at the center.
    """
    fm, f0, fp = frames[index - 1], frames[index], frames[index + 1]
    dt_m = f0.t - fm.t
    dt_p = fp.t - f0.t
    # centered difference on a possibly nonuniform time grid
    ddt = (values[index + 1] * dt_m / dt_p
           - values[index - 1] * dt_p / dt_m
           + values[index] * (dt_p / dt_m - dt_m / dt_p)) / (dt_m + dt_p)
    return ddt + f0.v_label * f0.d_dlabel(values[index])


# ---------------------------------------------------------------------------
# evolution-equation checks (shape operator and metric)


def _evolution_rhs(spec, frame):
    """Principal-frame right side of the shape-operator evolution equation."""
    n = frame.n
    kp, ka, mu = frame.kappa_prof, frame.kappa_rot, frame.mu
    kp_s = frame.d_ds(kp)
    ka_s = mu * (kp - ka)              # Codazzi, algebraic
    kp_ss = frame.d2_ds2(kp)
    ka_ss = frame.d_ds(ka_s)

    m = kp.size
    lam = np.empty((m, n))
    lam[:, 0] = kp
    lam[:, 1:] = ka[:, None]
    grads = grad_f_rows(spec, lam)
    w_p, w_a = grads[:, 0], grads[:, 1]

    lap_p = w_p * kp_ss + w_a * (n - 1) * mu * (kp_s - 2.0 * ka_s)
    lap_a = w_p * ka_ss + w_a * (n + 1) * mu * ka_s
    dfa2 = w_p * kp**2 + (n - 1) * w_a * ka**2

    quad_p = np.zeros(m)
    quad_a = np.zeros(m)
    if spec.name != "E1":
        for i in range(m):
            H = hess_f(spec, lam[i])
            d = np.empty(n)
            d[0] = kp_s[i]
            d[1:] = ka_s[i]
            quad_p[i] = d @ H @ d
            gap = kp[i] - ka[i]
            if abs(gap) > 1e-7 * max(abs(kp[i]) + abs(ka[i]), 1e-30):
                dd = (w_p[i] - w_a[i]) / gap
            else:
                dd = H[0, 0] - H[0, 1]
            quad_a[i] = 2.0 * dd * ka_s[i] ** 2
    return {
        "rhs_p": lap_p + dfa2 * kp + quad_p,
        "rhs_a": lap_a + dfa2 * ka + quad_a,
    }


def shape_evolution_check(spec, frames, index, interior=4):
    """Residual of the shape-operator evolution equation at a snapshot.

    Compares the normal-parametrization time derivative of the principal
    curvatures (centered snapshot differences plus label-drift advection)
    against dF:nabla^2 A + (dF:A^2) A + d2F(nabla A, nabla A) assembled in
    the principal frame; also checks the metric evolution through the
    angular component (see metric_evolution_check for the meridian one).
    Returns max relative residuals over the interior samples.
    """
    if not (1 <= index < len(frames) - 1):
        raise ArgumentError("index must have neighbors on both sides")
    f0 = frames[index]
    kp_list = [f.kappa_prof for f in frames]
    ka_list = [f.kappa_rot for f in frames]
    dt_kp = normal_time_derivative(frames, kp_list, index)
    dt_ka = normal_time_derivative(frames, ka_list, index)
    rhs = _evolution_rhs(spec, f0)

    sl = slice(interior, -interior if interior else None)
    scale_p = np.max(np.abs(dt_kp[sl])) + np.max(np.abs(rhs["rhs_p"][sl])) + 1e-300
    scale_a = np.max(np.abs(dt_ka[sl])) + np.max(np.abs(rhs["rhs_a"][sl])) + 1e-300
    res_p = np.max(np.abs(dt_kp[sl] - rhs["rhs_p"][sl])) / scale_p
    res_a = np.max(np.abs(dt_ka[sl] - rhs["rhs_a"][sl])) / scale_a

    rho_list = [f.rho for f in frames]
    dt_rho = normal_time_derivative(frames, rho_list, index)
    rhs_rho = -f0.F * f0.kappa_rot * f0.rho
    scale_r = np.max(np.abs(dt_rho[sl])) + np.max(np.abs(rhs_rho[sl])) + 1e-300
    res_metric_rot = np.max(np.abs(dt_rho[sl] - rhs_rho[sl])) / scale_r

    return {
        "shape_prof": float(res_p),
        "shape_rot": float(res_a),
        "metric_rot": float(res_metric_rot),
        "t": float(f0.t),
    }


def metric_evolution_check(spec, run, indices, n_particles=24, interior=0.15):
    """Meridian metric evolution along normal-parametrization particles.

    Tracks particles through the stored snapshots (RK2 with linear-in-time
    drift interpolation), measures d/dt log of adjacent-particle arc
    separations at the middle index, and compares with -F kappa_prof.
    Returns the max relative residual.
    """
    i0, i1, i2 = indices
    frames = {i: run.frame(i) for i in (i0, i1, i2)}
    times = run.times

    lo = run.x[0] + interior * (run.x[-1] - run.x[0])
    hi = run.x[-1] - interior * (run.x[-1] - run.x[0])
    labels = np.linspace(lo, hi, n_particles)

    def drift(xs, ta, fa, tb, fb, t):
        va = np.interp(xs, fa.x, fa.v_label)
        vb = np.interp(xs, fb.x, fb.v_label)
        if tb == ta:
            return va
        lam = (t - ta) / (tb - ta)
        return (1 - lam) * va + lam * vb

    def advance(xs, ia, ib):
        ta, tb = times[ia], times[ib]
        fa, fb = frames[ia], frames[ib]
        dt = tb - ta
        k1 = drift(xs, ta, fa, tb, fb, ta)
        k2 = drift(xs + dt * k1, ta, fa, tb, fb, tb)
        return xs + 0.5 * dt * (k1 + k2)

    pos = {i1: labels}
    pos[i2] = advance(labels, i1, i2)
    pos[i0] = advance(labels, i1, i0) if i0 != i1 else labels

    def arc_positions(i, xs):
        from scipy.interpolate import CubicSpline
        f = frames[i]
        s = np.concatenate([[0.0], np.cumsum(
            0.5 * (f.speed[1:] + f.speed[:-1]) * np.diff(f.x))])
        return CubicSpline(f.x, s)(xs)

    seps = {i: np.diff(arc_positions(i, pos[i])) for i in (i0, i1, i2)}
    dt0, dt2 = times[i1] - times[i0], times[i2] - times[i1]
    dlog = (np.log(seps[i2]) - np.log(seps[i0])) / (dt0 + dt2)

    f1 = frames[i1]
    mids = 0.5 * (pos[i1][1:] + pos[i1][:-1])
    rhs = -np.interp(mids, f1.x, f1.F * f1.kappa_prof)
    scale = np.max(np.abs(dlog)) + np.max(np.abs(rhs)) + 1e-300
    return float(np.max(np.abs(dlog - rhs)) / scale)


# ---------------------------------------------------------------------------
# initial data builders


def sphere_cap_graph(radius, x):
    """Lower-cap graph u = -sqrt(R^2 - rho^2) over the disk patch."""
    x = np.asarray(x, dtype=float)
    if np.max(np.abs(x)) >= radius:
        raise ArgumentError("cap grid must stay inside the sphere radius")
    return -np.sqrt(radius**2 - x**2)


def shrinker_patch_graph(solution, patch, x):
    """Graph of a ShrinkerSolution over a cone-tangent patch."""
    x = np.asarray(x, dtype=float)
    z_hi = 10.0 * (patch.p + float(np.max(np.abs(x)))) + 10.0
    return patch.from_profile(solution.evaluate, x,
                              z_bounds=(solution.z_min * 1.01, z_hi))


def self_similar_graph(solution, patch, x_span, t_floor, samples=2048):
    """Exact graph of sqrt(-t) Sigma over a cone-tangent patch, as u(x, t).

    Dilation about the origin maps the patch graph to

        u(x, t) = lam * u_1((x + (1 - lam) p) / lam),   lam = sqrt(-t),

    since the anchor ray lies in the tangent plane.  The time-(-1) graph is
    precomputed on a dense grid wide enough to cover the dilated arguments
    down to ``t_floor`` and evaluated by a cubic spline.
    """
    from scipy.interpolate import CubicSpline

    lam_min = np.sqrt(-float(t_floor))
    lo = (x_span[0] + (1.0 - lam_min) * patch.p) / lam_min
    hi = (x_span[1] + (1.0 - lam_min) * patch.p) / lam_min
    lo = min(lo, x_span[0]) - 0.5
    hi = max(hi, x_span[1]) + 0.5
    grid = np.linspace(lo, hi, int(samples))
    vals = shrinker_patch_graph(solution, patch, grid)
    spline = CubicSpline(grid, vals)

    def u_exact(x, t):
        lam = np.sqrt(-t)
        return lam * spline((np.asarray(x, dtype=float)
                             + (1.0 - lam) * patch.p) / lam)

    return u_exact
