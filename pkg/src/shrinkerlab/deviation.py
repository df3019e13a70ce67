"""Normal-graph deviation between two rotationally symmetric surfaces.

The deviation h of Sigma~ over Sigma sends X to the signed normal distance
with X + h N on Sigma~.  In the rotational reduction this is a 1D implicit
solve per meridian sample: with N = (-1, r1)/sqrt(1+r1^2) in the half-plane,

    Theta(h) = r~(z + h r1 phi) - r(z) + h phi = 0,   phi = 1/sqrt(1+r1^2),

bracketed by twice the vertical gap and polished by Newton.  The module also
evaluates the elliptic and parabolic deviation residuals (whose right sides
are the O(|X|^-1)|grad h| + O(|X|^-2)|h| contracts) and fits the exponential
decay profile exp(|X|^2/(Lambda t)).

Test pairs.  The deviation equations are local identities between any two
shrinkers in graph position, so nearby-slope end pairs exercise them
genuinely.  Distinct exact shrinker ends asymptotic to the *same* cone do
not exist (the linearized conical end carries only the neutral slope mode
and a growing mode; the uniqueness theorem is visible already at the ODE
level), so the same-cone decay structure |h_t| ~ (-t)/|X| is measured on an
exact normal-graph companion with h = c/|X| over the base end, whose
rescaled family obeys the radial scaling h(x, t) = (-t) h(x, -1) identically.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ArgumentError, SolverError
from .flow import SliceFrame, frame_from_profile, normal_time_derivative
from .meridian import fd4_d1
from .revolution import ProfileCurve, ProfileFrame, normal_graph_geometry
from .shrinker import EndEvaluator

__all__ = [
    "DeviationField",
    "deviation_field",
    "slice_spline_evaluator",
    "deviation_elliptic_residual",
    "parabolic_deviation_residual",
    "exponential_decay_fit",
    "OffsetCompanion",
    "spline_evaluator",
]

ALIGNMENT_MIN = 2.0 / 3.0
ROOT_TOL = 1e-12


@dataclass
class DeviationField:
    """Samples of the deviation h and its covariant derivatives on the base."""

    base: ProfileCurve
    h: np.ndarray
    h1: np.ndarray        # dh/ds (arc length)
    h2: np.ndarray        # d2h/ds2
    t: float = -1.0
    min_alignment: float = 1.0
    meta: dict = field(default_factory=dict)


def spline_evaluator(profile):
    """(r, r1) evaluator of a sampled profile via a cubic spline."""
    cs = CubicSpline(profile.z, profile.r)
    der = cs.derivative()

    def evaluate(z):
        return cs(z), der(z)

    return evaluate


def _other_evaluator(other):
    if isinstance(other, ProfileCurve):
        return spline_evaluator(other)
    if isinstance(other, EndEvaluator):
        return lambda z: other.evaluate(z)[:2]
    if callable(other):
        return other
    raise ArgumentError("other must be a ProfileCurve, an end evaluator, "
                        "or a callable z -> (r, r1)")


def _solve_h(eval_other, z, r, r1, phi, bracket_pad):
    """Bisection-bracketed, Newton-polished root of Theta at one sample."""
    def theta(s):
        rt, _ = eval_other(z + s * r1 * phi)
        return rt - r + s * phi

    def theta_prime(s):
        rt, rt1 = eval_other(z + s * r1 * phi)
        return rt1 * r1 * phi + phi

    gap = theta(0.0)
    if gap == 0.0:
        return 0.0
    width = 2.0 * abs(gap) + bracket_pad
    lo, hi = -width, width
    flo, fhi = theta(lo), theta(hi)
    expansions = 0
    while flo * fhi > 0:
        width *= 2.0
        lo, hi = -width, width
        flo, fhi = theta(lo), theta(hi)
        expansions += 1
        if expansions > 8:
            raise SolverError("no bracket for the deviation root", state=(z, r))
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        fm = theta(mid)
        if flo * fm <= 0:
            hi, fhi = mid, fm
        else:
            lo, flo = mid, fm
        if hi - lo < 1e-6 * max(1.0, abs(mid)):
            break
    s = 0.5 * (lo + hi)
    for _ in range(8):
        f = theta(s)
        if abs(f) < ROOT_TOL * 1e-3:
            break
        s -= f / theta_prime(s)
    if abs(theta(s)) > 1e3 * ROOT_TOL:
        raise SolverError("deviation root did not polish", state=(z, r))
    return s


def deviation_field(base, other, t=-1.0, bracket_pad=1e-14):
    """Per-sample deviation of ``other`` over ``base`` with derivatives.

    Verifies the normal alignment N~ . N >= 2/3 at every sample (the implicit
    solve is well-posed exactly there) and differentiates h along the base
    arc length by 4th-order differences.
    """
    ev = _other_evaluator(other)
    frame = ProfileFrame(base)
    phi = frame.geometry["phi"]

    h = np.empty(base.size)
    min_align = np.inf
    for i in range(base.size):
        h[i] = _solve_h(ev, base.z[i], base.r[i], base.r1[i], phi[i],
                        bracket_pad)
        zt = base.z[i] + h[i] * base.r1[i] * phi[i]
        _, rt1 = ev(zt)
        align = (1.0 + base.r1[i] * rt1) / (
            np.sqrt(1.0 + base.r1[i] ** 2) * np.sqrt(1.0 + rt1**2))
        min_align = min(min_align, float(align))
        if align < ALIGNMENT_MIN:
            raise SolverError(
                f"normal alignment {align:.3f} < 2/3 at sample {i} "
                f"(z={base.z[i]:.6g})", state=(i, base.z[i]))

    h1 = frame.d_ds(h)
    h2 = frame.d2_ds2(h)
    return DeviationField(base=base, h=h, h1=h1, h2=h2, t=float(t),
                          min_alignment=float(min_align))


# ---------------------------------------------------------------------------
# elliptic residual (stationary deviation equation at t = -1)


def deviation_elliptic_residual(spec, base, dev, quad_nodes=8):
    """Left side of the stationary deviation equation and its fitted contract.

    LHS = div(a dh) - (X . grad h - h)/2 with the theta-averaged coefficient
    tensor a between the base shape operator and the offset one; the contract
    is |LHS| <= C (|X|^-1 |grad h| + |X|^-2 |h|) with C reported.
    """
    from .carleman import tensor_a

    frame = ProfileFrame(base)
    g = frame.geometry
    offset = normal_graph_geometry(base, dev.h, dev.h1, dev.h2)
    ct = tensor_a(spec, base, offset, nodes=quad_nodes)

    a_pp = ct.tensor.pp
    v = a_pp * dev.h1
    div = frame.d_ds(v) + (base.n - 1) * g["mu"] * v
    lhs = div - 0.5 * (g["x_tan"] * dev.h1 - dev.h)

    xnorm = g["position_norm"]
    bound = np.abs(dev.h1) / xnorm + np.abs(dev.h) / xnorm**2
    floor = 1e-300 + 0.0 * bound
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(lhs) / np.maximum(bound, 1e-30)
    active = bound > 1e-18
    fitted_C = float(np.max(ratio[active])) if np.any(active) else 0.0
    return {
        "lhs": lhs,
        "bound": bound,
        "fitted_C": fitted_C,
        "max_abs_lhs": float(np.max(np.abs(lhs))),
    }


# ---------------------------------------------------------------------------
# parabolic residual along the rescaled flow


def parabolic_deviation_residual(spec, base_profiles, dev_fields, times,
                                 index, quad_nodes=8):
    """P h = d_t h - div(a_t dh_t) at snapshot ``index`` (normal parametrization).

    ``base_profiles`` and ``dev_fields`` are time-ordered and share the base
    label grid; the time derivative combines a centered difference at fixed
    labels with the label-drift advection of the base flow.  Returns the
    residual samples and the fitted contract constant against
    |X|^-1 |grad h| + |X|^-2 |h| (the equation's right side divided by -t).
    """
    from .carleman import tensor_a

    if not (1 <= index < len(times) - 1):
        raise ArgumentError("index must have neighbors on both sides")
    frames = [frame_from_profile(spec, p, t)
              for p, t in zip(base_profiles, times)]
    h_list = [d.h for d in dev_fields]
    dt_h = normal_time_derivative(frames, h_list, index)

    base = base_profiles[index]
    dev = dev_fields[index]
    pframe = ProfileFrame(base)
    g = pframe.geometry
    offset = normal_graph_geometry(base, dev.h, dev.h1, dev.h2)
    ct = tensor_a(spec, base, offset, nodes=quad_nodes)
    v = ct.tensor.pp * dev.h1
    div = pframe.d_ds(v) + (base.n - 1) * g["mu"] * v

    res = dt_h - div
    xnorm = g["position_norm"]
    bound = np.abs(dev.h1) / xnorm + np.abs(dev.h) / xnorm**2
    active = bound > 1e-18
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(res) / np.maximum(bound, 1e-30)
    fitted_C = float(np.max(ratio[active])) if np.any(active) else 0.0
    return {
        "residual": res,
        "bound": bound,
        "fitted_C": fitted_C,
        "max_abs_residual": float(np.max(np.abs(res))),
        "t": float(times[index]),
    }


# ---------------------------------------------------------------------------
# exponential decay fit


def exponential_decay_fit(times, xnorm_list, h_list, h1_list=None,
                          floor=1e-14):
    """Per-sample fit of log(|h| + |grad h|) against |X|^2 / t.

    For fields decaying like exp(|X|^2/(Lambda t)) the per-sample regression
    slope is 1/Lambda; the median Lambda-hat and the fit quality are
    reported.  Samples below the floating floor are masked; an entirely
    masked input returns the "exact-zero" flag.
    """
    times = np.asarray(times, dtype=float)
    m = len(h_list)
    if m < 3:
        raise ArgumentError("need at least 3 snapshots")
    if h1_list is None:
        h1_list = [np.zeros_like(h) for h in h_list]

    nsamp = h_list[0].size
    lam_hats = []
    resids = []
    for j in range(nsamp):
        y = np.array([abs(h_list[i][j]) + abs(h1_list[i][j]) for i in range(m)])
        xi = np.array([xnorm_list[i][j] ** 2 / times[i] for i in range(m)])
        mask = y > floor
        if np.count_nonzero(mask) < 3:
            continue
        A = np.vstack([xi[mask], np.ones(np.count_nonzero(mask))]).T
        coef, res, *_ = np.linalg.lstsq(A, np.log(y[mask]), rcond=None)
        if coef[0] > 0:
            lam_hats.append(1.0 / coef[0])
            resids.append(float(res[0]) if np.size(res) else 0.0)
    if not lam_hats:
        return {"lambda_hat": float("nan"), "fit_residual": float("nan"),
                "samples_used": 0, "flag": "exact-zero"}
    return {
        "lambda_hat": float(np.median(lam_hats)),
        "lambda_spread": float(np.percentile(lam_hats, 90)
                               - np.percentile(lam_hats, 10)),
        "fit_residual": float(np.median(resids)),
        "samples_used": len(lam_hats),
        "flag": "",
    }


# ---------------------------------------------------------------------------
# the same-cone normal-graph companion


class OffsetCompanion:
    """Normal graph over a base end with deviation h0(X) = c / |X|.

    The companion carries the asymptotic decay of a hypothetical same-cone
    partner (Eq-21 structure): its rescaled family sqrt(-t) Sigma~ deviates
    from sqrt(-t) Sigma by h(x, t) = (-t) h0(x) identically, since h0 is
    homogeneous of degree -1.  Exposes an evaluator (r, r1) parametrized by
    the companion's own axial coordinate for the deviation root-find.
    """

    def __init__(self, base, c):
        self.base = base
        self.c = float(c)
        self.sigma = base.sigma
        self.z_min = base.z_min

    def _point(self, z):
        """Companion point and first derivatives, parametrized by base z."""
        r, r1, r2 = self.base.evaluate(z)
        speed2 = 1.0 + r1**2
        phi = 1.0 / np.sqrt(speed2)
        rho = np.hypot(r, z)
        h = self.c / rho
        dh = -self.c * (r * r1 + z) / rho**3
        dphi = -r1 * r2 * phi**3
        # companion point (r~, zeta~) = (r - h phi, z + h r1 phi)
        rt = r - h * phi
        zt = z + h * r1 * phi
        drt = r1 - dh * phi - h * dphi
        dzt = 1.0 + dh * r1 * phi + h * r2 * phi + h * r1 * dphi
        return rt, zt, drt, dzt

    def scaled_evaluator(self, t=-1.0, span=None, samples=2400):
        """(r, r1) of sqrt(-t) Sigma~ as a function of its axial coordinate.

        Built as a dense parametric table (the companion's axial coordinate
        is monotone in the base parameter) interpolated by cubic splines.
        """
        lam = np.sqrt(-t)
        z_lo = self.z_min * 1.02
        z_hi = (span[1] / lam * 1.5 + 5.0) if span is not None else \
            200.0 / lam
        z_dense = np.geomspace(z_lo, z_hi, int(samples))
        rt, zt, drt, dzt = self._point(z_dense)
        r_of = CubicSpline(zt, rt)
        r1_of = CubicSpline(zt, drt / dzt)

        def evaluate(zeta):
            return lam * r_of(np.asarray(zeta) / lam), r1_of(np.asarray(zeta) / lam)

        return evaluate


def slice_spline_evaluator(end, t, span, samples=2400):
    """(r, r1) of sqrt(-t) Sigma for an end evaluator, spline-backed.

    Avoids per-query scalar evaluation inside the deviation root-find.
    """
    lam = np.sqrt(-t)
    z_lo = max(end.z_min * 1.02, span[0] / lam * 0.5)
    z_hi = span[1] / lam * 1.5 + 5.0
    z_dense = np.linspace(z_lo, z_hi, int(samples))
    r, r1, _ = end.evaluate(z_dense)
    r_of = CubicSpline(z_dense, r)
    r1_of = CubicSpline(z_dense, r1)

    def evaluate(zeta):
        return lam * r_of(np.asarray(zeta) / lam), r1_of(np.asarray(zeta) / lam)

    return evaluate
