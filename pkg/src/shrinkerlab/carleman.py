"""Carleman weights, coefficient tensor, and inequality certification.

Everything lives on time-ordered SliceFrame sequences sharing one label
grid.  The coefficient tensor is the theta-averaged derivative of the
curvature function along the segment between the two shape operators,
symmetrized and stored in the radial orthonormal frame (two components by
rotational symmetry).  The weight is

    ln G = M (t + tau) |X|^(3/2) + |X|^2,

and the auxiliary function Psi, the function Phi and the 2-tensor Upsilon
are assembled along two routes: discretely (differencing the ln G and Psi
fields, the route the integral identity actually uses) and in closed form
(through the exact identities grad ln G = beta X^T and

    hess ln G = beta (g + (X.N) A) - (3/4) M (t+tau) |X|^(-5/2) X^T o X^T,

with beta = (3/2) M (t+tau)|X|^(-1/2) + 2 and X.N = 2tF on shrinker flows).
Route disagreement beyond the refinement-predicted bound raises an internal
consistency error.  All G-weighted integrals are computed with the weight
normalized by its global maximum (raw values overflow for large M), which
rescales both sides of every identity and inequality by the same positive
constant; reported residuals and slacks are in these normalized units.
"""

from dataclasses import dataclass, field

import numpy as np

_trapz = getattr(np, "trapezoid", np.trapz)

from .curvature import grad_f
from .errors import ArgumentError, ConsistencyError, DomainError
from .meridian import InvariantTensor
from .flow import SliceFrame, frame_from_profile, normal_time_derivative, sphere_area
from .revolution import ProfileCurve, ProfileFrame, normal_graph_geometry

__all__ = [
    "CoefficientTensor",
    "CarlemanState",
    "tensor_a",
    "verify_tensor_bounds",
    "carleman_weights",
    "phi_upsilon",
    "verify_pointwise_inequalities",
    "carleman_identity_check",
    "global_carleman_check",
    "shrinker_flow_frames",
    "bump_test_function",
]


# ---------------------------------------------------------------------------
# the coefficient tensor


@dataclass
class CoefficientTensor:
    """Theta-averaged dF/dS between two shape operators, frame components."""

    tensor: InvariantTensor
    trace: np.ndarray
    grad_norm: np.ndarray
    hess_norm: np.ndarray
    quad_delta: float          # 8-node vs 16-node Gauss-Legendre difference


def _averaged_components(spec, kp, ka, kp_t, ka_t, n, nodes):
    """Gauss-Legendre theta-average of grad f along the segment of spectra."""
    x, w = np.polynomial.legendre.leggauss(int(nodes))
    theta = 0.5 * (x + 1.0)
    w = 0.5 * w
    m = kp.size
    a_pp = np.zeros(m)
    a_rr = np.zeros(m)
    lam = np.empty(n)
    for j, (th, wt) in enumerate(zip(theta, w)):
        lp = (1 - th) * kp + th * kp_t
        la = (1 - th) * ka + th * ka_t
        for i in range(m):
            lam[0] = lp[i]
            lam[1:] = la[i]
            margin = spec.domain_margin(lam)
            if not margin > 0:
                raise DomainError(
                    f"averaging segment leaves the admissible set at sample "
                    f"{i}, theta={th:.3f} (margin={margin:.3e})",
                    margin=margin, index=i)
            g = spec.gradient(lam)
            a_pp[i] += wt * g[0]
            a_rr[i] += wt * g[1]
    return a_pp, a_rr


def tensor_a(spec, base, offset=None, nodes=8, frame=None, check_quad=True):
    """Coefficient tensor between a base profile and a normal-graph offset.

    ``offset`` is the dict from normal_graph_geometry (or None, meaning the
    two surfaces coincide and the average collapses to dF/dS at the base
    spectrum).  Components are index-raised by the metric (identity in the
    orthonormal frame) and symmetrized; both are trivial for the diagonal
    reduction but recorded for fidelity.  The 8- vs 16-node quadrature
    difference is reported (and is exactly zero for a collapsed segment).
    """
    pframe = frame or ProfileFrame(base)
    g = pframe.geometry
    kp, ka = g["kappa_prof"], g["kappa_rot"]
    if offset is None:
        kp_t, ka_t = kp, ka
    else:
        kp_t, ka_t = offset["shape_pp"], offset["shape_rr"]

    if spec.name == "E1":
        a_pp = np.ones_like(kp)
        a_rr = np.ones_like(kp)
        delta = 0.0
    else:
        a_pp, a_rr = _averaged_components(spec, kp, ka, kp_t, ka_t, spec.n, nodes)
        if check_quad and offset is not None:
            b_pp, b_rr = _averaged_components(spec, kp, ka, kp_t, ka_t,
                                              spec.n, 2 * nodes)
            delta = float(np.max(np.abs(a_pp - b_pp)) + np.max(np.abs(a_rr - b_rr)))
        else:
            delta = 0.0

    tensor = InvariantTensor(a_pp, a_rr, spec.n)
    mu = g["mu"]
    d_ds = pframe.d_ds
    from .meridian import invariant_tensor_grad_norm, invariant_tensor_hess_norm
    return CoefficientTensor(
        tensor=tensor,
        trace=tensor.trace(),
        grad_norm=invariant_tensor_grad_norm(tensor, mu, d_ds),
        hess_norm=invariant_tensor_hess_norm(tensor, mu, d_ds, pframe.d2_ds2),
        quad_delta=delta)


def verify_tensor_bounds(ct, lam, kappa, R, xnorm, dt_a=None, interior=4):
    """Check the eigenvalue, gradient and second-order bounds outside R.

    Eigenvalue-wise lam/3 <= a <= 3/lam and |X| |grad a| <= 3 kappa are
    pass/fail; |X|^2 |hess a| and |X|^2 |dt a| are reported as fitted
    constants (finiteness checks).  Returns per-check reports with the worst
    sample location.
    """
    sl = slice(interior, -interior if interior else None)
    mask = xnorm[sl] >= R
    if not np.any(mask):
        raise ArgumentError(f"no interior samples outside radius {R}")

    lo, hi = ct.tensor.eig_bounds()
    lo, hi = lo[sl][mask], hi[sl][mask]
    xn = xnorm[sl][mask]

    def report(name, ok, margin, worst_idx, value):
        return {"check": name, "ok": bool(ok), "margin": float(margin),
                "worst_value": float(value),
                "worst_xnorm": float(xn[worst_idx])}

    out = []
    i_lo = int(np.argmin(lo))
    out.append(report("lambda/3 <= a", np.all(lo >= lam / 3.0),
                      float(np.min(lo) - lam / 3.0), i_lo, lo[i_lo]))
    i_hi = int(np.argmax(hi))
    out.append(report("a <= 3/lambda", np.all(hi <= 3.0 / lam),
                      float(3.0 / lam - np.max(hi)), i_hi, hi[i_hi]))
    gn = ct.grad_norm[sl][mask] * xn
    i_g = int(np.argmax(gn))
    out.append(report("|X||grad a| <= 3 kappa", np.all(gn <= 3.0 * kappa + 1e-15),
                      float(3.0 * kappa - np.max(gn)), i_g, gn[i_g]))
    hn = ct.hess_norm[sl][mask] * xn**2
    i_h = int(np.argmax(hn))
    out.append(report("|X|^2 |hess a| finite (fitted)", np.all(np.isfinite(hn)),
                      float("nan"), i_h, hn[i_h]))
    if dt_a is not None:
        dn = np.abs(dt_a[sl][mask]) * xn**2
        i_d = int(np.argmax(dn))
        out.append(report("|X|^2 |dt a| finite (fitted)", np.all(np.isfinite(dn)),
                          float("nan"), i_d, dn[i_d]))
    return out


# ---------------------------------------------------------------------------
# weights


def log_weight(frame, M, tau):
    """ln G = M (t + tau) |X|^(3/2) + |X|^2 on a slice."""
    xn = frame.position_norm
    return M * (frame.t + tau) * xn**1.5 + xn**2


def weight_beta(frame, M, tau):
    return 1.5 * M * (frame.t + tau) / np.sqrt(frame.position_norm) + 2.0


def carleman_weights(frame, ct, M, tau, lam):
    """Per-sample ln G and Psi (assembled verbatim from the displayed form).

    Psi >= 0 is asserted structurally downstream: negative samples are
    reported with their location rather than clamped.
    """
    if not (M >= 1 and 0 < tau <= 1):
        raise ArgumentError("need M >= 1 and tau in (0, 1]")
    if not (-tau <= frame.t < 0 or frame.t == 0.0):
        raise ArgumentError("slice time must lie in [-tau, 0]")
    xn = frame.position_norm
    beta = weight_beta(frame, M, tau)
    a_xx = ct.tensor.pp * frame.x_tan**2
    tr = ct.trace
    psi = (beta**2 * a_xx + M * xn**1.5
           + 0.5 * beta * (tr - lam / 3.0) + (tr - lam / 3.0)
           + 0.75 * M * (frame.t + tau) * xn**-2.5 * (tr * xn**2 - a_xx))
    return {"ln_G": log_weight(frame, M, tau), "Psi": psi, "beta": beta,
            "a_xx": a_xx}


# ---------------------------------------------------------------------------
# Phi and Upsilon, two routes


def _dt_up_tensor(frames, cts, index):
    """Raised-index normal-parametrization time derivative of the tensor.

    The frame components are differentiated along the normal parametrization
    and corrected by the metric evolution of the raised indices
    (+2 F kappa a per component), the analogue of d/dt g^{ij} = 2 F A^{ij}.
    """
    f0 = frames[index]
    pp = [c.tensor.pp for c in cts]
    rr = [c.tensor.rr for c in cts]
    d_pp = normal_time_derivative(frames, pp, index) \
        + 2.0 * f0.F * f0.kappa_prof * cts[index].tensor.pp
    d_rr = normal_time_derivative(frames, rr, index) \
        + 2.0 * f0.F * f0.kappa_rot * cts[index].tensor.rr
    return d_pp, d_rr


def phi_upsilon(spec, frames, cts, index, M, tau, lam,
                consistency_factor=10.0, predicted_bound=None):
    """Phi and Upsilon at a snapshot, by discrete and closed-form routes.

    Route 1 differentiates the ln G field discretely (the derivatives the
    integral identity actually integrates); route 2 uses the exact formulas
    for grad and hess of ln G on the slice.  Both share the same discrete
    time derivative of the coefficient tensor.  Disagreement beyond
    ``consistency_factor`` times the refinement-predicted bound (estimated
    from the grid spacing unless supplied) raises ConsistencyError.
    """
    f = frames[index]
    ct = cts[index]
    n = f.n
    w = carleman_weights(f, ct, M, tau, lam)
    beta, a_xx = w["beta"], w["a_xx"]
    a_pp, a_rr = ct.tensor.pp, ct.tensor.rr
    tr = ct.trace
    xn = f.position_norm
    mu = f.mu
    XN = f.support
    aA = a_pp * f.kappa_prof + (n - 1) * a_rr * f.kappa_rot
    div_a = f.d_ds(a_pp) + (n - 1) * mu * (a_pp - a_rr)
    d_app = f.d_ds(a_pp)
    d_arr = f.d_ds(a_rr)
    dt_app, dt_arr = _dt_up_tensor(frames, cts, index)

    # route 2: exact ln G derivatives on the slice
    phi2 = (beta**2 * a_xx + M * xn**1.5 + beta * tr
            - 0.75 * M * (f.t + tau) * xn**-2.5 * a_xx
            + beta * (div_a * f.x_tan + XN * (f.F + aA))
            - f.F * f.H)
    hess_pp_2 = beta * (1.0 + XN * f.kappa_prof) \
        - 0.75 * M * (f.t + tau) * xn**-2.5 * f.x_tan**2
    hess_aa_2 = beta * (1.0 + XN * f.kappa_rot)
    dlnG_2 = beta * f.x_tan

    # route 1: discrete derivatives of the ln G field
    lnG_fields = [log_weight(fr, M, tau) for fr in frames]
    lnG = lnG_fields[index]
    dlnG_1 = f.d_ds(lnG)
    hess_pp_1 = f.d2_ds2(lnG)
    hess_aa_1 = mu * dlnG_1
    dt_lnG = normal_time_derivative(frames, lnG_fields, index)
    div_a_dlnG = f.d_ds(a_pp * dlnG_1) + (n - 1) * mu * a_pp * dlnG_1
    phi1 = dt_lnG + div_a_dlnG + a_pp * dlnG_1**2 - f.F * f.H

    def upsilon(hess_pp, hess_aa, dlnG):
        ups_pp = (a_pp**2 * hess_pp - 0.5 * dt_app
                  + 0.5 * a_pp * d_app * dlnG)
        ups_aa = (a_rr**2 * hess_aa - 0.5 * dt_arr
                  + 0.5 * (2.0 * a_rr * mu * (a_pp - a_rr)
                           - a_pp * d_arr) * dlnG)
        return ups_pp, ups_aa

    ups_pp_1, ups_aa_1 = upsilon(hess_pp_1, hess_aa_1, dlnG_1)
    ups_pp_2, ups_aa_2 = upsilon(hess_pp_2, hess_aa_2, dlnG_2)

    interior = slice(4, -4)
    scale = float(np.max(np.abs(phi2[interior]))) + 1.0
    gap = max(
        float(np.max(np.abs(phi1[interior] - phi2[interior]))),
        float(np.max(np.abs(ups_pp_1[interior] - ups_pp_2[interior]))),
        float(np.max(np.abs(ups_aa_1[interior] - ups_aa_2[interior]))),
    )
    if predicted_bound is None:
        # 4th-order stencils on the label grid plus centered time differences
        dt_loc = max(abs(frames[index + 1].t - f.t),
                     abs(f.t - frames[index - 1].t)) if 0 < index < len(frames) - 1 else 0.1
        predicted_bound = scale * (f.dx**4 * 1e2 + dt_loc**2)
    if gap > consistency_factor * predicted_bound:
        raise ConsistencyError(
            f"Phi/Upsilon route disagreement {gap:.3e} exceeds "
            f"{consistency_factor} x predicted {predicted_bound:.3e}")

    return {
        "Phi": phi2, "Phi_discrete": phi1,
        "Upsilon_pp": ups_pp_2, "Upsilon_rr": ups_aa_2,
        "Upsilon_pp_discrete": ups_pp_1, "Upsilon_rr_discrete": ups_aa_1,
        "Psi": w["Psi"], "ln_G": lnG, "beta": beta,
        "dlnG": dlnG_2, "route_gap": gap,
        "predicted_bound": predicted_bound,
    }


@dataclass
class CarlemanState:
    """Assembled per-sample Carleman quantities at one (M, tau, t)."""

    M: float
    tau: float
    t: float
    ln_G: np.ndarray
    Psi: np.ndarray
    Phi: np.ndarray
    Upsilon_pp: np.ndarray
    Upsilon_rr: np.ndarray
    margin_114: np.ndarray      # min eigenvalue margin, normalized by |X|^2
    margin_115: np.ndarray      # scalar margin, normalized by |X|^2
    psi_negative: int
    route_gap: float
    extra: dict = field(default_factory=dict)


def assemble_state(spec, frames, cts, index, M, tau, lam):
    """Margins of the two pointwise inequalities at one snapshot.

    The Eq-114 side is the smallest eigenvalue of 2 Upsilon - (Phi - Psi) a
    - (lambda^2/9) g per sample (componentwise in the diagonal frame); the
    Eq-115 side differentiates the Psi field with the same discrete
    operators the identity uses.  Margins are normalized by |X|^2.
    """
    f = frames[index]
    ct = cts[index]
    pu = phi_upsilon(spec, frames, cts, index, M, tau, lam)
    psi = pu["Psi"]
    phi = pu["Phi"]
    xn2 = f.position_norm**2

    quad_pp = 2.0 * pu["Upsilon_pp"] - (phi - psi) * ct.tensor.pp \
        - lam**2 / 9.0
    quad_rr = 2.0 * pu["Upsilon_rr"] - (phi - psi) * ct.tensor.rr \
        - lam**2 / 9.0
    margin_114 = np.minimum(quad_pp, quad_rr) / xn2

    psi_fields = [carleman_weights(fr, c, M, tau, lam)["Psi"]
                  for fr, c in zip(frames, cts)]
    dt_psi = normal_time_derivative(frames, psi_fields, index)
    dpsi = f.d_dlabel(psi) / f.speed
    div_adpsi = f.d_ds(ct.tensor.pp * dpsi) \
        + (f.n - 1) * f.mu * ct.tensor.pp * dpsi
    margin_115 = (0.5 * (dt_psi - div_adpsi + (phi - psi) * psi)
                  - lam**2 / 9.0 * xn2) / xn2

    return CarlemanState(
        M=float(M), tau=float(tau), t=float(f.t),
        ln_G=pu["ln_G"], Psi=psi, Phi=phi,
        Upsilon_pp=pu["Upsilon_pp"], Upsilon_rr=pu["Upsilon_rr"],
        margin_114=margin_114, margin_115=margin_115,
        psi_negative=int(np.count_nonzero(psi < 0)),
        route_gap=pu["route_gap"],
        extra={"dlnG": pu["dlnG"]})


def verify_pointwise_inequalities(spec, frames, cts, M, tau, lam, kappa=None,
                                  R=None, margin_tol=1e-6, interior=4,
                                  indices=None):
    """Worst normalized margins of the pointwise inequalities over a run.

    Samples with |X| < R are ignored when R is given.  Margins are normalized
    by |X|^2 and compared against -margin_tol; negative-margin locations are
    flagged, never clamped.  Also reports the empirically smallest radius at
    which all margins clear the tolerance.
    """
    if indices is None:
        indices = range(1, len(frames) - 1)
    sl = slice(interior, -interior if interior else None)
    worst_114 = np.inf
    worst_115 = np.inf
    worst_loc = None
    psi_neg = 0
    min_ok_radius = 0.0
    for i in indices:
        st = assemble_state(spec, frames, cts, i, M, tau, lam)
        xn = frames[i].position_norm[sl]
        mask = np.ones(xn.size, dtype=bool) if R is None else (xn >= R)
        if not np.any(mask):
            continue
        m114 = st.margin_114[sl][mask]
        m115 = st.margin_115[sl][mask]
        psi_neg += int(np.count_nonzero(st.Psi[sl][mask] < 0))
        j = int(np.argmin(m114))
        if m114[j] < worst_114:
            worst_114 = float(m114[j])
            worst_loc = {"t": st.t, "xnorm": float(xn[mask][j]),
                         "M": M, "tau": tau}
        worst_115 = min(worst_115, float(np.min(m115)))
        bad = (m114 < -margin_tol) | (m115 < -margin_tol)
        if np.any(bad):
            min_ok_radius = max(min_ok_radius, float(np.max(xn[mask][bad])))
    return {
        "worst_margin_114": worst_114,
        "worst_margin_115": worst_115,
        "worst_location": worst_loc,
        "psi_negative_samples": psi_neg,
        "satisfied": bool(worst_114 >= -margin_tol and worst_115 >= -margin_tol),
        "margin_tol": margin_tol,
        "empirical_min_radius": min_ok_radius if min_ok_radius > 0 else
        (R if R is not None else 0.0),
    }


# ---------------------------------------------------------------------------
# integral identity and global inequality


def _support_normalization(lnG_s, u_all, du_all):
    """Log of the largest (u^2 + |grad u|^2) G integrand over the run.

    Normalizing the weight there makes the G-weighted energy integrals O(1),
    so residual and slack tolerances are meaningful; both sides of every
    identity and inequality scale by the same positive constant (u == 0
    falls back to the global max of ln G).
    """
    ln_ref = None
    for lnG, u, du in zip(lnG_s, u_all, du_all):
        dens = u**2 + du**2
        m = dens > 0
        if np.any(m):
            v = float(np.max(lnG[m] + np.log(dens[m])))
            ln_ref = v if ln_ref is None else max(ln_ref, v)
    if ln_ref is None:
        ln_ref = max(float(np.max(g)) for g in lnG_s)
    return ln_ref


def _weights_series(spec, frames, cts, M, tau, lam, ln_G_fn, Psi_fn):
    lnG, psi = [], []
    for fr, ct in zip(frames, cts):
        if ln_G_fn is None:
            w = carleman_weights(fr, ct, M, tau, lam)
            lnG.append(w["ln_G"])
            psi.append(w["Psi"])
        else:
            lnG.append(np.asarray(ln_G_fn(fr)))
            psi.append(np.asarray(Psi_fn(fr)))
    return lnG, psi


def carleman_identity_check(spec, frames, cts, u_fn, M=1.0, tau=1.0,
                            lam=1.0, ln_G_fn=None, Psi_fn=None,
                            window=None):
    """Both sides of the per-slice integral identity, integrated in time.

    ``u_fn(frame)`` returns (u, du_dlabel, du_dt) closed form on the slice;
    the support must stay clear of the label-grid edges.  The d/dt{...}
    boundary term is evaluated exactly at the window endpoints; the other
    time integrals use the trapezoid rule.  Overriding ``ln_G_fn``/``Psi_fn``
    (e.g. G = 1, Psi = 0 on a static plane) reduces the identity to the
    plain parabolic energy identity.  All G-weighted integrals share one
    global normalization of the weight; the returned residual is
    |LHS - RHS| in those normalized units, with the magnitudes reported.
    """
    mterod = len(frames)
    if window is None:
        window = (1, mterod - 2)
    i_a, i_b = window
    if not (1 <= i_a < i_b <= mterod - 2):
        raise ArgumentError("identity window must be interior to the run")

    lnG_s, psi_s = _weights_series(spec, frames, cts, M, tau, lam,
                                   ln_G_fn, Psi_fn)

    u_all, du_all, dtu_all = [], [], []
    for fr in frames:
        u, du, dtu = u_fn(fr)
        edge = max(abs(u[0]), abs(u[-1]), abs(u[1]), abs(u[-2]))
        if edge > 1e-13 * (np.max(np.abs(u)) + 1e-300):
            raise ArgumentError("test function support touches the grid edge")
        u_all.append(u)
        du_all.append(du)
        dtu_all.append(dtu)

    ln_ref = _support_normalization(lnG_s, u_all, du_all)

    def slice_integrals(i):
        fr, ct = frames[i], cts[i]
        u, du = u_all[i], du_all[i]
        dus = du / fr.speed
        G = np.exp(lnG_s[i] - ln_ref)
        psi = psi_s[i]
        dlnG = f_dlnG[i]
        # P u with the normal-parametrization time derivative of u
        dtu = dtu_all[i] + fr.v_label * du
        div_adu = fr.d_ds(ct.tensor.pp * dus) \
            + (fr.n - 1) * fr.mu * ct.tensor.pp * dus
        Pu = dtu - div_adu
        w1 = dtu + ct.tensor.pp * dlnG * dus + 0.5 * psi * u
        rhs1 = fr.integrate(2.0 * Pu * w1 * G)
        rhs2 = fr.integrate(2.0 * w1**2 * G)
        boundary = fr.integrate((ct.tensor.pp * dus**2 - 0.5 * psi * u**2) * G)
        return rhs1, rhs2, boundary

    def lhs_slice(i):
        fr, ct = frames[i], cts[i]
        st_pu = phi_upsilon(spec, frames, cts, i, M, tau, lam) \
            if ln_G_fn is None else None
        u, du = u_all[i], du_all[i]
        dus = du / fr.speed
        G = np.exp(lnG_s[i] - ln_ref)
        psi = psi_s[i]
        if ln_G_fn is None:
            ups_pp = st_pu["Upsilon_pp_discrete"]
            phi = st_pu["Phi_discrete"]
        else:
            # generic weights: assemble Phi/Upsilon discretely from the field
            lnG = lnG_s[i]
            dlnG1 = fr.d_ds(lnG)
            hpp = fr.d2_ds2(lnG)
            haa = fr.mu * dlnG1
            lnG_fields = lnG_s
            dt_lnG = normal_time_derivative(frames, lnG_fields, i)
            div_adlnG = fr.d_ds(ct.tensor.pp * dlnG1) \
                + (fr.n - 1) * fr.mu * ct.tensor.pp * dlnG1
            phi = dt_lnG + div_adlnG + ct.tensor.pp * dlnG1**2 - fr.F * fr.H
            dt_app, dt_arr = _dt_up_tensor(frames, cts, i)
            d_app = fr.d_ds(ct.tensor.pp)
            ups_pp = ct.tensor.pp**2 * hpp - 0.5 * dt_app \
                + 0.5 * ct.tensor.pp * d_app * dlnG1
        quad = (2.0 * ups_pp - (phi - psi) * ct.tensor.pp) * dus**2
        psi_fields = psi_s
        dt_psi = normal_time_derivative(frames, psi_fields, i)
        dpsi = fr.d_ds(psi)
        div_adpsi = fr.d_ds(ct.tensor.pp * dpsi) \
            + (fr.n - 1) * fr.mu * ct.tensor.pp * dpsi
        zer = 0.5 * (dt_psi - div_adpsi + (phi - psi) * psi) * u**2
        return fr.integrate((quad + zer) * G)

    # precompute dlnG fields used by the slice integrals
    f_dlnG = []
    for i, fr in enumerate(frames):
        f_dlnG.append(fr.d_ds(lnG_s[i]))

    times = np.array([fr.t for fr in frames])
    idx = list(range(i_a, i_b + 1))
    lhs_vals = np.array([lhs_slice(i) for i in idx])
    rhs1_vals, rhs2_vals, bnd_vals = np.array(
        [slice_integrals(i) for i in idx]).T

    lhs_t = _trapz(lhs_vals, times[idx])
    rhs_t = _trapz(rhs1_vals - rhs2_vals, times[idx]) \
        - (bnd_vals[-1] - bnd_vals[0])
    scale = abs(lhs_t) + abs(rhs_t) + np.max(np.abs(rhs1_vals)) * (
        times[idx][-1] - times[idx][0]) + 1e-300
    return {
        "lhs": float(lhs_t),
        "rhs": float(rhs_t),
        "residual": float(lhs_t - rhs_t),
        "relative_residual": float((lhs_t - rhs_t) / scale),
        "normalization": float(ln_ref),
        "window": (float(times[i_a]), float(times[i_b])),
    }


def global_carleman_check(spec, frames, cts, u_fn, M, tau, lam):
    """Slack of the global inequality over a full [-tau, 0] run.

    slack = RHS - LHS with LHS = (lambda^2/9) double-integral of
    (|grad u|^2 + u^2) G and RHS the |Pu|^2 integral plus the initial-slice
    gradient term (weighted by 3/lambda) plus the terminal Psi u^2 term
    (dropped when u vanishes at t = 0).  Values are normalized by the global
    maximum of G; expected slack >= -1e-8 in those units.
    """
    if not (M >= 1 and 0 < tau <= 1):
        raise ArgumentError("need M >= 1 and tau in (0, 1]")
    times = np.array([fr.t for fr in frames])
    if abs(times[0] + tau) > 1e-10 or abs(times[-1]) > 1e-12:
        raise ArgumentError("run must cover t in [-tau, 0]")

    lnG_s, psi_s = _weights_series(spec, frames, cts, M, tau, lam, None, None)
    u_series = [u_fn(fr) for fr in frames]
    ln_ref = _support_normalization(lnG_s, [u[0] for u in u_series],
                                    [u[1] for u in u_series])

    lhs_vals, pu_vals = [], []
    for i, fr in enumerate(frames):
        ct = cts[i]
        u, du, dtu_partial = u_series[i]
        edge = max(abs(u[0]), abs(u[-1]))
        if edge > 1e-13 * (np.max(np.abs(u)) + 1e-300):
            raise ArgumentError("test function support touches the grid edge")
        dus = du / fr.speed
        G = np.exp(lnG_s[i] - ln_ref)
        dtu = dtu_partial + fr.v_label * du
        div_adu = fr.d_ds(ct.tensor.pp * dus) \
            + (fr.n - 1) * fr.mu * ct.tensor.pp * dus
        Pu = dtu - div_adu
        lhs_vals.append(fr.integrate((dus**2 + u**2) * G))
        pu_vals.append(fr.integrate(Pu**2 * G))

    lhs = lam**2 / 9.0 * _trapz(lhs_vals, times)
    rhs = float(_trapz(pu_vals, times))

    fr0, ct0 = frames[0], cts[0]
    u0, du0, _ = u_fn(fr0)
    G0 = np.exp(lnG_s[0] - ln_ref)
    rhs += 3.0 / lam * fr0.integrate((du0 / fr0.speed) ** 2 * G0)

    frT, ctT = frames[-1], cts[-1]
    uT, _, _ = u_fn(frT)
    GT = np.exp(lnG_s[-1] - ln_ref)
    terminal = 0.5 * frT.integrate(psi_s[-1] * uT**2 * GT)
    rhs += terminal

    return {
        "lhs": float(lhs),
        "rhs": float(rhs),
        "slack": float(rhs - lhs),
        "terminal_term": float(terminal),
        "normalization": float(ln_ref),
    }


# ---------------------------------------------------------------------------
# run builders and test functions


def shrinker_flow_frames(spec, solution, zeta_grid, times, offset_of=None):
    """Frames and coefficient tensors of a rescaled shrinker flow.

    Slices sqrt(-t) Sigma are exact dilations of the solved end; t = 0 gives
    the cone.  ``offset_of`` optionally maps a slice profile to the offset
    geometry of a second surface (for pair-based tensors); by default the
    averaging segment collapses (a = dF/dS at the slice spectrum).
    """
    zeta_grid = np.asarray(zeta_grid, dtype=float)
    frames, cts = [], []
    for t in times:
        prof = solution.slice_profile(float(t), zeta_grid)
        fr = frame_from_profile(spec, prof, float(t))
        offset = offset_of(prof) if offset_of is not None else None
        pframe = ProfileFrame(prof)
        cts.append(tensor_a(spec, prof, offset, frame=pframe))
        frames.append(fr)
    return frames, cts


def bump_test_function(center, width, amplitude=1.0, t_power=0, tau=1.0):
    """Smooth compact bump (1 - s^2)^3 in the label, polynomial ramp in time.

    t_power = 0 gives a time-independent profile (nonvanishing at t = 0);
    t_power >= 1 vanishes at t = 0 like (-t)^t_power.
    """
    def u_fn(frame):
        s = (frame.x - center) / width
        inside = np.abs(s) < 1.0
        core = np.where(inside, (1.0 - s**2) ** 3, 0.0)
        dcore = np.where(inside, -6.0 * s * (1.0 - s**2) ** 2 / width, 0.0)
        if t_power == 0:
            ramp, dramp = 1.0, 0.0
        else:
            ramp = (-frame.t) ** t_power
            dramp = -t_power * (-frame.t) ** (t_power - 1)
        u = amplitude * core * ramp
        du = amplitude * dcore * ramp
        dtu = amplitude * core * dramp
        return u, du, dtu

    return u_fn
