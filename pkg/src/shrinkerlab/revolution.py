"""Discrete geometry of rotationally symmetric hypersurfaces r(z).

A hypersurface of revolution in R^{n+1} is sampled by its profile r(z) > 0
with first and second derivative samples.  With orientation +1 the unit
normal points toward the axis, N = (-nu, r1)/sqrt(1+r1^2), and

    kappa_rot  = 1/(r sqrt(1+r1^2))        (multiplicity n-1)
    kappa_prof = -r2/(1+r1^2)^(3/2)
    X.N        = (z r1 - r)/sqrt(1+r1^2)

orientation -1 flips all three signs.  These formulas are validated against
the closed-form cone, cylinder and sphere in the test suite before anything
downstream relies on them.

The module also computes the exact geometry of a normal graph over a profile
(offset surface metric, normal and shape operator in the base principal
frame), which is what the deviation machinery consumes.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .meridian import fd4_d1, fd4_d2

__all__ = [
    "ProfileCurve",
    "PointGeometry",
    "ProfileFrame",
    "point_geometry",
    "profile_geometry",
    "shrinker_residual",
    "normal_graph_geometry",
    "cone_profile",
    "cylinder_profile",
    "sphere_profile",
]


@dataclass
class ProfileCurve:
    """Sampled profile of a hypersurface of revolution.

    ``r1``/``r2`` are dr/dz and d^2r/dz^2 samples.  ``derivative_source``
    records whether they came from a solver ("analytic") or from 4th-order
    central differences of the r samples ("differenced").
    """

    n: int
    z: np.ndarray
    r: np.ndarray
    r1: np.ndarray = None
    r2: np.ndarray = None
    orientation: int = +1
    derivative_source: str = "analytic"

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        if self.n < 2:
            raise ArgumentError("need n >= 2")
        if self.orientation not in (+1, -1):
            raise ArgumentError("orientation must be +1 or -1")
        if self.z.ndim != 1 or self.z.size < 2:
            raise ArgumentError("z must be a 1D sample vector")
        if np.any(np.diff(self.z) <= 0):
            raise ArgumentError("z samples must be strictly increasing")
        if self.r.shape != self.z.shape:
            raise ArgumentError("r and z must have matching shapes")
        if np.any(self.r <= 0):
            raise ArgumentError("profile radius must be positive everywhere")
        if self.r1 is None or self.r2 is None:
            dz = self._uniform_dz()
            self.r1 = fd4_d1(self.r, dz)
            self.r2 = fd4_d2(self.r, dz)
            self.derivative_source = "differenced"
        else:
            self.r1 = np.asarray(self.r1, dtype=float)
            self.r2 = np.asarray(self.r2, dtype=float)

    def _uniform_dz(self):
        dz = np.diff(self.z)
        if np.max(dz) - np.min(dz) > 1e-9 * np.max(dz):
            raise ArgumentError("differenced derivatives require a uniform z grid")
        return float(dz[0])

    @property
    def size(self):
        return self.z.size

    def validate_derivatives(self, rtol=None):
        """Check supplied derivative samples against finite differences.

        The tolerance is O(dz^2) by default, the contract for externally
        supplied data.  Returns the worst relative mismatch.
        """
        dz = self._uniform_dz()
        if rtol is None:
            rtol = 100.0 * dz**2
        scale = np.max(np.abs(self.r1)) + np.max(np.abs(self.r)) + 1.0
        worst = np.max(np.abs(fd4_d1(self.r, dz) - self.r1)) / scale
        worst2 = np.max(np.abs(fd4_d2(self.r, dz) - self.r2)) / scale
        worst = max(float(worst), float(worst2))
        if worst > rtol:
            raise ArgumentError(
                f"derivative samples inconsistent with r: mismatch {worst:.3e} > {rtol:.3e}")
        return worst

    # -- CSV round trip ------------------------------------------------------

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"# n={self.n} orientation={self.orientation:+d} "
                     f"derivative_source={self.derivative_source}\n")
            fh.write("z,r,r1,r2\n")
            for k in range(self.size):
                fh.write(",".join(format(v, ".17g") for v in
                                  (self.z[k], self.r[k], self.r1[k], self.r2[k])) + "\n")

    @classmethod
    def from_csv(cls, path, validate=True):
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("#"):
                raise ArgumentError("profile CSV must start with a '# n=... ' header")
            meta = dict(tok.split("=") for tok in header[1:].split())
            cols = fh.readline().strip().split(",")
            if cols != ["z", "r", "r1", "r2"]:
                raise ArgumentError("profile CSV must have columns z,r,r1,r2")
            data = np.loadtxt(fh, delimiter=",").reshape(-1, 4)
        p = cls(n=int(meta["n"]), z=data[:, 0], r=data[:, 1],
                r1=data[:, 2], r2=data[:, 3],
                orientation=int(meta["orientation"]),
                derivative_source=meta.get("derivative_source", "analytic"))
        if validate:
            p.validate_derivatives()
        return p


# ---------------------------------------------------------------------------
# analytic reference profiles


def cone_profile(n, sigma, z, orientation=+1):
    z = np.asarray(z, dtype=float)
    return ProfileCurve(n, z, sigma * z, sigma * np.ones_like(z),
                        np.zeros_like(z), orientation)


def cylinder_profile(n, radius, z, orientation=+1):
    z = np.asarray(z, dtype=float)
    return ProfileCurve(n, z, np.full_like(z, float(radius)),
                        np.zeros_like(z), np.zeros_like(z), orientation)


def sphere_profile(n, radius, z, orientation=+1):
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) >= radius):
        raise ArgumentError("sphere profile needs |z| < radius")
    r = np.sqrt(radius**2 - z**2)
    r1 = -z / r
    r2 = -radius**2 / r**3
    return ProfileCurve(n, z, r, r1, r2, orientation)


# ---------------------------------------------------------------------------
# pointwise geometry


@dataclass(frozen=True)
class PointGeometry:
    kappa_prof: float
    kappa_rot: float
    support: float          # X . N
    speed_factor: float     # sqrt(1 + r1^2)
    H: float                # mean curvature kappa_prof + (n-1) kappa_rot
    position_norm: float    # |X| = sqrt(r^2 + z^2)


def profile_geometry(p):
    """Vectorized per-sample geometry of a profile curve."""
    ori = float(p.orientation)
    speed = np.sqrt(1.0 + p.r1**2)
    phi = 1.0 / speed
    kappa_rot = ori * phi / p.r
    kappa_prof = -ori * p.r2 * phi**3
    support = ori * (p.z * p.r1 - p.r) * phi
    xnorm = np.hypot(p.r, p.z)
    H = kappa_prof + (p.n - 1) * kappa_rot
    return {
        "speed_factor": speed,
        "phi": phi,
        "kappa_prof": kappa_prof,
        "kappa_rot": kappa_rot,
        "support": support,
        "position_norm": xnorm,
        "H": H,
        # tangential radial component X . e_p with e_p the unit meridian
        # tangent toward increasing z
        "x_tan": (p.r * p.r1 + p.z) * phi,
        # warping rate mu = (d rho/ds)/rho with rho = r
        "mu": p.r1 * phi / p.r,
    }


def point_geometry(p, index):
    g = profile_geometry(p)
    i = int(index)
    if not (0 <= i < p.size):
        raise ArgumentError(f"sample index {index} out of range")
    return PointGeometry(
        kappa_prof=float(g["kappa_prof"][i]),
        kappa_rot=float(g["kappa_rot"][i]),
        support=float(g["support"][i]),
        speed_factor=float(g["speed_factor"][i]),
        H=float(g["H"][i]),
        position_norm=float(g["position_norm"][i]),
    )


def curvature_vectors(p, geometry=None):
    """Per-sample principal curvature vectors (kappa_prof, kappa_rot x (n-1))."""
    g = geometry or profile_geometry(p)
    lam = np.empty((p.size, p.n))
    lam[:, 0] = g["kappa_prof"]
    lam[:, 1:] = g["kappa_rot"][:, None]
    return lam


def shrinker_residual(spec, p):
    """f(kappa) + (X.N)/2 per sample; zero exactly on a self-shrinker."""
    from .errors import DomainError

    g = profile_geometry(p)
    lam = curvature_vectors(p, g)
    res = np.empty(p.size)
    for i in range(p.size):
        m = spec.domain_margin(lam[i])
        if not m > 0:
            raise DomainError(
                f"curvatures at sample {i} (z={p.z[i]:.6g}) outside the "
                f"admissible set of {spec.name} (margin={m:.3e})",
                margin=m, index=i)
        res[i] = spec.value(lam[i]) + 0.5 * g["support"][i]
    return res


# ---------------------------------------------------------------------------
# meridian frame: cached arrays + arc-length differential operators


class ProfileFrame:
    """A profile curve together with arc-length calculus on its z grid."""

    def __init__(self, p):
        self.profile = p
        self.geometry = profile_geometry(p)
        self.dz = p._uniform_dz()
        self.phi = self.geometry["phi"]

    def d_ds(self, y):
        """Arc-length derivative of an invariant scalar sampled on the grid."""
        return self.phi * fd4_d1(y, self.dz)

    def d2_ds2(self, y):
        return self.phi * fd4_d1(self.phi * fd4_d1(y, self.dz), self.dz)

    @property
    def mu(self):
        return self.geometry["mu"]

    def kappa_prof_prime(self):
        """d kappa_prof / ds, by differencing (needs a 3rd derivative of r)."""
        return self.d_ds(self.geometry["kappa_prof"])

    def kappa_rot_prime(self):
        """d kappa_rot / ds via the Codazzi identity, algebraic and exact."""
        g = self.geometry
        return g["mu"] * (g["kappa_prof"] - g["kappa_rot"])


# ---------------------------------------------------------------------------
# exact normal-graph geometry


def normal_graph_geometry(base, h, h1=None, h2=None):
    """Exact offset-surface geometry of X~ = X + h N over a base profile.

    ``h1``/``h2`` are covariant (arc-length) derivatives of the invariant
    deviation sample h; when omitted they are computed by 4th-order
    differences.  Returns frame components of the offset metric, the offset
    unit normal expressed in the base (e_p, N) frame, the offset shape
    operator in base coordinates, and the normal alignment N~ . N.

    Requires 1 - kappa_i h > 0 at every sample (non-degenerate graph).
    """
    h = np.asarray(h, dtype=float)
    frame = ProfileFrame(base)
    g = frame.geometry
    if h.shape != base.z.shape:
        raise ArgumentError("h must be sampled on the base z grid")
    if h1 is None:
        h1 = frame.d_ds(h)
    if h2 is None:
        h2 = frame.d2_ds2(h)

    kp, kr, mu = g["kappa_prof"], g["kappa_rot"], g["mu"]
    u_p = 1.0 - kp * h
    u_r = 1.0 - kr * h
    bad = np.where((u_p <= 0) | (u_r <= 0))[0]
    if bad.size:
        i = int(bad[0])
        raise ArgumentError(
            f"degenerate normal graph at sample {i} (z={base.z[i]:.6g}): "
            f"1 - kappa h = {min(u_p[i], u_r[i]):.3e}")

    gt_pp = u_p**2 + h1**2
    gt_rr = u_r**2
    W = np.sqrt(gt_pp)

    kp_s = frame.kappa_prof_prime()
    kr_s = frame.kappa_rot_prime()

    # second fundamental form of the offset in the base principal frame
    B_pp = (h1 / W) * (2.0 * kp * h1 + kp_s * h) + (u_p / W) * (kp + h2 - kp**2 * h)
    B_rr = (h1 / W) * (kr_s * h) + (u_p / W) * (kr + mu * h1 - kr**2 * h)

    return {
        "g_pp": gt_pp,
        "g_rr": gt_rr,
        "shape_pp": B_pp / gt_pp,
        "shape_rr": B_rr / gt_rr,
        "second_ff_pp": B_pp,
        "second_ff_rr": B_rr,
        "normal_tangential": -h1 / W,   # N~ . e_p
        "normal_alignment": u_p / W,    # N~ . N
        "h1": h1,
        "h2": h2,
    }
