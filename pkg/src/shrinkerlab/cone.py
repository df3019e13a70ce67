"""Closed-form rotationally symmetric cone geometry and the uniqueness hypothesis.

The cone C = {(sigma s nu, s) : nu in S^{n-1}, s > 0} has principal curvatures
(1/(sigma |X|), ..., 1/(sigma |X|), 0) and a covariant curvature derivative
whose only nonzero components (up to total symmetry) are

    nabla A (e_i, e_j, e_n) = -1/(sigma |X|^2) delta_ij,   i, j != n,

with e_n the ray direction.  From these we compute the two constants entering
the uniqueness hypothesis for a curvature function F:

* ellipticity constant lambda: two-sided eigenvalue bound of dF/dS on the
  cone's shape operators over the annulus 1/3 <= |X| <= 3, clipped at 1;
* curvature constant kappa: sup of |X| times the norm of the second
  derivative of F contracted with nabla A.  The norm is Frobenius over the
  free matrix slot with a sup over the derivative direction (recorded in
  every report, since the source estimate does not pin the norm down).

The hypothesis is kappa <= lambda^3 / 6^4.
"""

from dataclasses import dataclass

import numpy as np

from .curvature import MatrixPoint, d2F_contract, grad_f, hess_f, ratio_perturbed_spec
from .errors import ArgumentError, DomainError

__all__ = [
    "ConeSpec",
    "HypothesisReport",
    "ANNULUS",
    "cone_principal_curvatures",
    "cone_nabla_A",
    "ellipticity_lambda",
    "kappa_constant",
    "kappa_bound_rotsym",
    "check_uniqueness_hypothesis",
    "max_admissible_epsilon",
]

ANNULUS = (1.0 / 3.0, 3.0)
NORM_NOTE = ("kappa norm: Frobenius over the free (i,j) slot, sup over the "
             "covariant-derivative direction; annulus sampled on a geometric "
             "grid (the integrand is constant along rays).")


@dataclass(frozen=True)
class ConeSpec:
    n: int
    sigma: float
    orientation: int = +1

    def __post_init__(self):
        if self.n < 2:
            raise ArgumentError("need n >= 2")
        if not self.sigma > 0:
            raise ArgumentError("cone slope sigma must be positive")
        if self.orientation not in (+1, -1):
            raise ArgumentError("orientation must be +1 or -1")

    def position_norm(self, s):
        return s * np.sqrt(1.0 + self.sigma**2)


@dataclass(frozen=True)
class HypothesisReport:
    ellipticity: float          # lambda in (0, 1]
    kappa: float                # curvature constant >= 0
    bound: float                # ellipticity^3 / 1296
    satisfied: bool
    annulus: tuple
    grid_points: int
    note: str
    reason: str = None

    def to_dict(self):
        return {
            "lambda": self.ellipticity,
            "kappa": self.kappa,
            "bound": self.bound,
            "satisfied": self.satisfied,
            "annulus": list(self.annulus),
            "grid_points": self.grid_points,
            "note": self.note,
            "reason": self.reason,
        }


def cone_principal_curvatures(cone, s):
    """(orientation/(sigma |X|), ..., 0) at the cone point with height s."""
    if not s > 0:
        raise ArgumentError("cone parameter s must be positive")
    c = cone.orientation / (cone.sigma * cone.position_norm(s))
    lam = np.full(cone.n, c)
    lam[-1] = 0.0
    return lam


def cone_nabla_A(cone, s):
    """Totally symmetric nabla A of the cone as an (n, n, n) component array."""
    if not s > 0:
        raise ArgumentError("cone parameter s must be positive")
    n = cone.n
    v = -cone.orientation / (cone.sigma * cone.position_norm(s) ** 2)
    T = np.zeros((n, n, n))
    for a in range(n - 1):
        T[a, a, n - 1] = v
        T[a, n - 1, a] = v
        T[n - 1, a, a] = v
    return T


def _annulus_grid(points):
    return np.geomspace(ANNULUS[0], ANNULUS[1], points)


def ellipticity_lambda(spec, cone, grid_points=64):
    """min(1, inf min-eig dF/dS, inf 1/max-eig dF/dS) over the cone annulus.

    dF/dS at the cone shape operator is diagonal with entries grad f at the
    cone curvature vector, so the eigenvalue bounds reduce to the gradient
    range; degree-0 homogeneity makes the integrand constant along rays and
    the grid is kept as a consistency check.
    """
    lo = np.inf
    hi = 0.0
    # |X| = s sqrt(1+sigma^2): sample s so |X| covers the annulus
    for x in _annulus_grid(max(int(grid_points), 2)):
        s = x / np.sqrt(1.0 + cone.sigma**2)
        g = grad_f(spec, cone_principal_curvatures(cone, s))
        lo = min(lo, float(np.min(g)))
        hi = max(hi, float(np.max(g)))
    if lo <= 0:
        raise DomainError(
            f"dF/dS not positive on the cone annulus (min gradient {lo:.3e})",
            margin=lo)
    return min(1.0, lo, 1.0 / hi)


def kappa_constant(spec, cone, grid_points=64):
    """sup over the annulus of |X| * ||d2F(A_cone) . nabla A_cone||.

    Assembled from d2F_contract and cone_nabla_A; Frobenius norm over the
    free slot, sup over the direction slot.  Scale-free along rays, so the
    grid sup is a numerical consistency check rather than a search.
    """
    worst = 0.0
    for x in _annulus_grid(max(int(grid_points), 2)):
        s = x / np.sqrt(1.0 + cone.sigma**2)
        lam = cone_principal_curvatures(cone, s)
        pt = MatrixPoint.from_diagonal(lam)
        nabla = cone_nabla_A(cone, s)
        xnorm = cone.position_norm(s)
        for direction in range(cone.n):
            M = d2F_contract(spec, pt, nabla[:, :, direction])
            worst = max(worst, xnorm * float(np.linalg.norm(M)))
    return worst


def kappa_bound_rotsym(spec, c_of_n=None):
    """Closed-form bound C(n) (||hess f(1,...,1,0)|| + |df_1 - df_n|).

    C(n) = n^2 here: a generous count of the nonzero nabla A components
    feeding the contraction.  Dominates kappa_constant for every built-in
    family; only the bound depends on this choice, never kappa itself.
    """
    n = spec.n
    lam = np.ones(n)
    lam[-1] = 0.0
    C = float(c_of_n) if c_of_n is not None else float(n * n)
    H = hess_f(spec, lam)
    g = grad_f(spec, lam)
    return C * (float(np.linalg.norm(H)) + abs(float(g[0] - g[n - 1])))


def check_uniqueness_hypothesis(spec, cone, grid_points=64):
    """HypothesisReport for kappa <= lambda^3 / 1296 on the given cone."""
    try:
        lam = ellipticity_lambda(spec, cone, grid_points)
        kap = kappa_constant(spec, cone, grid_points)
    except DomainError as exc:
        return HypothesisReport(
            ellipticity=float("nan"), kappa=float("inf"), bound=0.0,
            satisfied=False, annulus=ANNULUS, grid_points=int(grid_points),
            note=NORM_NOTE, reason=str(exc))
    bound = lam**3 / 6.0**4
    return HypothesisReport(
        ellipticity=lam, kappa=kap, bound=bound,
        satisfied=bool(kap <= bound), annulus=ANNULUS,
        grid_points=int(grid_points), note=NORM_NOTE)


def max_admissible_epsilon(family, cone, tol=1e-6, eps_hi=1.0, max_doublings=20):
    """Bisect the largest eps with the hypothesis satisfied.

    ``family`` maps eps >= 0 to a CurvatureSpec (e.g. the E1 +/- eps ratio
    family).  Returns (eps_star, bracket): satisfied just below eps_star,
    violated just above, bracket width <= tol.
    """
    def satisfied(eps):
        return check_uniqueness_hypothesis(family(eps), cone).satisfied

    lo = 0.0
    if not satisfied(lo):
        raise ArgumentError("hypothesis fails at lower bracket eps=0")
    hi = float(eps_hi)
    doublings = 0
    while satisfied(hi):
        lo = hi
        hi *= 2.0
        doublings += 1
        if doublings > max_doublings:
            raise ArgumentError(
                f"hypothesis still satisfied at eps={hi:.3e}; no upper bracket")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if satisfied(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), (lo, hi)


def ratio_family(n, sign=+1, domain_eps=1e-9):
    """The E1 +/- eps En/En-1 family as an eps -> spec callable."""
    def family(eps):
        if eps == 0.0:
            from .curvature import mean_curvature_spec
            return mean_curvature_spec(n)
        return ratio_perturbed_spec(n, eps, sign, domain_eps)
    return family
