"""Symmetric degree-one curvature functions and their matrix derivatives.

A curvature function is a symmetric function f(lambda_1, ..., lambda_n),
positively homogeneous of degree one, with all partials positive on its
admissible open set.  Applied to the eigenvalues of a shape operator S it
induces a conjugation-invariant matrix function F(S).  This module evaluates
f, grad f, hess f in closed form for the built-in families and assembles the
matrix derivatives dF/dS and the once-contracted second derivative in the
eigenframe, including the divided-difference terms for distinct eigenvalues
and their analytic limit on (nearly) degenerate pairs.

Built-in families:

* ``E1``          -- f = sum(lambda), the mean curvature.
* ``E1_plus_ratio`` / ``E1_minus_ratio`` -- f = E1 +/- eps * En/En-1.

All operations are pure functions of their arguments.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DomainError

__all__ = [
    "CurvatureSpec",
    "MatrixPoint",
    "elementary_symmetric",
    "mean_curvature_spec",
    "ratio_perturbed_spec",
    "composed_spec",
    "make_spec",
    "builtin_spec_names",
    "eval_f",
    "grad_f",
    "hess_f",
    "eval_f_rows",
    "grad_f_rows",
    "eval_F",
    "dF_dS",
    "d2F_contract",
    "check_admissible",
]

# Relative scale below which an eigenvalue gap is treated as degenerate and
# the divided difference (df_i - df_k)/(l_i - l_k) is replaced by its smooth
# limit hess[i,i] - hess[i,k].
DEGENERATE_TOL = 1e-7


# ---------------------------------------------------------------------------
# elementary symmetric polynomials


def _elem_all(lam):
    """All elementary symmetric values e_0..e_n of a vector, by Vieta recursion."""
    lam = np.asarray(lam, dtype=float)
    e = np.zeros(lam.size + 1)
    e[0] = 1.0
    for x in lam:
        e[1:] = e[1:] + x * e[:-1].copy()
    return e


def elementary_symmetric(k, lam):
    """e_k(lam) = sum over k-subsets of products; e_1 = sum, e_n = prod."""
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    if not (1 <= k <= n):
        raise ArgumentError(f"elementary symmetric index k={k} out of range 1..{n}")
    return _elem_all(lam)[k]


def _elem_excluding(lam, skip):
    """e_0..e_{n-1} of lam with index ``skip`` removed."""
    lam = np.asarray(lam, dtype=float)
    keep = np.delete(lam, skip)
    return _elem_all(keep)


# ---------------------------------------------------------------------------
# curvature function specs


@dataclass(frozen=True)
class CurvatureSpec:
    """A symmetric degree-one curvature function with closed-form derivatives.

    ``value``, ``gradient``, ``hessian`` take a length-n vector; ``domain_margin``
    is positive inside the admissible open set and negative outside.
    """

    name: str
    n: int
    value: callable
    gradient: callable
    hessian: callable
    domain_margin: callable
    params: dict = field(default_factory=dict)

    def __repr__(self):
        ps = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"CurvatureSpec({self.name}, n={self.n}" + (f", {ps})" if ps else ")")


def mean_curvature_spec(n):
    """f = E1: the mean curvature. Defined on all of R^n."""
    if n < 2:
        raise ArgumentError("need n >= 2")

    def value(lam):
        return float(np.sum(lam))

    def gradient(lam):
        return np.ones(n)

    def hessian(lam):
        return np.zeros((n, n))

    def margin(lam):
        return 1.0

    return CurvatureSpec("E1", n, value, gradient, hessian, margin)


def ratio_perturbed_spec(n, eps, sign=+1, domain_eps=1e-9):
    """f = E1 + sign*eps*En/En-1 on the open set {En-1 > domain_eps}."""
    if n < 2:
        raise ArgumentError("need n >= 2")
    if eps < 0:
        raise ArgumentError("eps must be nonnegative")
    if sign not in (+1, -1):
        raise ArgumentError("sign must be +1 or -1")
    s = float(sign) * float(eps)

    def _ratio_parts(lam):
        lam = np.asarray(lam, dtype=float)
        e = _elem_all(lam)
        N, D = e[n], e[n - 1]
        # dN[i] = e_{n-1}(lam w/o i), dD[i] = e_{n-2}(lam w/o i)
        ex = [_elem_excluding(lam, i) for i in range(n)]
        dN = np.array([ex[i][n - 1] for i in range(n)])
        dD = np.array([ex[i][n - 2] for i in range(n)])
        return lam, N, D, dN, dD

    def value(lam):
        lam = np.asarray(lam, dtype=float)
        e = _elem_all(lam)
        return float(e[1] + s * e[n] / e[n - 1])

    def gradient(lam):
        lam, N, D, dN, dD = _ratio_parts(lam)
        return 1.0 + s * (dN * D - N * dD) / D**2

    def hessian(lam):
        lam, N, D, dN, dD = _ratio_parts(lam)
        H = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i == j:
                    d2N = 0.0
                    d2D = 0.0
                else:
                    keep = np.delete(lam, (i, j))
                    ee = _elem_all(keep)
                    d2N = ee[n - 2]
                    d2D = ee[n - 3] if n >= 3 else 0.0
                q_i = (dN[i] * D - N * dD[i]) / D**2
                H[i, j] = (
                    (d2N * D + dN[i] * dD[j] - dN[j] * dD[i] - N * d2D) / D**2
                    - 2.0 * dD[j] * q_i / D
                )
        return s * 0.5 * (H + H.T)  # symmetrize away roundoff asymmetry

    def margin(lam):
        lam = np.asarray(lam, dtype=float)
        return float(_elem_all(lam)[n - 1] - domain_eps)

    name = "E1+eps*En/En-1" if sign > 0 else "E1-eps*En/En-1"
    return CurvatureSpec(
        name, n, value, gradient, hessian, margin,
        params={"eps": float(eps), "sign": sign, "domain_eps": domain_eps},
    )


def composed_spec(name, n, g, grad_g=None, hess_g=None, domain_margin=None,
                  fd_step=1e-6, fd_step_hess=3e-4):
    """Hook for user curvature functions given as g(e_1, ..., e_n).

    ``g`` maps the vector of elementary symmetric values to f; missing
    derivatives of g are filled in by central finite differences in e-space.
    The chain rule through the closed-form derivatives of e_k then yields
    grad f and hess f.  The composition must be degree-one homogeneous in
    lambda to be a valid curvature function; that is the caller's contract.
    """

    def _evec(lam):
        return _elem_all(lam)[1:]

    def _grad_g(e):
        if grad_g is not None:
            return np.asarray(grad_g(e), dtype=float)
        out = np.zeros(n)
        for k in range(n):
            h = fd_step * max(1.0, abs(e[k]))
            ep, em = e.copy(), e.copy()
            ep[k] += h
            em[k] -= h
            out[k] = (g(ep) - g(em)) / (2 * h)
        return out

    def _hess_g(e):
        if hess_g is not None:
            return np.asarray(hess_g(e), dtype=float)
        out = np.zeros((n, n))
        for k in range(n):
            for l in range(k, n):
                hk = fd_step_hess * max(1.0, abs(e[k]))
                hl = fd_step_hess * max(1.0, abs(e[l]))
                epp, epm, emp, emm = (e.copy() for _ in range(4))
                epp[k] += hk; epp[l] += hl
                epm[k] += hk; epm[l] -= hl
                emp[k] -= hk; emp[l] += hl
                emm[k] -= hk; emm[l] -= hl
                out[k, l] = out[l, k] = (g(epp) - g(epm) - g(emp) + g(emm)) / (4 * hk * hl)
        return out

    def _de(lam):
        # de[k, i] = d e_{k+1} / d lambda_i = e_k(lam w/o i)
        de = np.zeros((n, n))
        for i in range(n):
            ex = _elem_excluding(lam, i)
            de[:, i] = ex[:n]
        return de

    def value(lam):
        return float(g(_evec(lam)))

    def gradient(lam):
        lam = np.asarray(lam, dtype=float)
        return _grad_g(_evec(lam)) @ _de(lam)

    def hessian(lam):
        lam = np.asarray(lam, dtype=float)
        e = _evec(lam)
        gg = _grad_g(e)
        Hg = _hess_g(e)
        de = _de(lam)
        H = de.T @ Hg @ de
        # second derivatives of e_{k+1}: d2e[k][i,j] = e_{k-1}(lam w/o i,j)
        for k in range(1, n):  # e_1 is linear
            for i in range(n):
                for j in range(i + 1, n):
                    keep = np.delete(lam, (i, j))
                    val = gg[k] * _elem_all(keep)[k - 1]
                    H[i, j] += val
                    H[j, i] += val
        return 0.5 * (H + H.T)

    def margin(lam):
        if domain_margin is not None:
            return float(domain_margin(lam))
        return 1.0

    return CurvatureSpec(name, n, value, gradient, hessian, margin,
                         params={"composed": True})


def eval_f_rows(spec, lam_rows):
    """Vectorized f over rows of curvature vectors (fast paths for built-ins)."""
    lam_rows = np.asarray(lam_rows, dtype=float)
    if spec.name == "E1":
        return lam_rows.sum(axis=1)
    if "eps" in spec.params and spec.name.startswith("E1"):
        n = spec.n
        s = spec.params["sign"] * spec.params["eps"]
        e = np.zeros((lam_rows.shape[0], n + 1))
        e[:, 0] = 1.0
        for j in range(n):
            e[:, 1:] = e[:, 1:] + lam_rows[:, j, None] * e[:, :-1]
        return e[:, 1] + s * e[:, n] / e[:, n - 1]
    return np.array([spec.value(row) for row in lam_rows])


def grad_f_rows(spec, lam_rows):
    """Vectorized grad f over rows (row loop except for the linear case)."""
    lam_rows = np.asarray(lam_rows, dtype=float)
    if spec.name == "E1":
        return np.ones_like(lam_rows)
    return np.array([spec.gradient(row) for row in lam_rows])


def builtin_spec_names():
    return ["E1", "E1_plus_ratio", "E1_minus_ratio"]


def make_spec(name, n, params=None):
    """Construct a built-in spec from a config-style (name, params) pair."""
    params = dict(params or {})
    if name == "E1":
        return mean_curvature_spec(n)
    if name in ("E1_plus_ratio", "E1+eps*En/En-1"):
        return ratio_perturbed_spec(n, params.get("eps", 0.1), +1,
                                    params.get("domain_eps", 1e-9))
    if name in ("E1_minus_ratio", "E1-eps*En/En-1"):
        return ratio_perturbed_spec(n, params.get("eps", 0.1), -1,
                                    params.get("domain_eps", 1e-9))
    raise ArgumentError(f"unknown curvature spec '{name}'; "
                        f"built-ins: {builtin_spec_names()}")


# ---------------------------------------------------------------------------
# scalar-side operations


def _require_admissible(spec, lam):
    m = spec.domain_margin(lam)
    if not m > 0:
        raise DomainError(
            f"lambda outside the admissible set of {spec.name} (margin={m:.3e})",
            margin=m,
        )


def eval_f(spec, lam):
    lam = np.asarray(lam, dtype=float)
    _require_admissible(spec, lam)
    return spec.value(lam)


def grad_f(spec, lam):
    lam = np.asarray(lam, dtype=float)
    _require_admissible(spec, lam)
    return np.asarray(spec.gradient(lam), dtype=float)


def hess_f(spec, lam):
    lam = np.asarray(lam, dtype=float)
    _require_admissible(spec, lam)
    return np.asarray(spec.hessian(lam), dtype=float)


def check_admissible(spec, lam):
    """Report-style admissibility: domain margin plus gradient positivity."""
    lam = np.asarray(lam, dtype=float)
    margin = float(spec.domain_margin(lam))
    if margin > 0:
        min_grad = float(np.min(spec.gradient(lam)))
    else:
        min_grad = float("nan")
    return {"ok": bool(margin > 0 and min_grad > 0),
            "min_grad": min_grad,
            "domain_margin": margin}


# ---------------------------------------------------------------------------
# matrix-side operations


@dataclass(frozen=True)
class MatrixPoint:
    """A symmetric matrix with its eigendecomposition, eigenvalues descending."""

    S: np.ndarray
    eigvals: np.ndarray
    eigframe: np.ndarray  # columns are eigenvectors; S = Q diag(eigvals) Q^T

    @classmethod
    def from_matrix(cls, S, sym_tol=1e-10):
        S = np.asarray(S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise ArgumentError("matrix argument must be square")
        scale = max(1.0, float(np.max(np.abs(S))))
        if np.max(np.abs(S - S.T)) > sym_tol * scale:
            raise ArgumentError("matrix argument is not symmetric within tolerance")
        Ssym = 0.5 * (S + S.T)
        w, Q = np.linalg.eigh(Ssym)
        order = np.argsort(w)[::-1]
        return cls(Ssym, w[order], Q[:, order])

    @classmethod
    def from_diagonal(cls, lam):
        lam = np.asarray(lam, dtype=float)
        order = np.argsort(lam)[::-1]
        n = lam.size
        Q = np.eye(n)[:, order]
        return cls(np.diag(lam), lam[order], Q)


def _as_point(S):
    return S if isinstance(S, MatrixPoint) else MatrixPoint.from_matrix(S)


def eval_F(spec, S):
    """F(S) = f(eigenvalues of S); conjugation invariant."""
    pt = _as_point(S)
    return eval_f(spec, pt.eigvals)


def dF_dS(spec, S):
    """dF/dS: diag(grad f) in the eigenframe, transported back."""
    pt = _as_point(S)
    g = grad_f(spec, pt.eigvals)
    return pt.eigframe @ np.diag(g) @ pt.eigframe.T


def d2F_contract(spec, S, T, degenerate_tol=DEGENERATE_TOL):
    """The matrix sum_kl (d2F/dS_i^j dS_k^l)(S) T_kl for symmetric T.

    In the eigenframe the diagonal part is hess_f applied to diag(T) and the
    off-diagonal part is the divided difference (df_i - df_k)/(l_i - l_k)
    times T_ik; a gap below degenerate_tol * |lambda| switches to the smooth
    limit hess[i,i] - hess[i,k].
    """
    pt = _as_point(S)
    T = np.asarray(T, dtype=float)
    if T.shape != pt.S.shape:
        raise ArgumentError("direction matrix T has wrong shape")
    scale = max(1.0, float(np.max(np.abs(T))))
    if np.max(np.abs(T - T.T)) > 1e-10 * scale:
        raise ArgumentError("direction matrix T must be symmetric")

    lam = pt.eigvals
    n = lam.size
    g = grad_f(spec, lam)
    H = hess_f(spec, lam)
    That = pt.eigframe.T @ T @ pt.eigframe

    R = np.zeros((n, n))
    R[np.diag_indices(n)] = H @ np.diag(That)
    gap_tol = degenerate_tol * max(float(np.linalg.norm(lam)), 1e-300)
    for i in range(n):
        for k in range(n):
            if i == k:
                continue
            gap = lam[i] - lam[k]
            if abs(gap) < gap_tol:
                dd = H[i, i] - H[i, k]
            else:
                dd = (g[i] - g[k]) / gap
            R[i, k] += dd * That[i, k]
    return pt.eigframe @ R @ pt.eigframe.T
