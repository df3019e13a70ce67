import numpy as np
import pytest

from shrinkerlab.curvature import (
    CurvatureSpec, MatrixPoint, check_admissible, composed_spec,
    d2F_contract, dF_dS, elementary_symmetric, eval_F, eval_f, eval_f_rows,
    grad_f, hess_f, make_spec, mean_curvature_spec, ratio_perturbed_spec)
from shrinkerlab.errors import ArgumentError, DomainError


# independent finite-difference oracles (kept local to the tests)

def fd_grad(f, lam, h):
    lam = np.asarray(lam, dtype=float)
    out = np.zeros(lam.size)
    for i in range(lam.size):
        e = np.zeros(lam.size)
        e[i] = h
        out[i] = (f(lam + e) - f(lam - e)) / (2 * h)
    return out


def fd_hess(f, lam, h):
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n); ei[i] = h
            ej = np.zeros(n); ej[j] = h
            out[i, j] = (f(lam + ei + ej) - f(lam + ei - ej)
                         - f(lam - ei + ej) + f(lam - ei - ej)) / (4 * h * h)
    return out


def test_elementary_symmetric_values():
    assert elementary_symmetric(1, [1, 1, 1]) == 3
    assert elementary_symmetric(3, [1, 2, 3]) == 6
    assert elementary_symmetric(2, [1, 2, 3]) == 11
    with pytest.raises(ArgumentError):
        elementary_symmetric(4, [1, 2, 3])
    with pytest.raises(ArgumentError):
        elementary_symmetric(0, [1, 2, 3])


def test_eval_f_spec_examples():
    e1 = mean_curvature_spec(4)
    assert eval_f(e1, np.ones(4)) == 4.0
    ratio = ratio_perturbed_spec(3, 0.1, +1)
    # En vanishes when any eigenvalue is 0
    assert eval_f(ratio, [2.0, 2.0, 0.0]) == pytest.approx(4.0, abs=1e-14)
    assert eval_f(ratio, [1.0, 2.0, 3.0]) == pytest.approx(6 + 0.1 * 6 / 11,
                                                           rel=1e-15)


def test_gradient_at_degenerate_corner():
    for n in (2, 3, 4):
        ratio = ratio_perturbed_spec(n, 0.25, +1)
        lam = np.full(n, 1.7)
        lam[-1] = 0.0
        g = grad_f(ratio, lam)
        expect = np.ones(n)
        expect[-1] = 1.25
        assert np.allclose(g, expect, atol=1e-12)


def test_gradient_degree_zero_homogeneity():
    e1 = mean_curvature_spec(2)
    assert np.allclose(grad_f(e1, [1.0, 2.0]), grad_f(e1, [3.0, 6.0]))
    ratio = ratio_perturbed_spec(3, 0.05, -1)
    lam = np.array([1.0, 2.0, 3.0])
    assert np.allclose(grad_f(ratio, lam), grad_f(ratio, 3 * lam), rtol=1e-12)


def test_hessian_degree_minus_one():
    ratio = ratio_perturbed_spec(3, 0.1, +1)
    lam = np.array([1.0, 2.0, 3.0])
    assert np.allclose(hess_f(ratio, 2 * lam), 0.5 * hess_f(ratio, lam),
                       rtol=1e-12)
    assert np.all(hess_f(mean_curvature_spec(3), lam) == 0.0)


def test_grad_hess_match_finite_differences(rng):
    for n in (2, 3, 4):
        spec = ratio_perturbed_spec(n, 0.2, +1)
        for _ in range(20):
            lam = rng.uniform(0.5, 2.5, n)
            h = 1e-5 * np.linalg.norm(lam)
            g = grad_f(spec, lam)
            g_fd = fd_grad(spec.value, lam, h)
            assert np.max(np.abs(g - g_fd)) <= 1e-6 * max(1, np.max(np.abs(g)))
            H = hess_f(spec, lam)
            H_fd = fd_hess(spec.value, lam, h)
            assert np.max(np.abs(H - H_fd)) <= 1e-4 * max(1, np.max(np.abs(H)))


def test_domain_error_carries_margin():
    ratio = ratio_perturbed_spec(3, 0.1, +1)
    with pytest.raises(DomainError) as err:
        eval_f(ratio, [1.0, -1.0, 0.0])
    assert err.value.margin is not None and err.value.margin <= 0


def test_matrix_point_validation(rng):
    with pytest.raises(ArgumentError):
        MatrixPoint.from_matrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
    S = rng.standard_normal((4, 4))
    S = S + S.T
    pt = MatrixPoint.from_matrix(S)
    assert np.all(np.diff(pt.eigvals) <= 0)
    rec = pt.eigframe @ np.diag(pt.eigvals) @ pt.eigframe.T
    assert np.max(np.abs(rec - S)) < 1e-10 * max(1, np.max(np.abs(S)))


def test_eval_F_conjugation_invariance(rng):
    spec = ratio_perturbed_spec(3, 0.1, +1)
    for _ in range(25):
        lam = rng.uniform(0.5, 2.0, 3)
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        S = Q @ np.diag(lam) @ Q.T
        assert eval_F(spec, S) == pytest.approx(eval_f(spec, np.sort(lam)[::-1]),
                                                abs=1e-10)


def test_dF_dS_equivariance_and_diagonal(rng):
    spec = ratio_perturbed_spec(3, 0.1, +1)
    lam = np.array([2.2, 1.4, 0.8])
    assert np.allclose(dF_dS(spec, MatrixPoint.from_diagonal(lam)),
                       np.diag(grad_f(spec, lam)), atol=1e-13)
    for _ in range(10):
        S = rng.standard_normal((3, 3))
        S = S + S.T + 6 * np.eye(3)
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        left = dF_dS(spec, Q @ S @ Q.T)
        right = Q @ dF_dS(spec, S) @ Q.T
        assert np.max(np.abs(left - right)) < 1e-10
    assert np.allclose(dF_dS(mean_curvature_spec(3),
                             MatrixPoint.from_diagonal(lam)), np.eye(3))


def test_dF_dS_matches_directional_difference(rng):
    spec = ratio_perturbed_spec(3, 0.15, +1)
    S = np.diag([2.0, 1.3, 0.7])
    S[0, 1] = S[1, 0] = 0.2
    T = rng.standard_normal((3, 3))
    T = T + T.T
    D = dF_dS(spec, S)
    t = 1e-6
    fd = (eval_F(spec, S + t * T) - eval_F(spec, S - t * T)) / (2 * t)
    assert fd == pytest.approx(np.sum(D * T), rel=1e-5)


def test_d2F_contract_linear_spec_is_zero(rng):
    e1 = mean_curvature_spec(3)
    S = np.diag([1.0, 2.0, 3.0])
    T = rng.standard_normal((3, 3))
    T = T + T.T
    assert np.max(np.abs(d2F_contract(e1, S, T))) == 0.0


def test_d2F_contract_diagonal_case():
    spec = ratio_perturbed_spec(3, 0.1, +1)
    lam = np.array([2.0, 1.2, 0.6])
    tau = np.array([0.3, -0.5, 0.9])
    out = d2F_contract(spec, MatrixPoint.from_diagonal(lam), np.diag(tau))
    assert np.allclose(out, np.diag(hess_f(spec, lam) @ tau), atol=1e-12)


def test_d2F_contract_matches_second_difference(rng):
    spec = ratio_perturbed_spec(3, 0.1, +1)
    S = np.diag([2.0, 1.3, 0.7])
    S[0, 2] = S[2, 0] = 0.15
    T = rng.standard_normal((3, 3))
    T = T + T.T
    M = d2F_contract(spec, S, T)
    t = 1e-4
    fd = (eval_F(spec, S + t * T) - 2 * eval_F(spec, S)
          + eval_F(spec, S - t * T)) / t**2
    assert fd == pytest.approx(np.sum(M * T), rel=1e-4, abs=1e-8)


def test_d2F_contract_degenerate_limit():
    """Divided differences stay finite and smooth across eigenvalue crossings."""
    spec = ratio_perturbed_spec(3, 0.1, +1)
    T = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.5], [0.0, 0.5, 0.0]])
    out_eq = d2F_contract(spec, MatrixPoint.from_diagonal([1.5, 1.5, 0.7]), T)
    out_near = d2F_contract(
        spec, MatrixPoint.from_diagonal([1.5 + 1e-9, 1.5, 0.7]), T)
    assert np.max(np.abs(out_eq - out_near)) < 1e-6


def test_check_admissible_reports():
    e1 = mean_curvature_spec(3)
    rep = check_admissible(e1, [1.0, 0.0, -5.0])
    assert rep["ok"] and rep["min_grad"] == 1.0
    # grad of E1 - eps E3/E2 at ones is 1 - eps/9: monotonicity fails past 9
    strong = ratio_perturbed_spec(3, 12.0, -1)
    rep2 = check_admissible(strong, [1.0, 1.0, 1.0])
    assert rep2["min_grad"] < 0 and not rep2["ok"]
    rep3 = check_admissible(ratio_perturbed_spec(3, 0.1), [1.0, -1.0, 0.0])
    assert not rep3["ok"] and rep3["domain_margin"] <= 0


def test_make_spec_and_rows():
    spec = make_spec("E1_plus_ratio", 3, {"eps": 0.1})
    lam_rows = np.array([[1.0, 2.0, 3.0], [2.0, 2.0, 2.0]])
    rows = eval_f_rows(spec, lam_rows)
    assert rows[0] == pytest.approx(eval_f(spec, lam_rows[0]), rel=1e-14)
    with pytest.raises(ArgumentError):
        make_spec("nope", 3)


def test_composed_spec_hook():
    """User hook recovers E1 + eps En/En-1 through elementary symmetrics."""
    n, eps = 3, 0.07

    def g(e):
        return e[0] + eps * e[2] / e[1]

    user = composed_spec("user", n, g, domain_margin=lambda lam: 1.0)
    ref = ratio_perturbed_spec(n, eps, +1)
    lam = np.array([1.1, 2.3, 0.9])
    assert eval_f(user, lam) == pytest.approx(eval_f(ref, lam), rel=1e-12)
    assert np.allclose(grad_f(user, lam), grad_f(ref, lam), atol=1e-6)
    assert np.allclose(hess_f(user, lam), hess_f(ref, lam), atol=1e-4)
