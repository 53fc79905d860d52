import numpy as np
import pytest

from tiksolve.envelope import CompositeProblem, QuadraticFidelity
from tiksolve.fista import FistaConfig, solve_fista
from tiksolve.operators import DenseMatrix, IdentityOperator
from tiksolve.penalties import LpPenalty


def lasso_2d():
    f = QuadraticFidelity(IdentityOperator(2), np.array([2.0, 0.1]))
    return CompositeProblem(f, LpPenalty(1.0, np.ones(2), 1.0))


def test_near_smooth_quadratic():
    f = QuadraticFidelity(IdentityOperator(1), np.array([1.0]))
    prob = CompositeProblem(f, LpPenalty(1.0, np.array([1e-16]), 1.0))
    report = solve_fista(prob, np.array([5.0]), FistaConfig(eps_stop=1e-12))
    assert report.converged
    assert abs(report.x[0] - 1.0) <= 1e-8


def test_lasso_2d_closed_form_target():
    report = solve_fista(lasso_2d(), np.zeros(2), FistaConfig(eps_stop=1e-10))
    assert np.linalg.norm(report.x - np.array([1.5, 0.0])) <= 1e-6


def test_rejects_nonconvex_penalty():
    f = QuadraticFidelity(IdentityOperator(2), np.array([1.0, 1.0]))
    prob = CompositeProblem(f, LpPenalty(0.5, np.ones(2), 1.0))
    with pytest.raises(ValueError):
        solve_fista(prob, np.zeros(2))


def test_ista_objective_monotone():
    rng = np.random.default_rng(15)
    a = rng.normal(size=(30, 60))
    y = rng.normal(size=30)
    prob = CompositeProblem(QuadraticFidelity(DenseMatrix(a), y), LpPenalty(1.0, np.ones(60), 0.3))
    report = solve_fista(prob, np.zeros(60), FistaConfig(momentum=False, max_iter=300, eps_stop=1e-14))
    phis = [row.phi for row in report.history]
    assert all(b <= a + 1e-12 for a, b in zip(phis, phis[1:]))


def test_residual_below_tolerance_at_termination():
    rng = np.random.default_rng(16)
    a = rng.normal(size=(20, 30))
    y = rng.normal(size=20)
    prob = CompositeProblem(QuadraticFidelity(DenseMatrix(a), y), LpPenalty(1.0, np.ones(30), 0.5))
    cfg = FistaConfig(eps_stop=1e-8, max_iter=50_000)
    report = solve_fista(prob, np.zeros(30), cfg)
    assert report.converged
    assert report.residual <= 1e-8 * max(1.0, report.grad0_norm)


def test_log_schema_matches_newton(tmp_path):
    report = solve_fista(lasso_2d(), np.zeros(2), FistaConfig(max_iter=50))
    path = tmp_path / "fista.csv"
    report.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "iter,phi,phi_fb,resid,lambda,tau,rho,xi,time_s"
    assert len(lines) == len(report.history) + 1
