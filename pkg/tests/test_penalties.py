import numpy as np
import pytest

from tiksolve.operators import DenseMatrix, IdentityOperator
from tiksolve.penalties import LpPenalty, check_regularity, prox_scalar
from tiksolve.errors import RefusalError

from oracles import prox_objective, prox_oracle


def test_eval_l1():
    g = LpPenalty(1.0, np.ones(3), 1.0)
    assert g.eval([1.0, -2.0, 0.0]) == pytest.approx(3.0)


def test_eval_l0_counts_nonzeros():
    g = LpPenalty(0.0, np.ones(3), 2.0)
    assert g.eval([1.0, -2.0, 0.0]) == pytest.approx(4.0)


def test_eval_half_exact_surds():
    g = LpPenalty(0.5, np.array([1.0, 4.0]), 1.0)
    assert g.eval([4.0, 1.0]) == pytest.approx(6.0)


def test_prox_scalar_soft_threshold():
    assert prox_scalar(1.0, 1.0, 2.0) == pytest.approx(1.0)


def test_prox_scalar_hard_threshold():
    assert prox_scalar(0.0, 1.0, 2.0) == pytest.approx(2.0)
    assert prox_scalar(0.0, 3.0, 2.0) == 0.0
    # tie 0.5*vhat^2 == c resolves to 0
    assert prox_scalar(0.0, 2.0, 2.0) == 0.0


def test_prox_scalar_half_matches_oracle_fixture():
    # frozen from a 40-digit root solve of z - 2 + 0.25/sqrt(z) = 0; the
    # grid + golden-section oracle agrees to its resolution
    got = prox_scalar(0.5, 0.5, 2.0)
    assert got == pytest.approx(1.814402018580539, abs=1e-12)
    z = prox_oracle(0.5, 0.5, 2.0)
    assert got == pytest.approx(z, abs=1e-8)


def test_prox_scalar_rejects_bad_threshold():
    with pytest.raises(ValueError):
        prox_scalar(1.0, 0.0, 2.0)
    with pytest.raises(ValueError):
        prox_scalar(1.0, -1.0, 2.0)


@pytest.mark.parametrize("p", [0.0, 0.3, 0.5, 2.0 / 3.0, 0.9, 1.0])
def test_prox_scalar_beats_grid_oracle(p):
    rng = np.random.default_rng(1234)
    for _ in range(60):
        c = 10.0 ** rng.uniform(-3, 1.5)
        vhat = float(rng.choice([-1, 1])) * 10.0 ** rng.uniform(-3, 1.5)
        z = prox_scalar(p, c, vhat)
        zo = prox_oracle(p, c, vhat, npts=20_001)
        gap = prox_objective(p, c, vhat, z) - prox_objective(p, c, vhat, zo)
        assert gap <= 1e-9
        # sign and magnitude invariants
        assert z == 0.0 or np.sign(z) == np.sign(vhat)
        assert abs(z) <= abs(vhat) + 1e-15


@pytest.mark.parametrize("p", [0.0, 0.3, 0.5, 2.0 / 3.0, 0.9, 1.0])
def test_prox_scalar_symmetry(p):
    rng = np.random.default_rng(99)
    for _ in range(50):
        c = 10.0 ** rng.uniform(-2, 1)
        vhat = 10.0 ** rng.uniform(-2, 1)
        assert prox_scalar(p, c, -vhat) == -prox_scalar(p, c, vhat)


def test_prox_vector_zero_input():
    for p in [0.0, 0.3, 0.5, 2.0 / 3.0, 1.0]:
        g = LpPenalty(p, np.ones(4), 1.5)
        assert np.array_equal(g.prox(0.7, np.zeros(4)), np.zeros(4))


def test_prox_vector_matches_scalar():
    rng = np.random.default_rng(7)
    for p in [0.0, 0.3, 0.5, 2.0 / 3.0, 0.9, 1.0]:
        w = rng.uniform(0.5, 2.0, size=20)
        g = LpPenalty(p, w, 0.8)
        lam = 0.6
        vhat = rng.normal(scale=2.0, size=20)
        out = g.prox(lam, vhat)
        for i in range(20):
            assert out[i] == pytest.approx(prox_scalar(p, 0.8 * lam * w[i], vhat[i]), abs=1e-12)


def test_prox_vector_soft_threshold_vectorized():
    rng = np.random.default_rng(17)
    g = LpPenalty(1.0, np.ones(50), 1.0)
    vhat = rng.normal(size=50)
    lam = 0.3
    expected = np.sign(vhat) * np.maximum(np.abs(vhat) - 0.3, 0.0)
    assert np.allclose(g.prox(lam, vhat), expected, atol=1e-15)


def test_prox_small_lambda_is_near_identity():
    rng = np.random.default_rng(23)
    g = LpPenalty(1.0, rng.uniform(0.5, 2.0, size=30), 1.0)
    vhat = rng.normal(size=30)
    lam = 1e-8
    out = g.prox(lam, vhat)
    assert np.max(np.abs(out - vhat)) <= lam * g.weights.max() + 1e-18


def test_prox_alpha_zero_is_identity():
    g = LpPenalty(1.0, np.ones(3), 0.0)
    vhat = np.array([0.5, -2.0, 0.0])
    assert np.array_equal(g.prox(0.25, vhat), vhat)


def test_prox_rejects_bad_lambda():
    g = LpPenalty(1.0, np.ones(3), 1.0)
    with pytest.raises(ValueError):
        g.prox(0.0, np.zeros(3))


def test_active_basis_l1():
    g = LpPenalty(1.0, np.ones(2), 1.0)
    basis = g.active_basis(np.array([1.5, 0.0]))
    assert basis.indices.tolist() == [0]
    assert basis.curvatures.tolist() == [0.0]
    p, w = basis.as_matrices()
    assert np.array_equal(p, np.diag([1.0, 0.0]))
    assert np.array_equal(w, np.diag([0.0, 1.0]))


def test_active_basis_half_power_curvature():
    g = LpPenalty(0.5, np.ones(2), 1.0)
    basis = g.active_basis(np.array([4.0, 0.0]))
    assert basis.indices.tolist() == [0]
    assert basis.curvatures[0] == pytest.approx(0.5 * (-0.5) * 4.0 ** (-1.5))
    assert basis.curvatures[0] == pytest.approx(-1.0 / 32.0)


def test_active_basis_empty_support():
    g = LpPenalty(0.5, np.ones(3), 1.0)
    basis = g.active_basis(np.zeros(3))
    assert basis.indices.size == 0
    p, w = basis.as_matrices()
    assert np.array_equal(p, np.zeros((3, 3)))
    assert np.array_equal(w, np.eye(3))


def test_active_basis_matrix_identities():
    rng = np.random.default_rng(31)
    for p in [0.0, 0.4, 1.0]:
        g = LpPenalty(p, rng.uniform(0.5, 2.0, size=6), 1.3)
        z = rng.normal(size=6)
        z[rng.random(6) < 0.4] = 0.0
        pm, wm = g.active_basis(z).as_matrices()
        assert np.allclose(pm @ pm, pm)
        assert np.allclose(wm @ (np.eye(6) - pm), np.eye(6) - pm)


def test_active_basis_curvature_clamp():
    g = LpPenalty(0.5, np.ones(1), 1.0)
    basis = g.active_basis(np.array([1e-12]))
    assert basis.curvatures[0] == -1e12


def test_check_regularity_identity():
    g = LpPenalty(1.0, np.ones(4), 0.5)
    op = IdentityOperator(4)
    vbar = np.array([1.0, 0.0, -2.0, 0.0])
    rbar = np.zeros(4)
    report = check_regularity(op, g, vbar, rbar)
    assert report.regular
    assert report.lower == (0, 2)


def test_check_regularity_zero_column():
    op = DenseMatrix([[1.0, 0.0], [0.0, 0.0]])
    g = LpPenalty(0.0, np.ones(2), 1.0)
    vbar = np.array([0.0, 1.0])
    # rbar = 2 A^T(A vbar - y); with column 2 zero the reduced system is singular
    rbar = np.zeros(2)
    report = check_regularity(op, g, vbar, rbar)
    assert not report.regular
    assert any(1 in f[0] for f in report.failures)


def test_check_regularity_random_gaussian_pinned():
    rng = np.random.default_rng(2024)
    a = rng.normal(size=(5, 8))
    op = DenseMatrix(a)
    g = LpPenalty(1.0, np.ones(8), 1.0)
    vbar = np.zeros(8)
    vbar[[1, 4]] = [0.7, -0.3]
    rbar = rng.normal(size=8)  # generic: no exact |r_i| = alpha matches
    report = check_regularity(op, g, vbar, rbar)
    assert report.regular
    assert report.tested == 1
    # direct SVD oracle on the single candidate set
    sub = a[:, [1, 4]]
    full = np.eye(8)
    full[np.ix_([1, 4], [1, 4])] = 2.0 * sub.T @ sub
    assert report.smallest_sv == pytest.approx(np.linalg.svd(full, compute_uv=False)[-1])


def test_check_regularity_refuses_large_instances():
    g = LpPenalty(1.0, np.ones(25), 1.0)
    op = IdentityOperator(25)
    with pytest.raises(RefusalError):
        check_regularity(op, g, np.zeros(25), np.zeros(25))


def test_penalty_validation():
    with pytest.raises(ValueError):
        LpPenalty(1.5, np.ones(2), 1.0)
    with pytest.raises(ValueError):
        LpPenalty(0.5, np.array([1.0, 0.0]), 1.0)
    with pytest.raises(ValueError):
        LpPenalty(0.5, np.ones(2), -1.0)
