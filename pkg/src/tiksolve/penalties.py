"""Weighted |.|^p penalties for p in [0, 1].

Provides evaluation, the exact componentwise proximal map, the active-set
basis consumed by the Newton step, and an exhaustive regularity diagnostic
for small instances.

The scalar prox minimizes h(z) = 0.5*(z - vhat)^2 + c*|z|^p. Closed forms
are used for p in {0, 1/2, 2/3, 1}; every other p is handled by a
safeguarded Newton iteration on the stationarity equation (see
``_kernels.prox_power_newton``). All paths return a global minimizer with
ties at h(z) = h(0) resolved toward 0, so results are deterministic and at
most |vhat| in magnitude with the sign of vhat.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from tiksolve import _kernels
from tiksolve.errors import RefusalError

__all__ = [
    "LpPenalty",
    "ActiveBasis",
    "RegularityReport",
    "prox_scalar",
    "check_regularity",
    "CURVATURE_CAP",
]

# Curvature magnitudes are clamped to avoid overflow for tiny |z_i|;
# the Jacobi scaling in the CG solve copes with the remaining spread.
CURVATURE_CAP = 1e12


@dataclass(frozen=True)
class ActiveBasis:
    """Active coordinates and the diagonal curvature on them.

    Encodes the pair (P, W): P projects onto the active coordinates
    ``indices`` and W is diagonal with ``curvatures`` on the active entries
    and exactly 1 elsewhere, so that W(I - P) = I - P by construction.
    """

    indices: np.ndarray
    curvatures: np.ndarray
    dim: int

    def as_matrices(self):
        """Dense (P, W) pair; intended for small test instances."""
        p = np.zeros((self.dim, self.dim))
        w = np.eye(self.dim)
        p[self.indices, self.indices] = 1.0
        w[self.indices, self.indices] = self.curvatures
        return p, w


class LpPenalty:
    """g(v) = alpha * sum_i w_i |v_i|^p with 0 <= p <= 1 and 0^0 := 0."""

    def __init__(self, p, weights, alpha):
        p = float(p)
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 1 or weights.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if np.any(weights <= 0.0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be positive and finite")
        if alpha < 0.0:
            raise ValueError("alpha must be nonnegative")
        self.p = p
        self.weights = weights
        self.alpha = float(alpha)

    @property
    def n(self):
        return self.weights.size

    def eval(self, v):
        v = np.asarray(v, dtype=np.float64)
        if self.p == 0.0:
            return self.alpha * float(self.weights @ (v != 0.0))
        if self.p == 1.0:
            return self.alpha * float(self.weights @ np.abs(v))
        return self.alpha * float(self.weights @ np.abs(v) ** self.p)

    def prox(self, lam, vhat):
        """Componentwise argmin of 0.5*(z - vhat_i)^2 + alpha*lam*w_i*|z_i|^p."""
        if lam <= 0.0:
            raise ValueError("lam must be positive")
        vhat = np.asarray(vhat, dtype=np.float64)
        if self.alpha == 0.0:
            return vhat.copy()
        return _prox_vector(self.p, self.alpha * lam * self.weights, vhat)

    def active_basis(self, z):
        """Active-set (P, W) data at the prox output z: support plus curvature."""
        z = np.asarray(z, dtype=np.float64)
        idx = np.flatnonzero(z != 0.0)
        if self.p == 0.0 or self.p == 1.0:
            curv = np.zeros(idx.size)
        else:
            p = self.p
            curv = self.alpha * self.weights[idx] * p * (p - 1.0) * np.abs(z[idx]) ** (p - 2.0)
            curv = np.maximum(curv, -CURVATURE_CAP)
        return ActiveBasis(indices=idx, curvatures=curv, dim=z.size)


def prox_scalar(p, c, vhat):
    """Global minimizer of 0.5*(z - vhat)^2 + c*|z|^p for a single component."""
    if c <= 0.0:
        raise ValueError("threshold c must be positive")
    return float(_prox_vector(float(p), np.array([float(c)]), np.array([float(vhat)]))[0])


def _prox_vector(p, c, vhat):
    if p == 1.0:
        return np.sign(vhat) * np.maximum(np.abs(vhat) - c, 0.0)
    if p == 0.0:
        # keep vhat iff 0.5*vhat^2 > c; the tie goes to the sparser choice
        return np.where(0.5 * vhat * vhat > c, vhat, 0.0)
    if p == 0.5:
        return _prox_half(c, vhat)
    if p == 2.0 / 3.0:
        return _prox_twothirds(c, vhat)
    return _kernels.prox_power_newton(vhat, c, p)


def _newton_polish(z, av, c, p, iters=3):
    # refine the closed-form root on the branch where the stationarity
    # equation is convex increasing; keeps z in (0, av]
    for _ in range(iters):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            phi = z - av + c * p * z ** (p - 1.0)
            dphi = 1.0 + c * p * (p - 1.0) * z ** (p - 2.0)
            ok = (z > 0.0) & (dphi > 0.0) & np.isfinite(phi)
            z = np.where(ok, z - phi / dphi, z)
    return np.minimum(np.maximum(z, 0.0), av)


def _prox_half(c, vhat):
    av = np.abs(vhat)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # outer root of u^3 - av*u + c/2 = 0, u = sqrt(z)
        exists = (av > 0.0) & (4.0 * av**3 >= 27.0 * (0.5 * c) ** 2)
        arg = np.clip(-(0.75 * c / av) * np.sqrt(3.0 / av), -1.0, 1.0)
        u = 2.0 * np.sqrt(av / 3.0) * np.cos(np.arccos(arg) / 3.0)
        z = _newton_polish(np.where(exists, u * u, 0.0), av, c, 0.5)
        keep = exists & (0.5 * (z - av) ** 2 + c * np.sqrt(z) < 0.5 * av * av)
    return np.sign(vhat) * np.where(keep, z, 0.0)


def _prox_twothirds(c, vhat):
    av = np.abs(vhat)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        # u = |z|^{1/3} solves u^4 - av*u + 2c/3 = 0; factor the quartic with
        # a resolvent cubic t^3 - (8c/3)*t - av^2 = 0 (positive root t = a^2)
        pp = -8.0 * c / 3.0
        qq = -(av * av)
        three_real = 4.0 * pp**3 + 27.0 * qq * qq <= 0.0
        arg = np.clip((1.5 * qq / pp) * np.sqrt(-3.0 / pp), -1.0, 1.0)
        t_trig = 2.0 * np.sqrt(-pp / 3.0) * np.cos(np.arccos(arg) / 3.0)
        s = np.sqrt(np.maximum(0.25 * qq * qq + pp**3 / 27.0, 0.0))
        t_card = np.cbrt(-0.5 * qq + s) + np.cbrt(-0.5 * qq - s)
        t = np.where(three_real, t_trig, t_card)
        a = np.sqrt(np.maximum(t, 0.0))
        d = 0.5 * (t - np.where(a > 0.0, av / np.where(a > 0.0, a, 1.0), 0.0))
        disc = a * a - 4.0 * d
        exists = (av > 0.0) & (t > 0.0) & (disc >= 0.0)
        u = 0.5 * (a + np.sqrt(np.maximum(disc, 0.0)))
        z = _newton_polish(np.where(exists, u**3, 0.0), av, c, 2.0 / 3.0)
        keep = exists & (0.5 * (z - av) ** 2 + c * z ** (2.0 / 3.0) < 0.5 * av * av)
    return np.sign(vhat) * np.where(keep, z, 0.0)


@dataclass
class RegularityReport:
    """Outcome of the exhaustive reduced-system nonsingularity check."""

    regular: bool
    lower: tuple
    upper: tuple
    tested: int
    smallest_sv: float
    failures: list


def check_regularity(A, g, vbar, rbar, *, match_tol=1e-8, sv_tol=1e-10, max_dim=20):
    """Exhaustively test nonsingularity of all candidate reduced systems.

    For a stationary point ``vbar`` of ||A v - y||^2 + g(v) with gradient
    ``rbar`` of the quadratic part at vbar, enumerates every index set I
    between the support of vbar and the p-dependent upper candidate set,
    and tests that 2*P_I A^T A P_I + W_I has smallest singular value above
    ``sv_tol``. Enumeration is exponential, so instances with more than
    ``max_dim`` columns are refused.
    """
    vbar = np.asarray(vbar, dtype=np.float64)
    rbar = np.asarray(rbar, dtype=np.float64)
    n = A.shape[1]
    if n > max_dim:
        raise RefusalError(
            f"regularity check enumerates up to 2^n index sets; n={n} exceeds the limit {max_dim}"
        )
    lower = np.flatnonzero(vbar != 0.0)
    zero = np.flatnonzero(vbar == 0.0)
    if g.p == 1.0:
        extra = zero[np.abs(np.abs(rbar[zero]) - g.alpha * g.weights[zero]) <= match_tol]
    elif g.p == 0.0:
        extra = zero[np.abs(rbar[zero]) <= match_tol]
    else:
        extra = np.empty(0, dtype=np.int64)
    dense = A.to_dense()
    gram2 = 2.0 * dense.T @ dense
    basis = g.active_basis(vbar)
    curv = dict(zip(basis.indices.tolist(), basis.curvatures.tolist()))
    tested = 0
    smallest = np.inf
    failures = []
    for k in range(extra.size + 1):
        for combo in combinations(extra.tolist(), k):
            act = np.array(sorted(lower.tolist() + list(combo)), dtype=np.int64)
            mat = np.eye(n)
            if act.size:
                mat[np.ix_(act, act)] = gram2[np.ix_(act, act)]
                mat[act, act] += np.array([curv.get(i, 0.0) for i in act])
            sv = np.linalg.svd(mat, compute_uv=False)
            sigma = float(sv[-1]) if sv.size else 1.0
            tested += 1
            smallest = min(smallest, sigma)
            if sigma <= sv_tol:
                failures.append((tuple(act.tolist()), sigma))
    return RegularityReport(
        regular=not failures,
        lower=tuple(lower.tolist()),
        upper=tuple(sorted(lower.tolist() + extra.tolist())),
        tested=tested,
        smallest_sv=float(smallest),
        failures=failures,
    )
