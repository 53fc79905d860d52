"""Anisotropic TV regularization via an augmented Lagrangian.

The TV term ||B x||_1 (B = stacked forward differences) has no practical
proximal map, so minimizing ||Ax - y||^2 + alpha*TV(x) is rewritten as the
constrained problem over (x, v) with B x = v and an l1 penalty on v. The
outer loop updates the multiplier and the quadratic penalty weight sigma;
each inner subproblem is a composite objective on the product space and is
solved by the Newton solver with warm starts.
"""

from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from tiksolve.envelope import CompositeProblem
from tiksolve.errors import RefusalError, StagnationError
from tiksolve.newton import SolverConfig, solve
from tiksolve.operators import SparseCsr
from tiksolve.penalties import ActiveBasis, RegularityReport
from tiksolve.tomo import ImageGrid

__all__ = [
    "build_difference_operator",
    "tv_value",
    "AugmentedQuadratic",
    "BlockL1Penalty",
    "build_inner_problem",
    "AlmConfig",
    "AlmState",
    "AlmReport",
    "solve_tv",
    "check_tv_regularity",
]

OUTER_CSV_HEADER = "outer_iter,sigma,feas,inner_iters,objective"


def build_difference_operator(n1, n2):
    """s x (n1*n2) forward-difference matrix, s = 2(n1-1)(n2-1).

    Row 2*(i*(n1-1)+j) holds the horizontal difference x[i,j+1] - x[i,j],
    the following row the vertical difference x[i+1,j] - x[i,j], for
    i < n2-1 and j < n1-1.
    """
    if n1 < 2 or n2 < 2:
        raise ValueError("difference operator needs n1, n2 >= 2")
    rows, cols, vals = [], [], []
    r = 0
    for i in range(n2 - 1):
        for j in range(n1 - 1):
            base = i * n1 + j
            rows += [r, r, r + 1, r + 1]
            cols += [base + 1, base, base + n1, base]
            vals += [1.0, -1.0, 1.0, -1.0]
            r += 2
    s = 2 * (n1 - 1) * (n2 - 1)
    return SparseCsr.from_coo(rows, cols, vals, (s, n1 * n2))


def tv_value(img: ImageGrid):
    """Anisotropic TV: sum of |horizontal| + |vertical| differences.

    The ranges match the difference operator, so tv_value equals ||B x||_1.
    """
    mat = img.as_matrix()
    horiz = np.abs(np.diff(mat, axis=1))[:-1, :]
    vert = np.abs(np.diff(mat, axis=0))[:, :-1]
    return float(horiz.sum() + vert.sum())


class AugmentedQuadratic:
    """Smooth part on (x, v): ||Ax-y||^2 + <vstar, Bx-v> + sigma/2 ||Bx-v||^2."""

    def __init__(self, A, y, B, vstar, sigma):
        if sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if A.shape[0] != y.size:
            raise ValueError("data length does not match operator rows")
        if B.shape[1] != A.shape[1]:
            raise ValueError("difference operator columns do not match A")
        if vstar.size != B.shape[0]:
            raise ValueError("multiplier length does not match B rows")
        self.A, self.y, self.B = A, np.asarray(y, float), B
        self.vstar = np.asarray(vstar, float)
        self.sigma = float(sigma)
        self.n = A.shape[1]
        self.s = B.shape[0]

    def _split(self, w):
        return w[: self.n], w[self.n :]

    def value(self, w):
        x, v = self._split(w)
        r = self.A.apply(x) - self.y
        q = self.B.apply(x) - v
        return float(r @ r + self.vstar @ q + 0.5 * self.sigma * (q @ q))

    def value_and_gradient(self, w):
        x, v = self._split(w)
        r = self.A.apply(x) - self.y
        q = self.B.apply(x) - v
        mult = self.vstar + self.sigma * q
        val = float(r @ r + self.vstar @ q + 0.5 * self.sigma * (q @ q))
        grad = np.concatenate([2.0 * self.A.apply_transpose(r) + self.B.apply_transpose(mult), -mult])
        return val, grad

    def gradient(self, w):
        return self.value_and_gradient(w)[1]

    def hessian_apply(self, w, d):
        dx, dv = self._split(np.asarray(d, float))
        q = self.B.apply(dx) - dv
        hx = 2.0 * self.A.apply_transpose(self.A.apply(dx)) + self.sigma * self.B.apply_transpose(q)
        return np.concatenate([hx, -self.sigma * q])

    def hessian_diag(self, w):
        sq_a = self.A.column_sq_norms()
        if sq_a is None:
            return None
        sq_b = self.B.column_sq_norms()
        return np.concatenate([2.0 * sq_a + self.sigma * sq_b, np.full(self.s, self.sigma)])

    def reduced_hessian(self, w, idx):
        ix = idx[idx < self.n]
        iv = idx[idx >= self.n] - self.n
        da = self.A.submatrix_columns(ix).to_dense()
        db = self.B.submatrix_columns(ix).to_dense()
        top = 2.0 * da.T @ da + self.sigma * db.T @ db
        cross = -self.sigma * db[iv, :].T
        out = np.empty((idx.size, idx.size))
        k = ix.size
        out[:k, :k] = top
        out[:k, k:] = cross
        out[k:, :k] = cross.T
        out[k:, k:] = self.sigma * np.eye(iv.size)
        return out


class BlockL1Penalty:
    """g(x, v) = alpha * ||v||_1; the x block carries no penalty.

    The prox is the identity on x and a soft threshold on v; the active
    basis keeps the whole x block active with zero curvature.
    """

    p = 1.0

    def __init__(self, alpha, n, s):
        if alpha < 0.0:
            raise ValueError("alpha must be nonnegative")
        self.alpha = float(alpha)
        self.n = int(n)
        self.s = int(s)

    def eval(self, w):
        return self.alpha * float(np.abs(w[self.n :]).sum())

    def prox(self, lam, what):
        if lam <= 0.0:
            raise ValueError("lam must be positive")
        out = np.asarray(what, float).copy()
        v = out[self.n :]
        out[self.n :] = np.sign(v) * np.maximum(np.abs(v) - self.alpha * lam, 0.0)
        return out

    def active_basis(self, w):
        v = w[self.n :]
        active_v = np.flatnonzero(v != 0.0) + self.n
        idx = np.concatenate([np.arange(self.n, dtype=np.int64), active_v])
        return ActiveBasis(indices=idx, curvatures=np.zeros(idx.size), dim=self.n + self.s)


def build_inner_problem(A, y, alpha, B, vstar, sigma):
    """Composite subproblem on (x, v) for fixed multiplier and penalty weight."""
    f = AugmentedQuadratic(A, y, B, vstar, sigma)
    g = BlockL1Penalty(alpha, f.n, f.s)
    return CompositeProblem(f, g)


@dataclass
class AlmConfig:
    sigma0: float = 1.0
    tau: float = 10.0  # penalty inflation factor (> 1)
    xi: float = 0.25  # required feasibility shrink ratio (in (0, 1))
    eps_feas: float = 1e-8
    max_outer: int = 50
    first_inner_tol: float = 1e-6

    def __post_init__(self):
        if self.sigma0 <= 0.0:
            raise ValueError("sigma0 must be positive")
        if not self.tau > 1.0:
            raise ValueError("tau must exceed 1")
        if not 0.0 < self.xi < 1.0:
            raise ValueError("xi must lie in (0, 1)")


@dataclass
class AlmState:
    """Multiplier, penalty weight, and progress of the outer loop."""

    vstar: np.ndarray
    sigma: float
    tau: float
    xi: float
    prev_feas: float = None
    outer_iter: int = 0


@dataclass
class OuterRecord:
    outer_iter: int
    sigma: float
    feas: float
    inner_iters: int
    objective: float

    def csv_row(self):
        return (
            f"{self.outer_iter},{float(self.sigma)!r},{float(self.feas)!r},"
            f"{self.inner_iters},{float(self.objective)!r}"
        )


@dataclass
class AlmReport:
    image: ImageGrid
    x: np.ndarray
    v: np.ndarray
    state: AlmState
    feasibility: float
    objective: float
    outer_iterations: int
    history: list
    inner_reports: list
    reason: str

    @property
    def converged(self):
        return self.reason == "converged"

    def write_outer_csv(self, path):
        with open(path, "w") as fh:
            fh.write(OUTER_CSV_HEADER + "\n")
            for row in self.history:
                fh.write(row.csv_row() + "\n")


def solve_tv(A, y, alpha, n1, n2, alm_config=None, inner_config=None):
    """Minimize ||Ax - y||^2 + alpha * TV(x) over images on the n1 x n2 grid."""
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    cfg = alm_config or AlmConfig()
    inner = inner_config or SolverConfig()
    n = n1 * n2
    if A.shape[1] != n:
        raise ValueError(f"operator has {A.shape[1]} columns, grid needs {n}")
    B = build_difference_operator(n1, n2)
    s = B.shape[0]
    x = np.zeros(n)
    v = np.zeros(s)
    state = AlmState(vstar=np.zeros(s), sigma=cfg.sigma0, tau=cfg.tau, xi=cfg.xi)
    history = []
    inner_reports = []
    reason = "outer_iteration_cap"
    feas = np.inf
    objective = np.inf
    for outer in range(cfg.max_outer):
        state.outer_iter = outer
        prob = build_inner_problem(A, y, alpha, B, state.vstar, state.sigma)
        if state.prev_feas is None:
            eps_k = max(inner.eps_stop, cfg.first_inner_tol)
        elif state.prev_feas <= cfg.eps_feas:
            eps_k = inner.eps_stop
        else:
            eps_k = max(inner.eps_stop, 0.1 * state.prev_feas)
        try:
            rep = solve(prob, np.concatenate([x, v]), replace(inner, eps_stop=eps_k))
        except StagnationError as exc:
            raise StagnationError(
                f"inner solve stagnated at outer iteration {outer}: {exc}", exc.state
            ) from exc
        inner_reports.append(rep)
        x, v = rep.z[:n], rep.z[n:]
        feas_vec = B.apply(x) - v
        feas = float(np.linalg.norm(feas_vec))
        r = A.apply(x) - y
        objective = float(r @ r) + alpha * float(np.abs(B.apply(x)).sum())
        history.append(
            OuterRecord(
                outer_iter=outer, sigma=state.sigma, feas=feas,
                inner_iters=rep.iterations, objective=objective,
            )
        )
        if feas <= cfg.eps_feas and rep.residual_rel <= inner.eps_stop:
            reason = "converged"
            state.prev_feas = feas
            break
        state.vstar = state.vstar + state.sigma * feas_vec
        if state.prev_feas is not None and feas > cfg.xi * state.prev_feas:
            state.sigma *= cfg.tau
        state.prev_feas = feas
    image = ImageGrid(n1=n1, n2=n2, values=x.copy())
    return AlmReport(
        image=image, x=x, v=v, state=state, feasibility=feas, objective=objective,
        outer_iterations=len(history), history=history, inner_reports=inner_reports,
        reason=reason,
    )


def check_tv_regularity(A, B, xbar, vbar, rbar, sigma, alpha, *, match_tol=1e-8,
                        sv_tol=1e-10, max_dim=20):
    """Exhaustive nonsingularity check of the TV saddle-point blocks.

    Enumerates index sets I between the support of vbar and the candidates
    where |rbar_i| matches alpha (rbar is the v-gradient of the augmented
    smooth part at (xbar, vbar)), and tests the smallest singular value of

        [[A^T A + sigma B^T B, -sigma B^T P_I], [-sigma P_I B, sigma P_I + W_I]].
    """
    s = B.shape[0]
    if s > max_dim:
        raise RefusalError(
            f"TV regularity check enumerates up to 2^s index sets; s={s} exceeds the limit {max_dim}"
        )
    vbar = np.asarray(vbar, float)
    rbar = np.asarray(rbar, float)
    lower = np.flatnonzero(vbar != 0.0)
    zero = np.flatnonzero(vbar == 0.0)
    extra = zero[np.abs(np.abs(rbar[zero]) - alpha) <= match_tol]
    a_dense = A.to_dense()
    b_dense = B.to_dense()
    gram = a_dense.T @ a_dense + sigma * (b_dense.T @ b_dense)
    n = A.shape[1]
    tested = 0
    smallest = np.inf
    failures = []
    for k in range(extra.size + 1):
        for combo in combinations(extra.tolist(), k):
            act = np.array(sorted(lower.tolist() + list(combo)), dtype=np.int64)
            pdiag = np.zeros(s)
            pdiag[act] = 1.0
            mat = np.zeros((n + s, n + s))
            mat[:n, :n] = gram
            mat[:n, n:] = -sigma * b_dense.T * pdiag[np.newaxis, :]
            mat[n:, :n] = mat[:n, n:].T
            mat[n:, n:] = np.diag(sigma * pdiag + (1.0 - pdiag))
            sv = np.linalg.svd(mat, compute_uv=False)
            sigma_min = float(sv[-1])
            tested += 1
            smallest = min(smallest, sigma_min)
            if sigma_min <= sv_tol:
                failures.append((tuple(act.tolist()), sigma_min))
    return RegularityReport(
        regular=not failures,
        lower=tuple(lower.tolist()),
        upper=tuple(sorted(lower.tolist() + extra.tolist())),
        tested=tested,
        smallest_sv=float(smallest),
        failures=failures,
    )
