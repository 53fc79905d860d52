"""Globalized active-set Newton solver for composite objectives.

The solver interleaves forward-backward steps (which also certify a
subgradient at the prox point) with Newton steps on the active subspace
reported by the penalty. A line search on the forward-backward model value
globalizes the method: a step size tau and the prox step length lam are
adapted until the acceptance inequalities hold, and the Newton direction is
kept inside an adaptive trust radius rho.

``solve`` runs the Newton variant, ``solve_pgm`` the same loop with a zero
search direction (pure proximal gradient with identical bookkeeping).
"""

import time
from dataclasses import dataclass, field

import numpy as np

from tiksolve.envelope import forward_backward_step, smooth_value_and_gradient
from tiksolve.errors import SolverError, StagnationError

__all__ = [
    "SolverConfig",
    "SolverState",
    "IterationRecord",
    "SolveReport",
    "newton_direction",
    "solve",
    "solve_pgm",
    "power_estimate",
]

CSV_HEADER = "iter,phi,phi_fb,resid,lambda,tau,rho,xi,time_s"


@dataclass
class SolverConfig:
    """Parameters of the globalized Newton loop.

    ``alpha_ls``/``beta``/``sigma_ls`` control the acceptance inequalities,
    ``lam0``/``lam_bar`` the prox step length (None: set from a power-method
    estimate of the Hessian norm), ``rho*`` the trust radius, and the
    ``chi_*`` values the inexactness curve chi(t) = min(chi_max,
    chi_kappa * t**chi_theta) for the conjugate-gradient subsolver.
    """

    alpha_ls: float = 0.95
    beta: float = 0.5
    sigma_ls: float = 0.25
    lam0: float = None
    lam_bar: float = None
    rho0: float = 1.0
    rho_min: float = 1e-3
    rho_max: float = 1e3
    chi_max: float = 0.5
    chi_kappa: float = 1.0
    chi_theta: float = 0.5
    eps_stop: float = 1e-10
    max_iter: int = 500
    direct_cutoff: int = 512
    cg_max_iter: int = None
    tau_min: float = 2.0**-60
    power_iters: int = 20
    keep_iterates: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha_ls < 1.0:
            raise ValueError("alpha_ls must lie in (0, 1)")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if not 0.0 < self.sigma_ls < 0.5:
            raise ValueError("sigma_ls must lie in (0, 1/2)")
        if not 0.0 < self.rho_min < self.rho_max:
            raise ValueError("need 0 < rho_min < rho_max")
        if not self.rho_min <= self.rho0 <= self.rho_max:
            raise ValueError("rho0 must lie in [rho_min, rho_max]")
        if not 0.0 < self.chi_max < 1.0:
            raise ValueError("chi_max must lie in (0, 1)")
        if self.chi_kappa <= 0.0 or self.chi_theta <= 0.0:
            raise ValueError("chi curve must be increasing on (0, inf)")
        if self.lam0 is not None and self.lam0 <= 0.0:
            raise ValueError("lam0 must be positive")
        if self.eps_stop <= 0.0:
            raise ValueError("eps_stop must be positive")

    def chi(self, t):
        return min(self.chi_max, self.chi_kappa * t**self.chi_theta)


@dataclass
class SolverState:
    """Mutable loop state, attached to solver errors for diagnosis."""

    x: np.ndarray = None
    z: np.ndarray = None
    graph_point: object = None
    lam: float = 0.0
    rho: float = 0.0
    tau: float = 1.0
    phi_fb: float = np.inf
    iteration: int = 0
    history: list = field(default_factory=list)


@dataclass
class IterationRecord:
    """One solver iteration; ``eta`` and ``step_norm`` extend the CSV schema."""

    iter: int
    phi: float
    phi_fb: float
    resid: float
    lam: float
    tau: float
    rho: float
    xi: float
    time_s: float
    eta: float = 0.0
    step_norm: float = 0.0
    f_z: float = 0.0
    ell: float = 0.0

    def csv_row(self):
        vals = (self.phi, self.phi_fb, self.resid, self.lam, self.tau, self.rho, self.xi)
        body = ",".join(repr(float(v)) for v in vals)
        return f"{self.iter},{body},{self.time_s:.6f}"


@dataclass
class SolveReport:
    """Outcome of one solve run."""

    x: np.ndarray
    z: np.ndarray
    residual: float
    residual_rel: float
    iterations: int
    history: list
    reason: str
    wall_time: float
    grad0_norm: float
    config: SolverConfig
    iterates: list = None

    @property
    def converged(self):
        return self.reason == "converged"

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(CSV_HEADER + "\n")
            for row in self.history:
                fh.write(row.csv_row() + "\n")


def power_estimate(f, x, iters=20, seed=0x5EED):
    """Largest-eigenvalue estimate of the Hessian of ``f`` at ``x``."""
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(x.size)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(iters):
        hv = f.hessian_apply(x, v)
        nv = float(np.linalg.norm(hv))
        if nv == 0.0:
            return 0.0
        est = nv
        v = hv / nv
    return est


def _reduced_hessian(f, x, idx):
    fn = getattr(f, "reduced_hessian", None)
    if fn is not None:
        return fn(x, idx)
    n = x.size
    out = np.empty((idx.size, idx.size))
    e = np.zeros(n)
    for j, col in enumerate(idx):
        e[col] = 1.0
        out[:, j] = f.hessian_apply(x, e)[idx]
        e[col] = 0.0
    return out


def _steihaug_cg(apply_m, b, precond, rho, tol_abs, max_iter):
    """Truncated preconditioned CG on the trust region ||u|| <= rho.

    Stops on a small residual, on crossing the boundary (steps to the
    sphere), or on nonpositive curvature (likewise steps to the sphere).
    """
    m = b.size
    u = np.zeros(m)
    r = b.copy()
    if np.linalg.norm(r) <= tol_abs:
        return u
    zvec = r / precond
    p = zvec.copy()
    rz = float(r @ zvec)
    for _ in range(max_iter):
        mp = apply_m(p)
        curvature = float(p @ mp)
        if curvature <= 0.0:
            return _to_boundary(u, p, rho)
        step = rz / curvature
        u_next = u + step * p
        if np.linalg.norm(u_next) >= rho:
            return _to_boundary(u, p, rho)
        u = u_next
        r = r - step * mp
        if np.linalg.norm(r) <= tol_abs:
            return u
        zvec = r / precond
        rz_next = float(r @ zvec)
        p = zvec + (rz_next / rz) * p
        rz = rz_next
    return u


def _to_boundary(u, p, rho):
    # positive root of ||u + t p||^2 = rho^2
    pp = float(p @ p)
    if pp == 0.0:
        return u
    up = float(u @ p)
    uu = float(u @ u)
    t = (-up + np.sqrt(up * up + pp * (rho * rho - uu))) / pp
    return u + t * p


def newton_direction(prob, gp, basis, rho, chi_tol, direct_cutoff=512, cg_max_iter=None):
    """Newton direction on the active subspace, trust-radius limited.

    Solves the reduced system (H_f + W)_II s_I = -z*_I where H_f is the
    Hessian of the smooth part at z and W the penalty curvature; small
    active sets use a direct solve (projected onto the rho-ball), larger
    ones a truncated CG with Jacobi scaling. Returns the ambient direction
    s (supported on the active set) and the relative residual
    xi = ||(H_f + W) s + P z*|| / ||z*||.
    """
    z = gp.z
    zs = gp.z_star
    zs_norm = float(np.linalg.norm(zs))
    idx = basis.indices
    curv = basis.curvatures
    s = np.zeros(z.size)
    if idx.size == 0 or zs_norm == 0.0 or rho <= 0.0:
        return s, 0.0
    b = -zs[idx]
    if idx.size <= direct_cutoff:
        mat = _reduced_hessian(prob.f, z, idx)
        mat[np.arange(idx.size), np.arange(idx.size)] += curv
        u = None
        try:
            cand = np.linalg.solve(mat, b)
            if np.all(np.isfinite(cand)) and np.linalg.norm(mat @ cand - b) <= 1e-8 * max(
                np.linalg.norm(b), np.finfo(float).tiny
            ):
                u = cand
        except np.linalg.LinAlgError:
            u = None
        if u is None:
            pz_norm = float(np.linalg.norm(zs[idx]))
            if pz_norm == 0.0:
                return s, 0.0
            u = -(rho / pz_norm) * zs[idx]
        s[idx] = u
        s_norm = float(np.linalg.norm(s))
        if s_norm > rho:
            s *= rho / s_norm
    else:
        def apply_m(u):
            full = np.zeros(z.size)
            full[idx] = u
            return prob.f.hessian_apply(z, full)[idx] + curv * u

        hdiag = None
        diag_fn = getattr(prob.f, "hessian_diag", None)
        if diag_fn is not None:
            hdiag = diag_fn(z)
        precond = (hdiag[idx] if hdiag is not None else np.ones(idx.size)) + np.abs(curv)
        precond = np.maximum(precond, 1e-12 * max(float(precond.max()), 1.0))
        max_it = cg_max_iter if cg_max_iter is not None else 2 * idx.size + 10
        u = _steihaug_cg(apply_m, b, precond, rho, chi_tol * zs_norm, max_it)
        s[idx] = u
    h = prob.f.hessian_apply(z, s)
    xi = float(np.linalg.norm(h[idx] + curv * s[idx] + zs[idx])) / zs_norm
    return s, xi


def solve(prob, x0, config=None):
    """Run the globalized Newton solver from ``x0``."""
    return _run(prob, x0, config or SolverConfig(), use_newton=True)


def solve_pgm(prob, x0, config=None):
    """Proximal-gradient reference: the same loop with a zero direction."""
    return _run(prob, x0, config or SolverConfig(), use_newton=False)


def _run(prob, x0, config, use_newton):
    t0 = time.perf_counter()
    x = np.array(x0, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")
    state = SolverState(x=x)

    fx, gx = smooth_value_and_gradient(prob.f, x)
    if not np.isfinite(fx):
        raise SolverError("objective is not finite at the starting point", state)
    scale = max(1.0, float(np.linalg.norm(gx)))

    lam = config.lam0
    if lam is None:
        lhat = power_estimate(prob.f, x, config.power_iters)
        lam = 1.0 / lhat if lhat > 0.0 else 1.0
    lam_bar = config.lam_bar if config.lam_bar is not None else 4.0 * lam

    gp = forward_backward_step(prob, x, lam, fx, gx)
    guard = 0
    while not gp.descent_holds(config.alpha_ls):
        lam *= 0.5
        guard += 1
        if guard > 200:
            raise StagnationError("could not find an initial prox step length", state)
        gp = forward_backward_step(prob, x, lam, fx, gx)

    rho = config.rho0
    history = []
    iterates = [] if config.keep_iterates else None
    reason = None
    k = 0
    while True:
        state.x, state.z, state.graph_point = x, gp.z, gp
        state.lam, state.rho, state.phi_fb, state.iteration = lam, rho, gp.psi, k
        state.history = history
        resid = gp.residual()
        if not np.isfinite(gp.psi):
            raise SolverError(f"non-finite objective at iteration {k}", state)
        if iterates is not None:
            iterates.append(gp.z.copy())
        if resid <= config.eps_stop * scale or k >= config.max_iter:
            history.append(
                IterationRecord(
                    iter=k, phi=gp.phi, phi_fb=gp.psi, resid=resid, lam=lam,
                    tau=0.0, rho=rho, xi=0.0, time_s=time.perf_counter() - t0,
                    eta=gp.eta, step_norm=0.0, f_z=gp.f_z, ell=gp.ell,
                )
            )
            reason = "converged" if resid <= config.eps_stop * scale else "max_iterations"
            break

        if use_newton:
            basis = prob.g.active_basis(gp.z)
            s, xi = newton_direction(
                prob, gp, basis, rho, config.chi(resid),
                direct_cutoff=config.direct_cutoff, cg_max_iter=config.cg_max_iter,
            )
            s_norm = float(np.linalg.norm(s))
        else:
            s, xi, s_norm = None, 0.0, 0.0

        # line search: shrink tau until the model decreases, shrink the new
        # prox step length until the acceptance inequality holds at the
        # candidate, then grow it while it is clearly too conservative
        tau = 1.0
        lam_next = lam
        bound = gp.psi - config.beta * (1.0 - config.alpha_ls) * gp.eta
        x_cand = None
        while True:
            if x_cand is None:
                x_cand = gp.z + tau * s if s_norm > 0.0 else gp.z
                fx_c, gx_c = smooth_value_and_gradient(prob.f, x_cand)
                if not np.isfinite(fx_c):
                    raise SolverError(f"non-finite objective in line search at iteration {k}", state)
            gp_next = forward_backward_step(prob, x_cand, lam_next, fx_c, gx_c)
            if gp_next.psi > bound:
                tau *= 0.5
                state.tau = tau
                if tau < config.tau_min:
                    raise StagnationError(
                        f"step size underflow at iteration {k} (residual {resid:.3e})", state
                    )
                x_cand = None
                continue
            if not gp_next.descent_holds(config.alpha_ls):
                lam_next *= 0.5
                if lam_next <= 0.0 or lam_next < 1e-300:
                    raise StagnationError(f"prox step length underflow at iteration {k}", state)
                continue
            break
        while True:
            if gp_next.f_z >= gp_next.ell + config.sigma_ls * config.alpha_ls * gp_next.eta:
                break
            if lam_next > 0.5 * lam_bar:
                break
            gp_try = forward_backward_step(prob, x_cand, 2.0 * lam_next, fx_c, gx_c)
            if gp_try.f_z >= gp_try.ell + config.alpha_ls * gp_try.eta:
                break
            lam_next *= 2.0
            gp_next = gp_try

        history.append(
            IterationRecord(
                iter=k, phi=gp.phi, phi_fb=gp.psi, resid=resid, lam=lam,
                tau=tau, rho=rho, xi=xi, time_s=time.perf_counter() - t0,
                eta=gp.eta, step_norm=s_norm, f_z=gp.f_z, ell=gp.ell,
            )
        )
        if tau < 0.25:
            rho = max(0.25 * rho, config.rho_min)
        elif tau == 1.0 and s_norm >= rho * (1.0 - 1e-12):
            rho = min(2.0 * rho, config.rho_max)
        x, lam, gp = x_cand, lam_next, gp_next
        k += 1

    return SolveReport(
        x=x,
        z=gp.z,
        residual=resid,
        residual_rel=resid / scale,
        iterations=k,
        history=history,
        reason=reason,
        wall_time=time.perf_counter() - t0,
        grad0_norm=float(np.linalg.norm(gx)),
        config=config,
        iterates=iterates,
    )
