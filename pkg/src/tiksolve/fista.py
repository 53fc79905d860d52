"""ISTA/FISTA baseline for the convex (p = 1) problems.

Constant step 1/L with L estimated by the power method (plus a small
safety factor); no backtracking. The iteration log uses the same record
schema as the Newton solver so runs can be compared directly.
"""

import time
from dataclasses import dataclass

import numpy as np

from tiksolve.envelope import smooth_value_and_gradient
from tiksolve.newton import IterationRecord, SolveReport, power_estimate

__all__ = ["FistaConfig", "solve_fista"]


@dataclass
class FistaConfig:
    step: float = None  # 1/L; None: 1 / (1.05 * power-method estimate)
    max_iter: int = 20000
    eps_stop: float = 1e-10
    momentum: bool = True
    power_iters: int = 20
    keep_iterates: bool = False

    def __post_init__(self):
        if self.step is not None and self.step <= 0.0:
            raise ValueError("step must be positive")
        if self.eps_stop <= 0.0:
            raise ValueError("eps_stop must be positive")


def solve_fista(prob, x0, config=None):
    """Minimize f + g with g convex; requires a p = 1 penalty."""
    config = config or FistaConfig()
    if getattr(prob.g, "p", None) != 1.0:
        raise ValueError("FISTA requires the p = 1 penalty (convex case)")
    t0 = time.perf_counter()
    x = np.array(x0, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("x0 must be finite")

    step = config.step
    if step is None:
        lhat = power_estimate(prob.f, x, config.power_iters)
        step = 1.0 / (1.05 * lhat) if lhat > 0.0 else 1.0
    lip = 1.0 / step

    _, g0 = smooth_value_and_gradient(prob.f, x)
    scale = max(1.0, float(np.linalg.norm(g0)))

    w = x.copy()
    t_mom = 1.0
    history = []
    iterates = [] if config.keep_iterates else None
    reason = "max_iterations"
    resid = np.inf
    for k in range(config.max_iter + 1):
        fx, gx = smooth_value_and_gradient(prob.f, x)
        px = prob.g.prox(step, x - step * gx)
        resid = lip * float(np.linalg.norm(x - px))
        history.append(
            IterationRecord(
                iter=k, phi=fx + prob.g.eval(x), phi_fb=fx + prob.g.eval(x),
                resid=resid, lam=step, tau=1.0, rho=0.0, xi=0.0,
                time_s=time.perf_counter() - t0,
            )
        )
        if iterates is not None:
            iterates.append(x.copy())
        if resid <= config.eps_stop * scale:
            reason = "converged"
            break
        if k == config.max_iter:
            break
        if config.momentum:
            if np.array_equal(w, x):
                gw = gx
            else:
                _, gw = smooth_value_and_gradient(prob.f, w)
            x_new = prob.g.prox(step, w - step * gw)
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
            w = x_new + ((t_mom - 1.0) / t_new) * (x_new - x)
            t_mom = t_new
            x = x_new
        else:
            x = px  # the prox-gradient step at x itself (ISTA)

    return SolveReport(
        x=x,
        z=x,
        residual=resid,
        residual_rel=resid / scale,
        iterations=history[-1].iter,
        history=history,
        reason=reason,
        wall_time=time.perf_counter() - t0,
        grad0_norm=float(np.linalg.norm(g0)),
        config=config,
        iterates=iterates,
    )
