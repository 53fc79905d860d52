"""Forward-backward machinery for composite objectives f + g.

The smooth part follows a small protocol: ``value(x)``, ``gradient(x)``,
``hessian_apply(x, d)``, optionally ``value_and_gradient(x)``,
``hessian_diag(x)`` and ``reduced_hessian(x, idx)``. The nonsmooth part
provides ``eval(v)``, ``prox(lam, vhat)`` and ``active_basis(z)``
(see :class:`tiksolve.penalties.LpPenalty`).

A :class:`GraphPoint` bundles one forward-backward step from x: the prox
output z, the certified subgradients at z, the quadratic-model value used
as the line-search merit function, and the step measure eta.
"""

import numpy as np

from tiksolve.operators import LinearOperator

__all__ = [
    "QuadraticFidelity",
    "CompositeProblem",
    "GraphPoint",
    "forward_backward_step",
    "envelope_value",
    "descent_check",
    "smooth_value_and_gradient",
]


class QuadraticFidelity:
    """Smooth part f(x) = ||A x - y||^2 for a linear operator A."""

    def __init__(self, A: LinearOperator, y):
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (A.shape[0],):
            raise ValueError(f"data length {y.shape} does not match operator rows {A.shape[0]}")
        self.A = A
        self.y = y

    def value(self, x):
        r = self.A.apply(x) - self.y
        return float(r @ r)

    def gradient(self, x):
        r = self.A.apply(x) - self.y
        return 2.0 * self.A.apply_transpose(r)

    def value_and_gradient(self, x):
        r = self.A.apply(x) - self.y
        return float(r @ r), 2.0 * self.A.apply_transpose(r)

    def hessian_apply(self, x, d):
        return 2.0 * self.A.apply_transpose(self.A.apply(d))

    def hessian_diag(self, x):
        sq = self.A.column_sq_norms()
        return None if sq is None else 2.0 * sq

    def reduced_hessian(self, x, idx):
        """Dense 2 * A_I^T A_I for the column subset idx."""
        cols = self.A.submatrix_columns(idx).to_dense()
        return 2.0 * cols.T @ cols


class CompositeProblem:
    """Composite objective: smooth fidelity plus nonsmooth penalty."""

    def __init__(self, f, g):
        self.f = f
        self.g = g

    def value(self, x):
        return self.f.value(x) + self.g.eval(x)


def smooth_value_and_gradient(f, x):
    fn = getattr(f, "value_and_gradient", None)
    if fn is not None:
        return fn(x)
    return f.value(x), f.gradient(x)


class GraphPoint:
    """One forward-backward step z from x at step length lam.

    Attributes
    ----------
    z : prox output, an element of the forward-backward map at x.
    z_star_g : subgradient of g at z, computed as -grad_f(x) - (z - x)/lam.
    z_star : subgradient of f + g at z (grad_f(z) + z_star_g, lazy).
    eta : ||z - x||^2 / (2 lam).
    psi : model value l_f(x, z) + eta + g(z); minimizing it over z defines
        the envelope value of the objective at x.
    """

    def __init__(self, prob, x, lam, f_x, grad_x, z, f_z, g_z):
        self._prob = prob
        self.x = x
        self.lam = lam
        self.f_x = f_x
        self.grad_x = grad_x
        self.z = z
        self.f_z = f_z
        self.g_z = g_z
        d = z - x
        self.eta = float(d @ d) / (2.0 * lam)
        self.ell = f_x + float(grad_x @ d)
        self.z_star_g = -grad_x - d / lam
        self.psi = self.ell + self.eta + g_z
        self._z_star = None

    @property
    def z_star(self):
        if self._z_star is None:
            self._z_star = self._prob.f.gradient(self.z) + self.z_star_g
        return self._z_star

    @property
    def phi(self):
        """Objective value f(z) + g(z) at the prox point."""
        return self.f_z + self.g_z

    def residual(self):
        return float(np.linalg.norm(self.z_star))

    def descent_holds(self, alpha):
        """f(z) <= l_f(x, z) + alpha * eta, the step-acceptance inequality."""
        return self.f_z <= self.ell + alpha * self.eta


def forward_backward_step(prob, x, lam, fx=None, gx=None):
    """Compute the forward-backward point z = prox_{lam g}(x - lam grad f(x)).

    ``fx``/``gx`` can carry precomputed value and gradient of the smooth
    part at x (both or neither).
    """
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    x = np.asarray(x, dtype=np.float64)
    if fx is None or gx is None:
        fx, gx = smooth_value_and_gradient(prob.f, x)
    z = prob.g.prox(lam, x - lam * gx)
    f_z = prob.f.value(z)
    g_z = prob.g.eval(z)
    return GraphPoint(prob, x, lam, fx, gx, z, f_z, g_z)


def envelope_value(prob, x, lam):
    """Envelope value at x: the model psi evaluated at the prox point."""
    return forward_backward_step(prob, x, lam).psi


def descent_check(prob, x_next, z_next, lam_next, alpha_ls):
    """Standalone evaluation of the step-acceptance inequality."""
    x_next = np.asarray(x_next, dtype=np.float64)
    z_next = np.asarray(z_next, dtype=np.float64)
    fx, gx = smooth_value_and_gradient(prob.f, x_next)
    d = z_next - x_next
    eta = float(d @ d) / (2.0 * lam_next)
    ell = fx + float(gx @ d)
    return prob.f.value(z_next) <= ell + alpha_ls * eta
