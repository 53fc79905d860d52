"""Pure NumPy/SciPy implementations of the hot kernels.

This backend is selected automatically when the compiled extension
(``tiksolve._kernels._core``) is not available. Both backends expose the
same four entry points:

* ``make_csr_handle`` / ``csr_matvec`` / ``csr_rmatvec`` -- CSR products,
* ``prox_power_newton`` -- elementwise prox of ``c*|z|**p`` for general
  ``p`` in (0, 1),
* ``radon_entries`` -- exact ray/pixel intersection lengths.

All routines are deterministic: repeated calls on identical inputs return
bitwise-identical results.
"""

import numpy as np
import scipy.sparse as _sp

# Segment shorter than this (in the ray parameter) is treated as a duplicate
# grid crossing and dropped.
_SEG_TOL = 1e-12


def make_csr_handle(indptr, indices, data, shape):
    """Prepare a backend-specific handle for repeated CSR products."""
    mat = _sp.csr_matrix((data, indices, indptr), shape=shape, copy=False)
    return (mat, mat.T)


def csr_matvec(handle, x):
    return handle[0].dot(x)


def csr_rmatvec(handle, y):
    return handle[1].dot(y)


def prox_power_newton(vhat, c, p):
    """Componentwise global minimizer of 0.5*(z - vhat_i)^2 + c_i*|z|^p.

    ``p`` must lie strictly in (0, 1); ``c`` is a positive array broadcast
    against ``vhat``. Uses a safeguarded Newton iteration on the stationarity
    equation, started at |vhat_i| where the equation is convex, then compares
    the stationary value against z = 0.
    """
    vhat = np.asarray(vhat, dtype=np.float64)
    c = np.broadcast_to(np.asarray(c, dtype=np.float64), vhat.shape)
    av = np.abs(vhat)
    out = np.zeros_like(av)

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z_infl = (c * p * (1.0 - p)) ** (1.0 / (2.0 - p))
        cand = z_infl < av
        if np.any(cand):
            zi = z_infl[cand]
            ai = av[cand]
            ci = c[cand]
            # no stationary point when the slope at the inflection is positive
            ok = zi - ai + ci * p * zi ** (p - 1.0) <= 0.0
            idx = np.flatnonzero(cand)[ok]
            if idx.size:
                a, cc, zlo = av[idx], c[idx], z_infl[idx]
                z = a.copy()
                active = np.ones(z.shape, dtype=bool)
                for _ in range(100):
                    za, aa, ca = z[active], a[active], cc[active]
                    phi = za - aa + ca * p * za ** (p - 1.0)
                    dphi = 1.0 + ca * p * (p - 1.0) * za ** (p - 2.0)
                    z_new = za - phi / dphi
                    bad = z_new <= zlo[active]
                    z_new[bad] = 0.5 * (za[bad] + zlo[active][bad])
                    done = np.abs(z_new - za) <= 1e-15 * np.maximum(1.0, za)
                    z[active] = z_new
                    active[np.flatnonzero(active)[done]] = False
                    if not active.any():
                        break
                z = np.minimum(z, a)
                keep = 0.5 * (z - a) ** 2 + cc * z**p < 0.5 * a * a
                res = np.where(keep, z, 0.0)
                out[idx] = res
    return np.sign(vhat) * out


def radon_entries(n1, n2, angles, offsets):
    """Ray/pixel intersection lengths on the [-1, 1]^2 pixel grid.

    Rays are parametrized as ``sigma*omega(theta) + tau*omega(theta)_perp``
    with ``omega = (cos, sin)``. Pixel columns j cover
    x in [-1 + 2j/n1, -1 + 2(j+1)/n1] and rows i analogously in y; the flat
    pixel index is ``i*n1 + j`` (row-major, row 0 at the bottom edge).

    Returns (rows, cols, vals): one triplet per traversed pixel, ray-major,
    with ``row = angle_index * len(offsets) + offset_index``.
    """
    angles = np.asarray(angles, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.float64)
    rows, cols, vals = [], [], []
    xgrid = -1.0 + 2.0 * np.arange(n1 + 1) / n1
    ygrid = -1.0 + 2.0 * np.arange(n2 + 1) / n2
    for a, theta in enumerate(angles):
        ct, st = np.cos(theta), np.sin(theta)
        for t, sigma in enumerate(offsets):
            lo, hi = -np.inf, np.inf
            if st != 0.0:
                t1 = (sigma * ct - (-1.0)) / st
                t2 = (sigma * ct - 1.0) / st
                lo, hi = min(t1, t2), max(t1, t2)
            elif not (-1.0 <= sigma * ct <= 1.0):
                continue
            if ct != 0.0:
                t1 = ((-1.0) - sigma * st) / ct
                t2 = (1.0 - sigma * st) / ct
                lo = max(lo, min(t1, t2))
                hi = min(hi, max(t1, t2))
            elif not (-1.0 <= sigma * st <= 1.0):
                continue
            if not (hi - lo > _SEG_TOL):
                continue
            crossings = [np.array([lo, hi])]
            if st != 0.0:
                tx = (sigma * ct - xgrid) / st
                crossings.append(tx[(tx > lo) & (tx < hi)])
            if ct != 0.0:
                ty = (ygrid - sigma * st) / ct
                crossings.append(ty[(ty > lo) & (ty < hi)])
            taus = np.sort(np.concatenate(crossings))
            seg = np.diff(taus)
            keep = seg > _SEG_TOL
            if not keep.any():
                continue
            mid = 0.5 * (taus[:-1] + taus[1:])[keep]
            xm = sigma * ct - mid * st
            ym = sigma * st + mid * ct
            jx = np.clip(((xm + 1.0) * 0.5 * n1).astype(np.int64), 0, n1 - 1)
            iy = np.clip(((ym + 1.0) * 0.5 * n2).astype(np.int64), 0, n2 - 1)
            ray = a * offsets.size + t
            rows.append(np.full(jx.size, ray, dtype=np.int64))
            cols.append(iy * n1 + jx)
            vals.append(seg[keep])
    if not rows:
        empty = np.empty(0)
        return empty.astype(np.int64), empty.astype(np.int64), empty
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
