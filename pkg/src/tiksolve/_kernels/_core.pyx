# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: CSR products, scalar prox roots, ray tracing.

Mirrors tiksolve._kernels.pykernels operation for operation (same formulas,
same evaluation order) so the two backends agree to rounding.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel import prange
from libc.math cimport cos, fabs, pow, sin

cnp.import_array()

cdef double SEG_TOL = 1e-12


def make_csr_handle(indptr, indices, data, shape):
    # 32-bit indices keep the gather loops bandwidth-friendly
    return (
        np.ascontiguousarray(indptr, dtype=np.int64),
        np.ascontiguousarray(indices, dtype=np.int32),
        np.ascontiguousarray(data, dtype=np.float64),
        int(shape[0]),
        int(shape[1]),
    )


def csr_matvec(handle, x, num_threads=1):
    indptr_a, indices_a, data_a, m, n = handle
    cdef const long long[::1] indptr = indptr_a
    cdef const int[::1] indices = indices_a
    cdef const double[::1] data = data_a
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    out_a = np.empty(m, dtype=np.float64)
    cdef double[::1] out = out_a
    cdef Py_ssize_t i, j
    cdef Py_ssize_t rows = m
    cdef double acc
    cdef int nt = max(1, int(num_threads))
    if nt == 1:
        with nogil:
            for i in range(rows):
                acc = 0.0
                for j in range(indptr[i], indptr[i + 1]):
                    acc = acc + data[j] * xv[indices[j]]
                out[i] = acc
    else:
        for i in prange(rows, nogil=True, schedule="static", num_threads=nt):
            acc = 0.0
            for j in range(indptr[i], indptr[i + 1]):
                acc = acc + data[j] * xv[indices[j]]
            out[i] = acc
    return out_a


def csr_rmatvec(handle, y):
    indptr_a, indices_a, data_a, m, n = handle
    cdef const long long[::1] indptr = indptr_a
    cdef const int[::1] indices = indices_a
    cdef const double[::1] data = data_a
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    out_a = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_a
    cdef Py_ssize_t i, j
    cdef Py_ssize_t rows = m
    cdef double yi
    with nogil:
        for i in range(rows):
            yi = yv[i]
            for j in range(indptr[i], indptr[i + 1]):
                out[indices[j]] += data[j] * yi
    return out_a


def prox_power_newton(vhat, c, p_in):
    cdef const double[::1] v = np.ascontiguousarray(vhat, dtype=np.float64)
    c_arr = np.ascontiguousarray(np.broadcast_to(np.asarray(c, dtype=np.float64), np.shape(vhat)))
    cdef const double[::1] cv = c_arr
    out_a = np.zeros(v.shape[0], dtype=np.float64)
    cdef double[::1] out = out_a
    cdef double p = p_in
    cdef Py_ssize_t i
    for i in range(v.shape[0]):
        out[i] = _prox_power_scalar(v[i], cv[i], p)
    return out_a


cdef double _prox_power_scalar(double v, double c, double p) nogil:
    cdef double av = fabs(v)
    cdef double z_infl, z, zn, phi, dphi, guard, w
    cdef int it
    if av == 0.0:
        return 0.0
    z_infl = pow(c * p * (1.0 - p), 1.0 / (2.0 - p))
    if not z_infl < av:
        return 0.0
    if z_infl - av + c * p * pow(z_infl, p - 1.0) > 0.0:
        return 0.0
    z = av
    for it in range(100):
        w = c * p * pow(z, p - 2.0)
        phi = z - av + w * z
        dphi = 1.0 + w * (p - 1.0)
        zn = z - phi / dphi
        if zn <= z_infl:
            zn = 0.5 * (z + z_infl)
        guard = 1.0 if z < 1.0 else z
        if fabs(zn - z) <= 1e-15 * guard:
            z = zn
            break
        z = zn
    if z > av:
        z = av
    if 0.5 * (z - av) * (z - av) + c * pow(z, p) < 0.5 * av * av:
        return z if v > 0.0 else -z
    return 0.0


def radon_entries(n1_in, n2_in, angles, offsets):
    cdef Py_ssize_t n1 = n1_in, n2 = n2_in
    cdef const double[::1] ang = np.ascontiguousarray(angles, dtype=np.float64)
    cdef const double[::1] off = np.ascontiguousarray(offsets, dtype=np.float64)
    cdef Py_ssize_t n_ang = ang.shape[0], n_off = off.shape[0]
    cdef Py_ssize_t cap = n_ang * n_off * (n1 + n2 + 3)
    rows_a = np.empty(cap, dtype=np.int64)
    cols_a = np.empty(cap, dtype=np.int64)
    vals_a = np.empty(cap, dtype=np.float64)
    cdef long long[::1] rows = rows_a
    cdef long long[::1] cols = cols_a
    cdef double[::1] vals = vals_a
    taus_a = np.empty(n1 + n2 + 4, dtype=np.float64)
    tb_a = np.empty(n1 + n2 + 2, dtype=np.float64)
    cdef double[::1] taus = taus_a
    cdef double[::1] tbuf = tb_a
    cdef Py_ssize_t count = 0
    cdef Py_ssize_t a, t, j, k, nx, ny, nall, jx, iy
    cdef double theta, ct, st, sigma, lo, hi, t1, t2, xg, yg
    cdef double ta, tb, seg, mid, xm, ym
    cdef long long ray
    for a in range(n_ang):
        theta = ang[a]
        ct = cos(theta)
        st = sin(theta)
        for t in range(n_off):
            sigma = off[t]
            lo = -1e300
            hi = 1e300
            if st != 0.0:
                t1 = (sigma * ct - (-1.0)) / st
                t2 = (sigma * ct - 1.0) / st
                lo = t1 if t1 < t2 else t2
                hi = t2 if t1 < t2 else t1
            elif not (-1.0 <= sigma * ct <= 1.0):
                continue
            if ct != 0.0:
                t1 = ((-1.0) - sigma * st) / ct
                t2 = (1.0 - sigma * st) / ct
                if (t1 if t1 < t2 else t2) > lo:
                    lo = t1 if t1 < t2 else t2
                if (t2 if t1 < t2 else t1) < hi:
                    hi = t2 if t1 < t2 else t1
            elif not (-1.0 <= sigma * st <= 1.0):
                continue
            if not (hi - lo > SEG_TOL):
                continue
            # interior x-line crossings, ascending
            nx = 0
            if st != 0.0:
                for j in range(n1 + 1):
                    xg = -1.0 + 2.0 * j / n1
                    t1 = (sigma * ct - xg) / st
                    if t1 > lo and t1 < hi:
                        tbuf[nx] = t1
                        nx += 1
                if nx > 1 and tbuf[0] > tbuf[nx - 1]:
                    for j in range(nx // 2):
                        t1 = tbuf[j]
                        tbuf[j] = tbuf[nx - 1 - j]
                        tbuf[nx - 1 - j] = t1
            # merge with y-line crossings and the endpoints
            ny = 0
            if ct != 0.0:
                for j in range(n2 + 1):
                    yg = -1.0 + 2.0 * j / n2
                    t1 = (yg - sigma * st) / ct
                    if t1 > lo and t1 < hi:
                        tbuf[nx + ny] = t1
                        ny += 1
                if ny > 1 and tbuf[nx] > tbuf[nx + ny - 1]:
                    for j in range(ny // 2):
                        t1 = tbuf[nx + j]
                        tbuf[nx + j] = tbuf[nx + ny - 1 - j]
                        tbuf[nx + ny - 1 - j] = t1
            nall = _merge(taus, tbuf, nx, ny, lo, hi)
            ray = a * n_off + t
            for k in range(nall - 1):
                ta = taus[k]
                tb = taus[k + 1]
                seg = tb - ta
                if seg > SEG_TOL:
                    mid = 0.5 * (ta + tb)
                    xm = sigma * ct - mid * st
                    ym = sigma * st + mid * ct
                    jx = <Py_ssize_t>((xm + 1.0) * 0.5 * n1)
                    iy = <Py_ssize_t>((ym + 1.0) * 0.5 * n2)
                    if jx < 0:
                        jx = 0
                    elif jx > n1 - 1:
                        jx = n1 - 1
                    if iy < 0:
                        iy = 0
                    elif iy > n2 - 1:
                        iy = n2 - 1
                    rows[count] = ray
                    cols[count] = iy * n1 + jx
                    vals[count] = seg
                    count += 1
    return rows_a[:count].copy(), cols_a[:count].copy(), vals_a[:count].copy()


cdef Py_ssize_t _merge(double[::1] taus, double[::1] tbuf, Py_ssize_t nx,
                       Py_ssize_t ny, double lo, double hi) nogil:
    # three-way merge of {lo}, sorted tbuf[0:nx], sorted tbuf[nx:nx+ny], {hi}
    cdef Py_ssize_t i = 0, j = 0, k = 0
    taus[k] = lo
    k += 1
    while i < nx or j < ny:
        if j >= ny or (i < nx and tbuf[i] <= tbuf[nx + j]):
            taus[k] = tbuf[i]
            i += 1
        else:
            taus[k] = tbuf[nx + j]
            j += 1
        k += 1
    taus[k] = hi
    return k + 1
