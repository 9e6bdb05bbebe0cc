# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: ring-interaction sums, log-kernel sums, bicubic gather.

Same contract as ``fallback.py``; complete elliptic integrals are evaluated
by AGM iteration (quadratic convergence, machine precision), so both backends
agree to roundoff.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport INFINITY, M_PI, fabs, floor, log, sqrt

cnp.import_array()

COMPILED = True

cdef double _SERIES_M = 1e-5

cdef int _num_threads = 0  # 0 -> library default

IF UNAME_SYSNAME != "Windows":
    cdef extern from *:
        """
        #ifdef _OPENMP
        #include <omp.h>
        static void vrlab_set_threads(int n) { if (n > 0) omp_set_num_threads(n); }
        #else
        static void vrlab_set_threads(int n) { (void)n; }
        #endif
        """
        void vrlab_set_threads(int n) nogil


def set_num_threads(n):
    """Pin the OpenMP thread count used by the parallel sums."""
    global _num_threads
    _num_threads = int(n)
    vrlab_set_threads(int(n))


cdef inline void _agm_ke(double m, double one_m, double* K, double* E) nogil:
    # K and E as functions of the parameter m; one_m = 1 - m supplied exactly.
    cdef double a = 1.0, b = sqrt(one_m), c2sum, c, t
    cdef double pow2 = 0.5
    cdef int it
    c2sum = pow2 * m  # 2^{-1} c_0^2 with c_0^2 = m
    for it in range(60):
        c = 0.5 * (a - b)
        if fabs(c) < 1e-17 * a:
            break
        t = sqrt(a * b)
        a = 0.5 * (a + b)
        b = t
        pow2 *= 2.0
        c2sum += pow2 * c * c
    K[0] = M_PI / (2.0 * a)
    E[0] = K[0] * (1.0 - c2sum)


cdef inline double _ring_kernel_one(double xr, double xz, double yr, double yz) nogil:
    cdef double dz2 = (xz - yz) * (xz - yz)
    cdef double num = (xr - yr) * (xr - yr) + dz2
    cdef double den = (xr + yr) * (xr + yr) + dz2
    cdef double m, one_m, k, rt, K, E
    if num == 0.0:
        return INFINITY
    m = 4.0 * xr * yr / den
    one_m = num / den
    rt = sqrt(xr * yr)
    k = sqrt(m)
    if m < _SERIES_M:
        return rt * k * m * (1.0 / 32.0 + 3.0 * m / 128.0)
    _agm_ke(m, one_m, &K, &E)
    return rt / (2.0 * M_PI) * ((2.0 / k - k) * K - (2.0 / k) * E)


def ring_kernel(xr, xz, yr, yz):
    """Elementwise ring-interaction kernel (inputs broadcast)."""
    b = np.broadcast(np.asarray(xr, dtype=float), np.asarray(xz, dtype=float),
                     np.asarray(yr, dtype=float), np.asarray(yz, dtype=float))
    cdef cnp.ndarray[double, ndim=1] ar = np.ascontiguousarray(
        np.broadcast_to(np.asarray(xr, dtype=float), b.shape).ravel())
    cdef cnp.ndarray[double, ndim=1] az = np.ascontiguousarray(
        np.broadcast_to(np.asarray(xz, dtype=float), b.shape).ravel())
    cdef cnp.ndarray[double, ndim=1] br = np.ascontiguousarray(
        np.broadcast_to(np.asarray(yr, dtype=float), b.shape).ravel())
    cdef cnp.ndarray[double, ndim=1] bz = np.ascontiguousarray(
        np.broadcast_to(np.asarray(yz, dtype=float), b.shape).ravel())
    cdef Py_ssize_t n = ar.shape[0], i
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    for i in prange(n, nogil=True, schedule="static"):
        out[i] = _ring_kernel_one(ar[i], az[i], br[i], bz[i])
    return out.reshape(b.shape) if b.shape else float(out[0])


def ring_stream_sum(tr, tz, sr, sz, w, chunk=0):
    cdef cnp.ndarray[double, ndim=1] a1 = np.ascontiguousarray(np.asarray(tr, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] a2 = np.ascontiguousarray(np.asarray(tz, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] b1 = np.ascontiguousarray(np.asarray(sr, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] b2 = np.ascontiguousarray(np.asarray(sz, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] ww = np.ascontiguousarray(np.asarray(w, dtype=float).ravel())
    cdef Py_ssize_t nt = a1.shape[0], ns = b1.shape[0], i, j
    cdef cnp.ndarray[double, ndim=1] out = np.zeros(nt)
    cdef double acc, g
    for i in prange(nt, nogil=True, schedule="static"):
        acc = 0.0
        for j in range(ns):
            g = _ring_kernel_one(a1[i], a2[i], b1[j], b2[j])
            if g != INFINITY:
                acc = acc + g * ww[j]
        out[i] = acc
    return out


def ring_pair_energy(r, z, w, chunk=0):
    cdef cnp.ndarray[double, ndim=1] rr = np.ascontiguousarray(np.asarray(r, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] zz = np.ascontiguousarray(np.asarray(z, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] ww = np.ascontiguousarray(np.asarray(w, dtype=float).ravel())
    cdef Py_ssize_t n = rr.shape[0], i, j
    cdef double total = 0.0, acc, g
    for i in prange(n, nogil=True, schedule="static"):
        acc = 0.0
        for j in range(i + 1, n):
            g = _ring_kernel_one(rr[i], zz[i], rr[j], zz[j])
            if g != INFINITY:
                acc = acc + g * ww[j]
        total += acc * ww[i]
    return total


def halfplane_log_sum(tr, tz, sr, sz, w, chunk=0):
    cdef cnp.ndarray[double, ndim=1] a1 = np.ascontiguousarray(np.asarray(tr, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] a2 = np.ascontiguousarray(np.asarray(tz, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] b1 = np.ascontiguousarray(np.asarray(sr, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] b2 = np.ascontiguousarray(np.asarray(sz, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] ww = np.ascontiguousarray(np.asarray(w, dtype=float).ravel())
    cdef Py_ssize_t nt = a1.shape[0], ns = b1.shape[0], i, j
    cdef cnp.ndarray[double, ndim=1] out = np.zeros(nt)
    cdef double acc, dz2, num, den
    for i in prange(nt, nogil=True, schedule="static"):
        acc = 0.0
        for j in range(ns):
            dz2 = (a2[i] - b2[j]) * (a2[i] - b2[j])
            num = (a1[i] + b1[j]) * (a1[i] + b1[j]) + dz2
            den = (a1[i] - b1[j]) * (a1[i] - b1[j]) + dz2
            if den != 0.0:
                acc = acc + log(num / den) * ww[j]
        out[i] = acc / (4.0 * M_PI)
    return out


def halfplane_log_grad_sum(tr, tz, sr, sz, w, chunk=0):
    cdef cnp.ndarray[double, ndim=1] a1 = np.ascontiguousarray(np.asarray(tr, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] a2 = np.ascontiguousarray(np.asarray(tz, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] b1 = np.ascontiguousarray(np.asarray(sr, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] b2 = np.ascontiguousarray(np.asarray(sz, dtype=float).ravel())
    cdef cnp.ndarray[double, ndim=1] ww = np.ascontiguousarray(np.asarray(w, dtype=float).ravel())
    cdef Py_ssize_t nt = a1.shape[0], ns = b1.shape[0], i, j
    cdef cnp.ndarray[double, ndim=1] gr = np.zeros(nt)
    cdef cnp.ndarray[double, ndim=1] gz = np.zeros(nt)
    cdef double accr, accz, dz, plus, minus, num, den
    for i in prange(nt, nogil=True, schedule="static"):
        accr = 0.0
        accz = 0.0
        for j in range(ns):
            dz = a2[i] - b2[j]
            plus = a1[i] + b1[j]
            minus = a1[i] - b1[j]
            num = plus * plus + dz * dz
            den = minus * minus + dz * dz
            if den != 0.0:
                accr = accr + (plus / num - minus / den) * ww[j]
                accz = accz + (dz / num - dz / den) * ww[j]
        gr[i] = accr / (2.0 * M_PI)
        gz[i] = accz / (2.0 * M_PI)
    return gr, gz


cdef inline double _cr_row(double wj0, double wj1, double wj2, double wj3,
                           double f0, double f1, double f2, double f3) nogil:
    return wj0 * f0 + wj1 * f1 + wj2 * f2 + wj3 * f3


def catmull_rom_2d(field, pi, pj):
    # all per-point temporaries are scalars so prange keeps them thread
    # private (stack arrays at function scope would be shared)
    cdef cnp.ndarray[double, ndim=2] f = np.ascontiguousarray(np.asarray(field, dtype=float))
    arr_i = np.asarray(pi, dtype=float)
    shape = arr_i.shape
    cdef cnp.ndarray[double, ndim=1] qi = np.ascontiguousarray(arr_i.ravel())
    cdef cnp.ndarray[double, ndim=1] qj = np.ascontiguousarray(np.asarray(pj, dtype=float).ravel())
    cdef Py_ssize_t ni = f.shape[0], nj = f.shape[1], n = qi.shape[0], k
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double x, y, ti, tj, t2, t3, acc
    cdef double wi0, wi1, wi2, wi3, wj0, wj1, wj2, wj3
    cdef Py_ssize_t i0, j0, a, ia, jm1, jp0, jp1, jp2
    for k in prange(n, nogil=True, schedule="static"):
        x = qi[k]
        if x < 0.0:
            x = 0.0
        if x > ni - 1.0:
            x = ni - 1.0
        y = qj[k]
        if y < 0.0:
            y = 0.0
        if y > nj - 1.0:
            y = nj - 1.0
        i0 = <Py_ssize_t>floor(x)
        j0 = <Py_ssize_t>floor(y)
        ti = x - i0
        tj = y - j0
        t2 = ti * ti
        t3 = t2 * ti
        wi0 = 0.5 * (-t3 + 2.0 * t2 - ti)
        wi1 = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0)
        wi2 = 0.5 * (-3.0 * t3 + 4.0 * t2 + ti)
        wi3 = 0.5 * (t3 - t2)
        t2 = tj * tj
        t3 = t2 * tj
        wj0 = 0.5 * (-t3 + 2.0 * t2 - tj)
        wj1 = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0)
        wj2 = 0.5 * (-3.0 * t3 + 4.0 * t2 + tj)
        wj3 = 0.5 * (t3 - t2)
        jm1 = j0 - 1 if j0 - 1 >= 0 else 0
        jp0 = j0
        jp1 = j0 + 1 if j0 + 1 <= nj - 1 else nj - 1
        jp2 = j0 + 2 if j0 + 2 <= nj - 1 else nj - 1
        acc = 0.0
        for a in range(4):
            ia = i0 + a - 1
            if ia < 0:
                ia = 0
            if ia > ni - 1:
                ia = ni - 1
            if a == 0:
                acc = acc + wi0 * _cr_row(wj0, wj1, wj2, wj3, f[ia, jm1], f[ia, jp0], f[ia, jp1], f[ia, jp2])
            elif a == 1:
                acc = acc + wi1 * _cr_row(wj0, wj1, wj2, wj3, f[ia, jm1], f[ia, jp0], f[ia, jp1], f[ia, jp2])
            elif a == 2:
                acc = acc + wi2 * _cr_row(wj0, wj1, wj2, wj3, f[ia, jm1], f[ia, jp0], f[ia, jp1], f[ia, jp2])
            else:
                acc = acc + wi3 * _cr_row(wj0, wj1, wj2, wj3, f[ia, jm1], f[ia, jp0], f[ia, jp1], f[ia, jp2])
        out[k] = acc
    return out.reshape(shape)
