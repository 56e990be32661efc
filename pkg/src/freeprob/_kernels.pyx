# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops: discrete Cauchy sums and the subordination iterations.

All routines work point by point over a batch of z values and release the
GIL, so callers may split a batch across threads.
"""

from libc.math cimport fabs, sqrt, isfinite

ctypedef double complex cplx


cdef inline cplx _cauchy(cplx z, const double* x, const double* w, Py_ssize_t n) noexcept nogil:
    # four interleaved partial sums: better rounding and lets the compiler vectorize
    cdef double zr = z.real, zi = z.imag, zi2 = zi * zi
    cdef double r0 = 0.0, r1 = 0.0, r2 = 0.0, r3 = 0.0
    cdef double i0 = 0.0, i1 = 0.0, i2 = 0.0, i3 = 0.0
    cdef double d0, d1, d2, d3, q0, q1, q2, q3
    cdef Py_ssize_t i, n4 = n - n % 4
    for i in range(0, n4, 4):
        d0 = zr - x[i]
        d1 = zr - x[i + 1]
        d2 = zr - x[i + 2]
        d3 = zr - x[i + 3]
        q0 = w[i] / (d0 * d0 + zi2)
        q1 = w[i + 1] / (d1 * d1 + zi2)
        q2 = w[i + 2] / (d2 * d2 + zi2)
        q3 = w[i + 3] / (d3 * d3 + zi2)
        r0 += q0 * d0
        r1 += q1 * d1
        r2 += q2 * d2
        r3 += q3 * d3
        i0 += q0
        i1 += q1
        i2 += q2
        i3 += q3
    for i in range(n4, n):
        d0 = zr - x[i]
        q0 = w[i] / (d0 * d0 + zi2)
        r0 += q0 * d0
        i0 += q0
    return ((r0 + r1) + (r2 + r3)) - zi * ((i0 + i1) + (i2 + i3)) * 1j


cdef inline cplx _h(cplx z, const double* x, const double* w, Py_ssize_t n) noexcept nogil:
    return 1.0 / _cauchy(z, x, w, n) - z


cdef inline double _cabs(cplx a) noexcept nogil:
    return sqrt(a.real * a.real + a.imag * a.imag)


def cauchy_sum(const double[::1] zr, const double[::1] zi,
               const double[::1] x, const double[::1] w,
               double[::1] out_r, double[::1] out_i):
    cdef Py_ssize_t k, m = zr.shape[0], n = x.shape[0]
    cdef cplx g
    cdef const double* px = &x[0] if n else NULL
    cdef const double* pw = &w[0] if n else NULL
    with nogil:
        for k in range(m):
            g = _cauchy(zr[k] + zi[k] * 1j, px, pw, n)
            out_r[k] = g.real
            out_i[k] = g.imag


cdef inline cplx _aitken(cplx w0, cplx w1, cplx w2, double im_floor, bint* ok) noexcept nogil:
    cdef cplx d1 = w1 - w0, d2 = w2 - w1, den = d2 - d1, acc
    ok[0] = False
    if _cabs(den) == 0.0:
        return w2
    acc = w2 - d2 * d2 / den
    if isfinite(acc.real) and isfinite(acc.imag) and acc.imag >= im_floor:
        ok[0] = True
        return acc
    return w2


def subordinate_batch(const double[::1] zr, const double[::1] zi,
                      const double[::1] mx, const double[::1] mw,
                      const double[::1] nx, const double[::1] nw,
                      double tol, long max_iter, bint aitken,
                      double[::1] out_r, double[::1] out_i,
                      long[::1] out_iter, double[::1] out_res):
    """Fixed point of w -> z + H_nu(z + H_mu(w)) for each z, from w0 = z."""
    cdef Py_ssize_t k, m = zr.shape[0], nm = mx.shape[0], nn = nx.shape[0]
    cdef const double* pmx = &mx[0]
    cdef const double* pmw = &mw[0]
    cdef const double* pnx = &nx[0]
    cdef const double* pnw = &nw[0]
    cdef cplx z, w, wn, wp
    cdef double r, thresh, az
    cdef long it
    cdef bint ok
    with nogil:
        for k in range(m):
            z = zr[k] + zi[k] * 1j
            az = _cabs(z)
            thresh = tol * (az if az > 1.0 else 1.0)
            w = z
            wp = z
            r = 0.0
            it = 0
            while it < max_iter:
                wn = z + _h(z + _h(w, pmx, pmw, nm), pnx, pnw, nn)
                it += 1
                r = _cabs(wn - w)
                if r <= thresh:
                    w = wn
                    break
                if aitken and it % 3 == 2:
                    wn = _aitken(wp, w, wn, z.imag, &ok)
                wp = w
                w = wn
            out_r[k] = w.real
            out_i[k] = w.imag
            out_iter[k] = it
            out_res[k] = r


def power_subordinate_batch(const double[::1] zr, const double[::1] zi,
                            const double[::1] x, const double[::1] w_,
                            double t, double tol, long max_iter,
                            double[::1] out_r, double[::1] out_i,
                            long[::1] out_iter, double[::1] out_res):
    """Fixed point of w -> z + (t - 1) H_mu(w) for each z, from w0 = z."""
    cdef Py_ssize_t k, m = zr.shape[0], n = x.shape[0]
    cdef const double* px = &x[0]
    cdef const double* pw = &w_[0]
    cdef cplx z, w, wn
    cdef double r, thresh, az, s = t - 1.0
    cdef long it
    with nogil:
        for k in range(m):
            z = zr[k] + zi[k] * 1j
            az = _cabs(z)
            thresh = tol * (az if az > 1.0 else 1.0)
            w = z
            r = 0.0
            it = 0
            while it < max_iter:
                wn = z + s * _h(w, px, pw, n)
                it += 1
                r = _cabs(wn - w)
                w = wn
                if r <= thresh:
                    break
            out_r[k] = w.real
            out_i[k] = w.imag
            out_iter[k] = it
            out_res[k] = r
