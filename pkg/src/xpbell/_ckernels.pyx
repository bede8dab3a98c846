# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo kernels (same contract as ``_pykernels``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, cos, sin, acos, fabs, hypot, copysign, NAN
from libc.stdint cimport uint64_t, int8_t, int64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.1102230246251565e-16
cdef double TWO_PI = 6.283185307179586


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _unit(uint64_t key, uint64_t ctr) nogil:
    return (<double>(_mix64(key + (ctr + 1) * GOLDEN) >> 11) + 0.5) * TWO_M53


cdef inline void _normals(uint64_t key, Py_ssize_t offset, Py_ssize_t count, double* out) nogil:
    cdef Py_ssize_t k = 0
    cdef double rad, ang
    while k < count:
        rad = sqrt(-2.0 * log(_unit(key, offset + k)))
        ang = TWO_PI * _unit(key, offset + k + 1)
        out[k] = rad * cos(ang)
        if k + 1 < count:
            out[k + 1] = rad * sin(ang)
        k += 2


def mix64(z):
    cdef cnp.ndarray[uint64_t, ndim=1] a = np.ascontiguousarray(z, dtype=np.uint64).reshape(-1).copy()
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        a[i] = _mix64(a[i])
    return a.reshape(np.shape(z))


def fill_uniform(keys, Py_ssize_t offset, Py_ssize_t count):
    cdef const uint64_t[::1] k = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef Py_ssize_t n = k.shape[0], i, j
    out = np.empty((n, count))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for j in range(count):
                o[i, j] = _unit(k[i], offset + j)
    return out


def fill_normal(keys, Py_ssize_t offset, Py_ssize_t count):
    cdef const uint64_t[::1] k = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef Py_ssize_t n = k.shape[0], i
    out = np.empty((n, count))
    cdef double[:, ::1] o = out
    if count == 0:
        return out
    with nogil:
        for i in range(n):
            _normals(k[i], offset, count, &o[i, 0])
    return out


cdef inline int8_t _verdict(const double* vals, const cnp.npy_bool* bad, Py_ssize_t w, double eps) nogil:
    # Welford one-pass variance over valid entries
    cdef Py_ssize_t j, n = 0
    cdef double mean = 0.0, m2 = 0.0, d
    for j in range(w):
        if bad != NULL and bad[j]:
            continue
        n += 1
        d = vals[j] - mean
        mean += d / n
        m2 += d * (vals[j] - mean)
    if n < 2:
        return 0
    if sqrt(m2 / (n - 1)) < eps:
        return 1
    return -1


def window_verdicts(readings, failed, double eps):
    cdef const double[:, ::1] r = np.ascontiguousarray(readings, dtype=np.float64)
    cdef const cnp.npy_bool[:, ::1] f = np.ascontiguousarray(failed, dtype=np.bool_).view(np.uint8)
    cdef Py_ssize_t n = r.shape[0], w = r.shape[1], i
    out = np.empty(n, dtype=np.int8)
    cdef int8_t[::1] o = out
    if w == 0:
        out[:] = 0
        return out
    with nogil:
        for i in range(n):
            o[i] = _verdict(&r[i, 0], &f[i, 0], w, eps)
    return out


def gaussian_window_verdicts(noise_keys, fail_keys, Py_ssize_t width, double mu,
                             double sigma, double fail_prob, double eps):
    cdef const uint64_t[::1] nk = np.ascontiguousarray(noise_keys, dtype=np.uint64)
    cdef const uint64_t[::1] fk = np.ascontiguousarray(fail_keys, dtype=np.uint64)
    cdef Py_ssize_t n = nk.shape[0], i, j
    out = np.empty(n, dtype=np.int8)
    cdef int8_t[::1] o = out
    if width == 0:
        out[:] = 0
        return out
    z_buf = np.empty(width)
    b_buf = np.zeros(width, dtype=np.uint8)
    cdef double[::1] z = z_buf
    cdef cnp.npy_bool[::1] b = b_buf
    with nogil:
        for i in range(n):
            _normals(nk[i], 0, width, &z[0])
            for j in range(width):
                z[j] = mu + sigma * z[j]
            if fail_prob > 0.0:
                for j in range(width):
                    b[j] = _unit(fk[i], j) < fail_prob
            o[i] = _verdict(&z[0], &b[0], width, eps)
    return out


def tally(x_out, p_out):
    cdef const int8_t[::1] xo = np.ascontiguousarray(x_out, dtype=np.int8)
    cdef const int8_t[::1] po = np.ascontiguousarray(p_out, dtype=np.int8)
    cdef Py_ssize_t i, n = xo.shape[0]
    cdef int64_t c[4]
    cdef int64_t bad = 0
    c[0] = c[1] = c[2] = c[3] = 0
    with nogil:
        for i in range(n):
            if xo[i] == 0 or po[i] == 0:
                bad += 1
            else:
                c[2 * (xo[i] < 0) + (po[i] < 0)] += 1
    counts = np.array([[c[0], c[1]], [c[2], c[3]]], dtype=np.int64)
    return counts, int(bad)


def photogate_transit(x, p, double width, double mass, double omega):
    cdef const double[::1] xs = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    cdef const double[::1] ps = np.ascontiguousarray(p, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t i, n = xs.shape[0]
    v_arr = np.empty(n)
    f_arr = np.zeros(n, dtype=np.bool_)
    cdef double[::1] v = v_arr
    cdef cnp.npy_bool[::1] f = f_arr.view(np.uint8)
    cdef double amp, lo, hi, half = 0.5 * width
    with nogil:
        for i in range(n):
            amp = hypot(xs[i], ps[i] / (mass * omega))
            lo = xs[i] - half
            hi = xs[i] + half
            if hi >= amp or lo <= -amp:
                f[i] = 1
                v[i] = NAN
            else:
                v[i] = copysign(width * omega / (acos(lo / amp) - acos(hi / amp)), ps[i])
    shape = np.shape(x)
    return v_arr.reshape(shape), f_arr.reshape(shape)
