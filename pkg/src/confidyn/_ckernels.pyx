# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; mirror of ``_pykernels`` with identical arithmetic order."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint64_t
from libc.math cimport fabs
from libc.stdlib cimport malloc, free

cnp.import_array()

BACKEND = "cython"

cdef double _INV_2_53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = z + <uint64_t>0x9E3779B97F4A7C15ULL
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _derive(uint64_t key, uint64_t value) noexcept nogil:
    return _mix(key ^ _mix(value))


cdef inline double _sup(double[:, ::1] x, int64_t truth) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], kd = x.shape[1], j, c
    cdef double best = 0.0, v
    for j in range(n):
        if j == truth:
            continue
        for c in range(kd):
            v = fabs(x[j, c] - x[truth, c])
            if v > best:
                best = v
    return best


def sup_distance(x, int64_t truth):
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    if xv.shape[0] <= 1:
        return 0.0
    return _sup(xv, truth)


cdef void _step(double[:, ::1] x, double[::1] w, int64_t[:, ::1] nb,
                int64_t[::1] dg, double[:, ::1] buf) noexcept nogil:
    cdef Py_ssize_t n = x.shape[0], kd = x.shape[1], i, c, k
    cdef int64_t d
    cdef double s, wi
    for i in range(n):
        d = dg[i]
        if d == 0:
            continue
        wi = w[i]
        for c in range(kd):
            s = wi * x[i, c]
            for k in range(d):
                s = s + x[nb[i, k], c]
            buf[i, c] = s / (wi + <double>d)
    for i in range(n):
        d = dg[i]
        if d == 0:
            continue
        for c in range(kd):
            x[i, c] = buf[i, c]
        w[i] = w[i] + <double>d


def step_padded(double[:, ::1] x, double[::1] w, int64_t[:, ::1] nbr_p, int64_t[::1] deg_p):
    cdef double[:, ::1] buf = np.empty_like(np.asarray(x))
    with nogil:
        _step(x, w, nbr_p, deg_p, buf)


def run_schedule(double[:, ::1] x, double[::1] w, int64_t[:, :, ::1] nbr,
                 int64_t[:, ::1] deg, int64_t t0, int64_t steps,
                 record_times, int64_t truth):
    cdef int64_t[::1] rec = np.ascontiguousarray(record_times, dtype=np.int64)
    cdef Py_ssize_t nrec = rec.shape[0], ri = 0
    out_arr = np.full(nrec, np.nan)
    cdef double[::1] out = out_arr
    cdef double[:, ::1] buf = np.empty_like(np.asarray(x))
    cdef int64_t period = nbr.shape[0], step, t
    cdef bint single = x.shape[0] <= 1
    with nogil:
        while ri < nrec and rec[ri] < t0:
            ri += 1
        for step in range(steps + 1):
            t = t0 + step
            while ri < nrec and rec[ri] == t:
                out[ri] = 0.0 if single else _sup(x, truth)
                ri += 1
            if step == steps:
                break
            _step(x, w, nbr[t % period], deg[t % period], buf)
    return out_arr


cdef void _draw(uint64_t key_t, int64_t i, int64_t d, int64_t n,
                int64_t* pool, int64_t* swaps) noexcept nogil:
    cdef uint64_t ki = _derive(key_t, <uint64_t>i)
    cdef int64_t k, j, tmp
    cdef double u
    for k in range(d):
        u = <double>(_derive(ki, <uint64_t>k) >> 11) * _INV_2_53
        j = k + <int64_t>(u * <double>(n - k))
        tmp = pool[k]
        pool[k] = pool[j]
        pool[j] = tmp
        swaps[k] = j


cdef void _undo(int64_t d, int64_t* pool, int64_t* swaps) noexcept nogil:
    cdef int64_t k, j, tmp
    for k in range(d - 1, -1, -1):
        j = swaps[k]
        tmp = pool[k]
        pool[k] = pool[j]
        pool[j] = tmp


def sample_neighbors(uint64_t seed, int64_t t, int64_t n, degrees):
    cdef int64_t[::1] dg = np.ascontiguousarray(degrees, dtype=np.int64)
    cdef int64_t dmax = max(1, int(np.max(degrees)) if n else 1)
    out_arr = np.full((n, dmax), -1, dtype=np.int64)
    cdef int64_t[:, ::1] out = out_arr
    pool_arr = np.arange(n, dtype=np.int64)
    swaps_arr = np.zeros(max(n, 1), dtype=np.int64)
    cdef int64_t[::1] pool = pool_arr
    cdef int64_t[::1] swaps = swaps_arr
    cdef uint64_t key_t = _derive(seed, <uint64_t>t)
    cdef int64_t i, k
    if n == 0:
        return out_arr
    for i in range(n):
        if dg[i] == 0:
            continue
        _draw(key_t, i, dg[i], n, &pool[0], &swaps[0])
        for k in range(dg[i]):
            out[i, k] = pool[k]
        _undo(dg[i], &pool[0], &swaps[0])
    return out_arr


def run_random(double[:, :, ::1] x, w0, degrees, rep_seeds, int64_t t0,
               int64_t steps, record_times, int64_t truth):
    cdef int64_t[::1] dg = np.ascontiguousarray(degrees, dtype=np.int64)
    cdef uint64_t[::1] seeds = np.ascontiguousarray(rep_seeds, dtype=np.uint64)
    cdef int64_t[::1] rec = np.ascontiguousarray(record_times, dtype=np.int64)
    cdef double[::1] w_init = np.ascontiguousarray(w0, dtype=np.float64)
    cdef Py_ssize_t r = x.shape[0], n = x.shape[1], kd = x.shape[2]
    cdef Py_ssize_t nrec = rec.shape[0]
    out_arr = np.full((r, nrec), np.nan)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] w = np.empty(n)
    cdef double[:, ::1] buf = np.empty((n, kd))
    cdef int64_t[:, ::1] nb = np.empty((n, max(1, int(np.max(degrees)) if n else 1)), dtype=np.int64)
    cdef int64_t[::1] pool = np.arange(max(n, 1), dtype=np.int64)
    cdef int64_t[::1] swaps = np.zeros(max(n, 1), dtype=np.int64)
    cdef Py_ssize_t rep, ri, i, c, k
    cdef int64_t step, t, d
    cdef uint64_t key_t
    cdef double s, wi
    cdef bint single = n <= 1
    with nogil:
        for rep in range(r):
            for i in range(n):
                w[i] = w_init[i]
            ri = 0
            while ri < nrec and rec[ri] < t0:
                ri += 1
            for step in range(steps + 1):
                t = t0 + step
                while ri < nrec and rec[ri] == t:
                    out[rep, ri] = 0.0 if single else _sup(x[rep], truth)
                    ri += 1
                if step == steps:
                    break
                key_t = _derive(seeds[rep], <uint64_t>t)
                for i in range(n):
                    d = dg[i]
                    if d == 0:
                        continue
                    _draw(key_t, i, d, n, &pool[0], &swaps[0])
                    for k in range(d):
                        nb[i, k] = pool[k]
                    _undo(d, &pool[0], &swaps[0])
                    wi = w[i]
                    for c in range(kd):
                        s = wi * x[rep, i, c]
                        for k in range(d):
                            s = s + x[rep, nb[i, k], c]
                        buf[i, c] = s / (wi + <double>d)
                for i in range(n):
                    d = dg[i]
                    if d == 0:
                        continue
                    for c in range(kd):
                        x[rep, i, c] = buf[i, c]
                    w[i] = w[i] + <double>d
    return out_arr
