# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: leave-one-out Kaplan-Meier and weighted PAVA."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def loo_km(double[::1] time, long[::1] event, double[::1] eval_times):
    """Leave-one-out KM survival at ``eval_times``.

    ``time`` must be sorted ascending and ``eval_times`` ascending.
    Returns an (n, m) array; row i is the KM with subject i removed.
    """
    cdef Py_ssize_t n = time.shape[0]
    cdef Py_ssize_t m = eval_times.shape[0]
    cdef Py_ssize_t i, j, k, J, pos
    cdef double y, d, f, s, ti

    # distinct event times with risk-set sizes and event counts
    ev_t = []
    ev_d = []
    ev_y = []
    i = 0
    while i < n:
        j = i
        d = 0
        while j < n and time[j] == time[i]:
            d += event[j]
            j += 1
        if d > 0:
            ev_t.append(time[i])
            ev_d.append(d)
            ev_y.append(n - i)
        i = j
    J = len(ev_t)
    cdef double[::1] et = np.asarray(ev_t, dtype=np.float64)
    cdef double[::1] ed = np.asarray(ev_d, dtype=np.float64)
    cdef double[::1] ey = np.asarray(ev_y, dtype=np.float64)

    out_arr = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] out = out_arr

    for i in range(n):
        ti = time[i]
        s = 1.0
        j = 0
        for k in range(m):
            while j < J and et[j] <= eval_times[k]:
                y = ey[j]
                d = ed[j]
                if et[j] < ti:
                    y -= 1.0
                elif et[j] == ti:
                    y -= 1.0
                    d -= event[i]
                if y > 0:
                    s *= 1.0 - d / y
                j += 1
            out[i, k] = s
    return out_arr


def pava_nonincreasing(double[::1] values, double[::1] weights):
    """Weighted least-squares projection onto non-increasing sequences."""
    cdef Py_ssize_t n = values.shape[0]
    cdef Py_ssize_t i, b, top = 0
    mean_arr = np.empty(n, dtype=np.float64)
    wsum_arr = np.empty(n, dtype=np.float64)
    size_arr = np.empty(n, dtype=np.intp)
    cdef double[::1] mean = mean_arr
    cdef double[::1] wsum = wsum_arr
    cdef Py_ssize_t[::1] size = size_arr
    cdef double w

    for i in range(n):
        mean[top] = values[i]
        wsum[top] = weights[i]
        size[top] = 1
        top += 1
        while top > 1 and mean[top - 2] < mean[top - 1]:
            w = wsum[top - 2] + wsum[top - 1]
            mean[top - 2] = (wsum[top - 2] * mean[top - 2] + wsum[top - 1] * mean[top - 1]) / w
            wsum[top - 2] = w
            size[top - 2] += size[top - 1]
            top -= 1

    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    i = 0
    for b in range(top):
        for _ in range(size[b]):
            out[i] = mean[b]
            i += 1
    return out_arr
