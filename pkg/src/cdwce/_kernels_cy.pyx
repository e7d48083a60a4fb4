# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled loss and silhouette kernels.

Same signatures and semantics as ``_kernels_py``; inputs are assumed
validated (C-contiguous float64, int64 labels in range).
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, fabs, pow, sqrt, INFINITY

cnp.import_array()

BACKEND = "cython"


cdef inline double _sigmoid(double x) nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def ce(const double[:, ::1] P, const long long[::1] y, double eps):
    cdef Py_ssize_t n = P.shape[0], K = P.shape[1], r
    cdef double pc
    vals_a = np.empty(n)
    G_a = np.zeros((n, K))
    cdef double[::1] vals = vals_a
    cdef double[:, ::1] G = G_a
    with nogil:
        for r in range(n):
            pc = P[r, y[r]]
            if pc < eps:
                pc = eps
            vals[r] = -log(pc)
            G[r, y[r]] = -1.0 / pc
    return vals_a, G_a


def cdw_ce(const double[:, ::1] P, const long long[::1] y, double alpha, double margin, double eps):
    cdef Py_ssize_t n = P.shape[0], K = P.shape[1], r, i
    cdef double w, q, acc
    cdef long long d
    vals_a = np.empty(n)
    G_a = np.zeros((n, K))
    cdef double[::1] vals = vals_a
    cdef double[:, ::1] G = G_a
    with nogil:
        for r in range(n):
            acc = 0.0
            for i in range(K):
                d = i - y[r]
                if d == 0:
                    continue
                w = pow(<double>(d if d > 0 else -d), alpha)
                q = P[r, i] + margin
                if q > 1.0 - eps:
                    q = 1.0 - eps
                acc = acc - w * log(1.0 - q)
                G[r, i] = w / (1.0 - q)
            vals[r] = acc
    return vals_a, G_a


def unimodal(const double[:, ::1] P, const long long[::1] y, double lam, double delta,
             bint use_entropy, double eps):
    cdef Py_ssize_t n = P.shape[0], K = P.shape[1], r, i, k
    cdef double acc, p, lp, a
    cdef long long c
    vals_a = np.empty(n)
    G_a = np.zeros((n, K))
    cdef double[::1] vals = vals_a
    cdef double[:, ::1] G = G_a
    with nogil:
        for r in range(n):
            c = y[r]
            acc = 0.0
            if use_entropy:
                for i in range(K):
                    p = P[r, i]
                    lp = log(p if p > eps else eps)
                    acc = acc - p * lp
                    G[r, i] = -(lp + 1.0) if p >= eps else -lp
            else:
                p = P[r, c]
                if p < eps:
                    p = eps
                acc = -log(p)
                G[r, c] = -1.0 / p
            if lam != 0.0:
                for k in range(K - 1):
                    if k >= c:
                        a = delta + P[r, k + 1] - P[r, k]
                        if a > 0:
                            acc = acc + lam * a
                            G[r, k + 1] += lam
                            G[r, k] -= lam
                    else:
                        a = delta + P[r, k] - P[r, k + 1]
                        if a > 0:
                            acc = acc + lam * a
                            G[r, k] += lam
                            G[r, k + 1] -= lam
            vals[r] = acc
    return vals_a, G_a


def corn(const double[:, ::1] L, const long long[::1] y):
    cdef Py_ssize_t n = L.shape[0], T = L.shape[1], r, k, ntask
    cdef double acc, l, t, e
    vals_a = np.empty(n)
    G_a = np.zeros((n, T))
    cdef double[::1] vals = vals_a
    cdef double[:, ::1] G = G_a
    with nogil:
        for r in range(n):
            ntask = y[r] + 1
            if ntask > T:
                ntask = T
            acc = 0.0
            for k in range(ntask):
                l = L[r, k]
                t = 1.0 if y[r] > k else 0.0
                e = exp(-fabs(l))
                acc = acc + log1p(e) + (l if l > 0 else 0.0) - t * l
                G[r, k] = (_sigmoid(l) - t) / ntask
            vals[r] = acc / ntask
    return vals_a, G_a


def mse_reg(const double[::1] raw, const long long[::1] y, long long n_classes):
    cdef Py_ssize_t n = raw.shape[0], r
    cdef double s, resid, scale = n_classes - 1.0
    vals_a = np.empty(n)
    g_a = np.empty(n)
    cdef double[::1] vals = vals_a
    cdef double[::1] g = g_a
    with nogil:
        for r in range(n):
            s = _sigmoid(raw[r])
            resid = s * scale - y[r]
            vals[r] = resid * resid
            g[r] = 2.0 * resid * scale * s * (1.0 - s)
    return vals_a, g_a


def softmax_backward(const double[:, ::1] P, const double[:, ::1] G):
    cdef Py_ssize_t n = P.shape[0], K = P.shape[1], r, i
    cdef double dot
    out_a = np.empty((n, K))
    cdef double[:, ::1] out = out_a
    with nogil:
        for r in range(n):
            dot = 0.0
            for i in range(K):
                dot = dot + P[r, i] * G[r, i]
            for i in range(K):
                out[r, i] = P[r, i] * (G[r, i] - dot)
    return out_a


def silhouette_samples(const double[:, ::1] X, const long long[::1] labels, Py_ssize_t n_clusters):
    cdef Py_ssize_t n = X.shape[0], dim = X.shape[1], i, j, f, c, own
    cdef double d, diff, a, b, m
    counts_a = np.bincount(np.asarray(labels), minlength=n_clusters).astype(np.float64)
    sums_a = np.zeros(n_clusters)
    out_a = np.zeros(n)
    cdef double[::1] counts = counts_a
    cdef double[::1] sums = sums_a
    cdef double[::1] out = out_a
    with nogil:
        for i in range(n):
            own = labels[i]
            if counts[own] <= 1:
                continue
            for c in range(n_clusters):
                sums[c] = 0.0
            for j in range(n):
                d = 0.0
                for f in range(dim):
                    diff = X[i, f] - X[j, f]
                    d = d + diff * diff
                sums[labels[j]] += sqrt(d)
            a = sums[own] / (counts[own] - 1.0)
            b = INFINITY
            for c in range(n_clusters):
                if c != own and counts[c] > 0:
                    m = sums[c] / counts[c]
                    if m < b:
                        b = m
            m = a if a > b else b
            out[i] = 0.0 if m == 0.0 else (b - a) / m
    return out_a
