# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot kernels in ``_pure``; see that module for docs."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _trap_mu(double x, double a, double b, double c, double d) nogil:
    if x < a or x > d:
        return 0.0
    if x < b:
        return (x - a) / (b - a)
    if x <= c:
        return 1.0
    if d == c:
        return 1.0
    return (d - x) / (d - c)


def trapezoid_mu(double x, double a, double b, double c, double d):
    return _trap_mu(x, a, b, c, d)


def mamdani_centroid(double[:, ::1] in_mfs, int[:, ::1] rule_ant, int[::1] rule_out,
                     double[:, ::1] out_mu, double[::1] grid,
                     double x0, double x1, double x2):
    cdef int n_rules = rule_ant.shape[0]
    cdef int n_out = out_mu.shape[0]
    cdef int g = grid.shape[0]
    cdef int r, j, k, o, i
    cdef double w, mu, xi
    cdef double[3] x
    x[0] = x0
    x[1] = x1
    x[2] = x2

    cdef double[::1] fire = np.zeros(n_out)
    for r in range(n_rules):
        w = 1.0
        for j in range(3):
            k = rule_ant[r, j]
            if k < 0:
                continue
            mu = _trap_mu(x[j], in_mfs[k, 0], in_mfs[k, 1], in_mfs[k, 2], in_mfs[k, 3])
            if mu < w:
                w = mu
        o = rule_out[r]
        if w > fire[o]:
            fire[o] = w

    cdef double[::1] agg = np.zeros(g)
    cdef double f, m
    for o in range(n_out):
        f = fire[o]
        if f <= 0.0:
            continue
        for i in range(g):
            m = out_mu[o, i]
            if m > f:
                m = f
            if m > agg[i]:
                agg[i] = m

    # trapezoidal quadrature for the centroid (uniform or not)
    cdef double num = 0.0, den = 0.0, h
    for i in range(g - 1):
        h = grid[i + 1] - grid[i]
        den += 0.5 * h * (agg[i] + agg[i + 1])
        num += 0.5 * h * (agg[i] * grid[i] + agg[i + 1] * grid[i + 1])
    if den <= 0.0:
        return float("nan")
    return num / den


def sg_fit_eval(double[::1] y, double[:, ::1] proj, double[:, ::1] hat):
    cdef int n = y.shape[0]
    cdef int k = proj.shape[0]
    cdef int i, j
    cdef double acc, ybar, ss_res, ss_tot, d

    coeffs = np.empty(k)
    yhat = np.empty(n)
    cdef double[::1] cv = coeffs
    cdef double[::1] hv = yhat

    for i in range(k):
        acc = 0.0
        for j in range(n):
            acc += proj[i, j] * y[j]
        cv[i] = acc

    ybar = 0.0
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += hat[i, j] * y[j]
        hv[i] = acc
        ybar += y[i]
    ybar /= n

    ss_res = 0.0
    ss_tot = 0.0
    for i in range(n):
        d = y[i] - hv[i]
        ss_res += d * d
        d = y[i] - ybar
        ss_tot += d * d
    return coeffs, yhat, ss_res, ss_tot
