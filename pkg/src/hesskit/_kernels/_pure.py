"""Pure numpy implementations of the per-step hot kernels.

Same call signatures as the compiled twin in ``_cyk.pyx``; the backend is
picked in ``__init__``.
"""

import numpy as np


def trapezoid_mu(x, a, b, c, d):
    """Membership of x under the trapezoid (a, b, c, d); corners may repeat."""
    if x < a or x > d:
        return 0.0
    if x < b:
        return (x - a) / (b - a)
    if x <= c:
        return 1.0
    if d == c:
        return 1.0
    return (d - x) / (d - c)


def mamdani_centroid(in_mfs, rule_ant, rule_out, out_mu, grid, x0, x1, x2):
    """Min-max Mamdani inference with centroid defuzzification.

    in_mfs:   (n_mfs, 4) trapezoid corners for the input terms
    rule_ant: (n_rules, 3) int32 indices into in_mfs, -1 = input absent
    rule_out: (n_rules,) int32 indices into out_mu rows
    out_mu:   (n_out, G) output-term memberships pre-sampled on grid
    grid:     (G,) defuzzification abscissae
    Returns the centroid, or nan when no rule fires.
    """
    x = (x0, x1, x2)
    n_out = out_mu.shape[0]
    fire = np.zeros(n_out)
    for r in range(rule_ant.shape[0]):
        w = 1.0
        for j in range(3):
            k = rule_ant[r, j]
            if k < 0:
                continue
            mu = trapezoid_mu(x[j], in_mfs[k, 0], in_mfs[k, 1], in_mfs[k, 2], in_mfs[k, 3])
            if mu < w:
                w = mu
        o = rule_out[r]
        if w > fire[o]:
            fire[o] = w
    agg = np.zeros(grid.shape[0])
    for o in range(n_out):
        if fire[o] > 0.0:
            np.maximum(agg, np.minimum(fire[o], out_mu[o]), out=agg)
    den = np.trapezoid(agg, grid)
    if den <= 0.0:
        return float("nan")
    num = np.trapezoid(agg * grid, grid)
    return float(num / den)


def sg_fit_eval(y, proj, hat):
    """Evaluate one windowed least-squares fit.

    y:    (n,) window samples
    proj: (k, n) precomputed pseudo-inverse of the design matrix
    hat:  (n, n) precomputed prediction (hat) matrix
    Returns (coeffs, predictions, ss_res, ss_tot).
    """
    coeffs = proj @ y
    yhat = hat @ y
    resid = y - yhat
    ss_res = float(resid @ resid)
    dev = y - y.mean()
    ss_tot = float(dev @ dev)
    return coeffs, yhat, ss_res, ss_tot
