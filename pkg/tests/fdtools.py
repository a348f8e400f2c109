"""Finite-difference oracles shared by the unit and acceptance suites."""

import numpy as np

from v2gopt.icnn import picnn_forward_batch


def fd_weight_grads(weights, X, Y, upstream, h=1e-5):
    """Central finite differences of sum_b upstream[b] * f(x_b, y_b)
    with respect to every parameter array."""
    upstream = np.asarray(upstream, dtype=float)

    def loss():
        return float(upstream @ picnn_forward_batch(weights, X, Y))

    grads = {}
    for name, arr in weights.param_items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            hi = loss()
            flat[j] = orig - h
            lo = loss()
            flat[j] = orig
            gflat[j] = (hi - lo) / (2.0 * h)
        grads[name] = g
    return grads


def fd_grad_y(weights, X, Y, upstream, h=1e-5):
    """Central finite differences of the same weighted sum w.r.t. each
    y entry; returns an array of Y's shape."""
    upstream = np.asarray(upstream, dtype=float)
    Y = np.array(Y, dtype=float)
    g = np.zeros_like(Y)
    for b in range(Y.shape[0]):
        for j in range(Y.shape[1]):
            orig = Y[b, j]
            Y[b, j] = orig + h
            hi = float(upstream @ picnn_forward_batch(weights, X, Y))
            Y[b, j] = orig - h
            lo = float(upstream @ picnn_forward_batch(weights, X, Y))
            Y[b, j] = orig
            g[b, j] = (hi - lo) / (2.0 * h)
    return g


def flatten_grads(grads, order):
    return np.concatenate([np.asarray(grads[name]).ravel() for name in order])


def norm_relative_error(analytic, reference):
    """Vector-level relative error: ||a - r|| / max(||r||, tiny)."""
    a = np.asarray(analytic, dtype=float).ravel()
    r = np.asarray(reference, dtype=float).ravel()
    denom = max(float(np.linalg.norm(r)), 1e-12)
    return float(np.linalg.norm(a - r)) / denom
