"""Compiled inner loops for the tracker updates.

Each kernel takes the observed row indices ``idx`` (sorted) instead of a
mask, so work on the least-squares and PETRELS parts scales with the number
of observed entries. Status codes: 0 accepted, 1 rejected by the
lambda_min(X^T Omega X) guard, 2 rejected by the Oja Gram guard, 3 GROUSE
rotation degenerate.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ACCEPTED, GUARD_SKIP, GRAM_SKIP, DEGENERATE_SKIP = 0, 1, 2, 3


@njit(cache=True)
def masked_normal_equations(X, y, idx):
    d = X.shape[1]
    Z = np.zeros((d, d))
    b = np.zeros(d)
    for j in range(idx.shape[0]):
        i = idx[j]
        yi = y[i]
        for a in range(d):
            xa = X[i, a]
            b[a] += xa * yi
            for c in range(a + 1):
                Z[a, c] += xa * X[i, c]
    for a in range(d):
        for c in range(a):
            Z[c, a] = Z[a, c]
    return Z, b


@njit(cache=True)
def masked_lstsq(X, y, idx, eps):
    """Returns (w_hat, ok). ok is False when lambda_min(Z) <= eps."""
    d = X.shape[1]
    if idx.shape[0] == 0:
        return np.zeros(d), False
    Z, b = masked_normal_equations(X, y, idx)
    if np.linalg.eigvalsh(Z)[0] <= eps:
        return np.zeros(d), False
    return np.linalg.solve(Z, b), True


@njit(cache=True)
def oja_update(X, y, idx, tau, eps, eps_prime):
    n, d = X.shape
    w, ok = masked_lstsq(X, y, idx, eps)
    if not ok:
        return X, GUARD_SKIP
    # Imputed sample: observed entries from y, the rest from X w.
    y_hat = X @ w
    for j in range(idx.shape[0]):
        y_hat[idx[j]] = y[idx[j]]
    scale = tau / n
    X_t = np.empty((n, d))
    G = np.zeros((d, d))
    for i in range(n):
        s = scale * y_hat[i]
        for a in range(d):
            X_t[i, a] = X[i, a] + s * w[a]
        for a in range(d):
            xa = X_t[i, a]
            for c in range(a + 1):
                G[a, c] += xa * X_t[i, c]
    for a in range(d):
        for c in range(a):
            G[c, a] = G[a, c]
    mu, V = np.linalg.eigh(G)
    if mu[0] <= eps_prime:
        return X, GRAM_SKIP
    inv_sqrt = (V / np.sqrt(mu)) @ V.T
    return X_t @ inv_sqrt, ACCEPTED


@njit(cache=True)
def grouse_update(X, y, idx, tau, eps, tiny):
    n, d = X.shape
    w, ok = masked_lstsq(X, y, idx, eps)
    if not ok:
        return X, GUARD_SKIP
    p = X @ w
    r2 = 0.0
    for j in range(idx.shape[0]):
        e = y[idx[j]] - p[idx[j]]
        r2 += e * e
    p_norm = math.sqrt(np.dot(p, p))
    r_norm = math.sqrt(r2)
    w_norm = math.sqrt(np.dot(w, w))
    if p_norm < tiny or r_norm < tiny or w_norm < tiny:
        return X, DEGENERATE_SKIP
    theta = tau / n * r_norm * p_norm
    cp = (math.cos(theta) - 1.0) / p_norm
    cr = math.sin(theta) / r_norm
    w_unit = w / w_norm
    X_new = X.copy()
    # The p-part touches every row, the r-part only observed rows (r = y - Omega p).
    for i in range(n):
        s = cp * p[i]
        for a in range(d):
            X_new[i, a] += s * w_unit[a]
    for j in range(idx.shape[0]):
        i = idx[j]
        s = cr * (y[i] - p[i])
        for a in range(d):
            X_new[i, a] += s * w_unit[a]
    return X_new, ACCEPTED


@njit(cache=True)
def petrels_update(X, R, y, idx, gamma, alpha, eps):
    d = X.shape[1]
    w, ok = masked_lstsq(X, y, idx, eps)
    if not ok:
        return X, R, GUARD_SKIP, 1.0
    Rw = R @ w
    X_new = X.copy()
    for j in range(idx.shape[0]):
        i = idx[j]
        e = y[i]
        for a in range(d):
            e -= X[i, a] * w[a]
        for a in range(d):
            X_new[i, a] += e * Rw[a]
    v = Rw / gamma
    beta = 1.0 + alpha * np.dot(w, v)
    R_new = R / gamma
    if beta > 0.0:
        for a in range(d):
            for c in range(d):
                R_new[a, c] -= alpha * v[a] * v[c] / beta
    return X_new, R_new, ACCEPTED, beta


@njit(cache=True)
def fill_observed(U, c, noise, idx, sigma):
    """y with y[idx[j]] = U[idx[j]] . c + sigma * noise[j] and zeros elsewhere."""
    n, d = U.shape
    y = np.zeros(n)
    for j in range(idx.shape[0]):
        i = idx[j]
        acc = sigma * noise[j]
        for a in range(d):
            acc += U[i, a] * c[a]
        y[i] = acc
    return y
