"""Independent reference implementations used only by the tests.

None of these share code with the package: they work on the primal side or
with textbook loops so that agreement is meaningful.
"""

from __future__ import annotations

import itertools

import numpy as np


def gram_loops(X):
    p, n = X.shape
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for r in range(p):
                acc += X[r, i] * X[r, j]
            out[i, j] = acc
    return out


def multiclass_svm_active_set(X, y, k):
    """Exact hard-margin multiclass SVM by enumerating active sets.

    Constraints ``(w_{y_i} - w_c)^T x_i >= 1`` are rows ``a_r`` of a linear
    map on ``vec(W)``.  For every subset S the equality-constrained min-norm
    point ``W = sum_S lam_r a_r`` with ``A_S a_S^T lam = 1`` is a KKT point
    iff ``lam >= 0`` and every other constraint holds.  Returns the optimal
    ``(W, objective = ||W||_F^2)``.
    """
    p, n = X.shape
    rows = []
    for i in range(n):
        for c in range(k):
            if c == y[i]:
                continue
            a = np.zeros((k, p))
            a[y[i]] += X[:, i]
            a[c] -= X[:, i]
            rows.append(a.ravel())
    R = np.array(rows)
    best = None
    for size in range(1, len(rows) + 1):
        for S in itertools.combinations(range(len(rows)), size):
            RS = R[list(S)]
            G = RS @ RS.T
            lam, *_ = np.linalg.lstsq(G, np.ones(size), rcond=None)
            if np.abs(G @ lam - 1).max() > 1e-9 or lam.min() < -1e-10:
                continue
            w = RS.T @ lam
            if (R @ w).min() < 1 - 1e-9:
                continue
            obj = float(w @ w)
            if best is None or obj < best[1] - 1e-12:
                best = (w.reshape(k, p), obj)
    return best


def binary_svm_dual_coordinate(X, signs, sweeps=20000, tol=1e-13):
    """Hard-margin binary SVM without bias by dual coordinate ascent."""
    K = X.T @ X
    n = signs.size
    alpha = np.zeros(n)
    f = np.zeros(n)  # f_i = sum_j alpha_j s_j K_ij
    for _ in range(sweeps):
        biggest = 0.0
        for i in range(n):
            step = (1.0 - signs[i] * f[i]) / K[i, i]
            new = max(0.0, alpha[i] + step)
            delta = new - alpha[i]
            if delta:
                f += delta * signs[i] * K[:, i]
                alpha[i] = new
                biggest = max(biggest, abs(delta))
        if biggest < tol:
            break
    return X @ (alpha * signs)


def q_function(x):
    from math import erfc, sqrt

    return 0.5 * erfc(x / sqrt(2.0))
