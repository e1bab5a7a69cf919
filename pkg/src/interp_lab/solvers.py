"""Linear classifiers for overparameterized multiclass data.

* minimum-norm interpolation (closed form through the Gram pseudo-inverse)
* multiclass (Weston-Watkins) hard-margin SVM
* one-vs-all SVM with arbitrary (positive, negative) margins, which covers
  both the classic +-1 OvA machine and the simplex OvA variant
* one-vs-one SVM ensembles with majority voting

All max-margin problems are solved in the dual.  For the multiclass SVM the
dual is written in the per-column ``beta`` variables (``w_c = X beta_c``),
whose unconstrained maximiser is ``(X^T X)^+ z_c``; that point is used as a
warm start and, when it is feasible, it is already optimal.  Iterations run
on the equivalent non-negative multipliers, where the projection is a clip.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimMismatch, EmptyPair, NotSeparable, Unconverged

MNI = "MNI"
MULTICLASS_SVM = "MulticlassSVM"
SIMPLEX_OVA = "SimplexOvA"
OVA = "OvA"
OVO = "OvO"

DEFAULT_TOL = 1e-8
ACTIVE_TOL = 1e-6


@dataclass
class LinearClassifier:
    """Weights ``W`` (k x p) plus provenance.

    For ``kind == OvO`` the rows of ``W`` are the pairwise machines, in the
    order given by ``pairs``.
    """

    W: np.ndarray
    kind: str
    k: int
    diagnostics: dict = field(default_factory=dict)
    pairs: list | None = None

    def scores(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != self.W.shape[1]:
            raise DimMismatch(f"W has {self.W.shape[1]} columns, data has {X.shape[0]} rows")
        return self.W @ X

    def predict(self, X) -> np.ndarray:
        if self.kind == OVO:
            return ovo_vote(self.scores(X), self.pairs, self.k)
        return np.argmax(self.scores(X), axis=0)


@dataclass
class DualVariables:
    beta: np.ndarray  # k x n

    def multipliers(self, y) -> np.ndarray:
        """Original constraint multipliers ``lambda_{c,i} = -beta_{c,i}``
        (``c != y_i``); entries at ``c == y_i`` are zero."""
        lam = -self.beta.copy()
        lam[np.asarray(y), np.arange(lam.shape[1])] = 0.0
        return lam


def simplex_targets(Y) -> np.ndarray:
    """``Z = Y - 1/k``: entries (k-1)/k on the true class and -1/k elsewhere."""
    Y = np.asarray(Y, dtype=np.float64)
    k = Y.shape[0]
    return Y - 1.0 / k


def ovo_vote(pair_scores, pairs, k) -> np.ndarray:
    """Majority vote over pairwise decisions; ties go to the lowest class."""
    votes = np.zeros((k, pair_scores.shape[1]), dtype=np.int64)
    for row, (c, j) in enumerate(pairs):
        first = pair_scores[row] >= 0
        votes[c] += first
        votes[j] += ~first
    return np.argmax(votes, axis=0)


def _labels_from_onehot(Y) -> np.ndarray:
    Y = np.asarray(Y)
    if Y.ndim == 1:
        return Y.astype(np.int64)
    if not (np.all((Y == 0) | (Y == 1)) and np.all(Y.sum(axis=0) == 1)):
        raise ValueError("Y must be a valid one-hot matrix")
    return np.argmax(Y, axis=0)


# ---------------------------------------------------------------------------
# minimum-norm interpolation


def fit_mni_targets(X, T, gram_pinv: linalg.PseudoInverse | None = None, kind=MNI):
    """Min-norm ``W`` with ``X^T w_c = T[c]`` (least-squares if rank < n)."""
    X = linalg.as_matrix(X, "X")
    T = np.atleast_2d(np.asarray(T, dtype=np.float64))
    if T.shape[1] != X.shape[1]:
        raise DimMismatch(f"targets have {T.shape[1]} columns, X has {X.shape[1]}")
    Ainv = gram_pinv if gram_pinv is not None else linalg.pinv(linalg.gram(X))
    coef = Ainv.apply(T.T).T  # k x n
    W = coef @ X.T
    resid = float(np.abs(W @ X - T).max(initial=0.0))
    diag = {
        "rank": Ainv.rank,
        "rank_deficient": Ainv.rank < X.shape[1],
        "interp_residual": resid,
        "iterations": 0,
        "duality_gap": 0.0,
        "kkt_residual": 0.0,
    }
    return LinearClassifier(W, kind, T.shape[0], diag)


def fit_mni(X, Y, gram_pinv=None) -> LinearClassifier:
    """Min-norm interpolator of the one-hot labels."""
    return fit_mni_targets(X, Y, gram_pinv)


# ---------------------------------------------------------------------------
# non-negative QP core


@dataclass
class _QPResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool


def _kkt_residual(x, grad) -> float:
    # ascent gradient: optimal iff x >= 0, grad <= 0, x * grad == 0
    if x.size == 0:
        return 0.0
    return float(np.abs(np.minimum(x, -grad)).max())


def _polish(H, lin, support):
    idx = np.flatnonzero(support)
    x = np.zeros_like(lin)
    if idx.size == 0:
        return x
    sol, *_ = np.linalg.lstsq(H[np.ix_(idx, idx)], lin[idx], rcond=None)
    if np.any(sol < 0):
        return None
    x[idx] = sol
    return x


def solve_nonneg_qp(H, lin, x0=None, tol=DEFAULT_TOL, max_iters=10_000, blowup=1e12):
    """Maximise ``lin.x - x.H.x / 2`` over ``x >= 0``.

    Accelerated projected gradient with gradient-based restarts; whenever
    the support settles, the equality-constrained problem on that support
    is solved exactly and accepted if it certifies the KKT conditions.
    """
    m = lin.size
    x = np.zeros(m) if x0 is None else np.maximum(np.asarray(x0, dtype=np.float64), 0.0)
    grad = lin - H @ x
    best_x, best_res = x, _kkt_residual(x, grad)
    if best_res <= tol:
        return _QPResult(x, 0, best_res, True)

    L = linalg.spectral_norm_estimate(H)
    if L <= 0:
        raise NotSeparable("dual Hessian vanishes")
    step = 1.0 / L
    y, x_prev, t = x.copy(), x.copy(), 1.0
    last_support, stable_for, tried = None, 0, set()

    for it in range(1, max_iters + 1):
        gy = lin - H @ y
        x_new = np.maximum(y + step * gy, 0.0)
        if np.dot(gy, x_new - x_prev) < 0:  # restart momentum
            t = 1.0
            y = x_prev
            gy = lin - H @ y
            x_new = np.maximum(y + step * gy, 0.0)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x_prev)
        x_prev, t = x_new, t_new

        grad = lin - H @ x_new
        res = _kkt_residual(x_new, grad)
        if res < best_res:
            best_x, best_res = x_new, res
        if res <= tol:
            return _QPResult(x_new, it, res, True)
        if not np.isfinite(res) or np.abs(x_new).max(initial=0.0) > blowup:
            raise NotSeparable("dual iterates diverge; margin constraints look infeasible")

        support = x_new > 0
        key = support.tobytes()
        stable_for = stable_for + 1 if key == last_support else 0
        last_support = key
        if stable_for >= 5 and key not in tried:
            tried.add(key)
            cand = _polish(H, lin, support)
            if cand is not None:
                cres = _kkt_residual(cand, lin - H @ cand)
                if cres <= tol:
                    return _QPResult(cand, it, cres, True)
                if cres < best_res:
                    best_x, best_res = cand, cres
    return _QPResult(best_x, max_iters, best_res, False)


def _check_feasible(X, rows, targets_sign, targets):
    """LP feasibility of ``s_r * (a_r . w) >= s_r * t_r``; only needed when
    the Gram matrix is singular (otherwise interpolation is always possible)."""
    from scipy.optimize import linprog

    A_ub = -(targets_sign[:, None] * rows)
    b_ub = -(targets_sign * targets)
    res = linprog(np.zeros(rows.shape[1]), A_ub=A_ub, b_ub=b_ub, bounds=(None, None), method="highs")
    return res.status == 0


# ---------------------------------------------------------------------------
# multiclass SVM


def _multiclass_structure(y, k):
    n = y.size
    ii, cc = [], []
    for i in range(n):
        for c in range(k):
            if c != y[i]:
                ii.append(i)
                cc.append(c)
    ii = np.array(ii, dtype=np.int64)
    cc = np.array(cc, dtype=np.int64)
    U = np.zeros((ii.size, k))
    U[np.arange(ii.size), y[ii]] = 1.0
    U[np.arange(ii.size), cc] -= 1.0
    return ii, cc, U


def _beta_from_multipliers(lam, ii, cc, y, k, n):
    beta = np.zeros((k, n))
    np.add.at(beta, (cc, ii), -lam)
    np.add.at(beta, (y[ii], ii), lam)
    return beta


def fit_multiclass_svm(X, Y, tol=DEFAULT_TOL, max_iters=None, gram_pinv=None):
    """Hard-margin multiclass SVM ``min ||W||_F s.t. (w_{y_i}-w_c)^T x_i >= 1``.

    Returns ``(LinearClassifier, DualVariables)``.
    """
    X = linalg.as_matrix(X, "X")
    y = _labels_from_onehot(Y)
    k = int(np.asarray(Y).shape[0]) if np.asarray(Y).ndim == 2 else int(y.max()) + 1
    n = X.shape[1]
    if y.size != n:
        raise DimMismatch("labels do not match the columns of X")
    if max_iters is None:
        max_iters = 50 * n * k

    A = linalg.gram(X)
    Ainv = gram_pinv if gram_pinv is not None else linalg.pinv(A)
    ii, cc, U = _multiclass_structure(y, k)
    H = (U @ U.T) * A[np.ix_(ii, ii)]
    lin = np.ones(ii.size)

    if Ainv.rank < n and ii.size:
        rows = U[:, :, None] * X.T[ii][:, None, :]
        if not _check_feasible(X, rows.reshape(ii.size, -1), np.ones(ii.size), np.ones(ii.size)):
            raise NotSeparable("data are not multiclass linearly separable")

    Z = simplex_targets(np.eye(k)[:, y])
    beta_hat = Ainv.apply(Z.T).T
    lam0 = -beta_hat[cc, ii]

    res = solve_nonneg_qp(H, lin, lam0, tol=tol, max_iters=max_iters)
    lam = res.x
    beta = _beta_from_multipliers(lam, ii, cc, y, k, n)
    W = beta @ X.T
    diag = _svm_diagnostics(W, X, ii, U, lam, res)
    clf = LinearClassifier(W, MULTICLASS_SVM, k, diag)
    if not res.converged:
        raise Unconverged(
            f"multiclass SVM stopped after {res.iterations} iterations "
            f"(KKT residual {res.residual:.3e})",
            best=(clf, DualVariables(beta)),
            gap=diag["duality_gap"],
        )
    return clf, DualVariables(beta)


def _svm_diagnostics(W, X, ii, U, lam, res):
    margins = np.einsum("rk,kr->r", U, (W @ X)[:, ii]) if ii.size else np.zeros(0)
    sq = float(np.sum(W * W))
    primal = 0.5 * sq
    dual = float(lam.sum()) - 0.5 * sq
    slack = np.abs(lam * (margins - 1.0)).max(initial=0.0)
    return {
        "iterations": res.iterations,
        "kkt_residual": res.residual,
        "primal": primal,
        "dual": dual,
        "duality_gap": primal - dual,
        "min_margin": float(margins.min(initial=np.inf)),
        "complementary_slackness": float(slack),
        "converged": res.converged,
    }


# ---------------------------------------------------------------------------
# binary building block, OvA and OvO


def _fit_binary(A, X, positive, pos, neg, tol, max_iters, Ainv=None):
    """Min-norm ``w`` with ``w.x_i >= pos`` on positives, ``<= neg`` otherwise.

    ``w = X alpha``; ``x = sign * alpha >= 0`` is optimised.
    """
    n = positive.size
    sign = np.where(positive, 1.0, -1.0)
    target = np.where(positive, pos, neg)
    H = A * np.outer(sign, sign)
    lin = sign * target
    if Ainv is None:
        Ainv = linalg.pinv(A)
    if Ainv.rank < n:
        if not _check_feasible(X, X.T, sign, target):
            raise NotSeparable("binary subproblem is infeasible")
    x0 = sign * Ainv.apply(target)
    res = solve_nonneg_qp(H, lin, x0, tol=tol, max_iters=max_iters)
    alpha = sign * res.x
    w = X @ alpha
    out = X.T @ w
    viol = np.maximum(np.where(positive, pos - out, out - neg), 0.0)
    sq = float(w @ w)
    diag = {
        "iterations": res.iterations,
        "kkt_residual": res.residual,
        "duality_gap": sq - float(lin @ res.x),
        "max_violation": float(viol.max(initial=0.0)),
        "converged": res.converged,
    }
    return w, diag


def fit_ova_svm(X, Y, margins=(1.0, -1.0), tol=DEFAULT_TOL, max_iters=None):
    """k independent max-margin problems, class c against the rest."""
    X = linalg.as_matrix(X, "X")
    y = _labels_from_onehot(Y)
    k = np.asarray(Y).shape[0]
    n = X.shape[1]
    if max_iters is None:
        max_iters = 50 * n * 2
    pos, neg = margins
    A = linalg.gram(X)
    Ainv = linalg.pinv(A)
    W = np.zeros((k, X.shape[0]))
    per_class, failed = [], []
    for c in range(k):
        try:
            W[c], d = _fit_binary(A, X, y == c, pos, neg, tol, max_iters, Ainv)
        except NotSeparable:
            failed.append(c)
            continue
        per_class.append(d)
    if failed:
        raise NotSeparable(f"OvA subproblems infeasible for classes {failed}", classes=failed)
    kind = SIMPLEX_OVA if np.isclose(pos, (k - 1) / k) and np.isclose(neg, -1.0 / k) else OVA
    diag = {
        "iterations": int(sum(d["iterations"] for d in per_class)),
        "kkt_residual": max(d["kkt_residual"] for d in per_class),
        "duality_gap": float(sum(d["duality_gap"] for d in per_class)),
        "per_class": per_class,
        "margins": (pos, neg),
    }
    if not all(d["converged"] for d in per_class):
        clf = LinearClassifier(W, kind, k, diag)
        raise Unconverged("some OvA subproblems did not converge", best=clf, gap=diag["duality_gap"])
    return LinearClassifier(W, kind, k, diag)


def fit_simplex_ova_svm(X, Y, tol=DEFAULT_TOL, max_iters=None):
    k = np.asarray(Y).shape[0]
    return fit_ova_svm(X, Y, ((k - 1) / k, -1.0 / k), tol=tol, max_iters=max_iters)


def fit_ovo_svm(X, Y, tol=DEFAULT_TOL, max_iters=None):
    """k(k-1)/2 pairwise +-1 max-margin machines; predict by majority vote."""
    X = linalg.as_matrix(X, "X")
    y = _labels_from_onehot(Y)
    k = np.asarray(Y).shape[0]
    counts = np.bincount(y, minlength=k)
    if np.any(counts == 0):
        raise EmptyPair(f"classes without samples: {np.flatnonzero(counts == 0).tolist()}")
    pairs = list(itertools.combinations(range(k), 2))
    W = np.zeros((len(pairs), X.shape[0]))
    per_pair = []
    for row, (c, j) in enumerate(pairs):
        idx = np.flatnonzero((y == c) | (y == j))
        Xs = X[:, idx]
        budget = max_iters if max_iters is not None else 100 * idx.size
        W[row], d = _fit_binary(linalg.gram(Xs), Xs, y[idx] == c, 1.0, -1.0, tol, budget)
        per_pair.append(d)
    diag = {
        "iterations": int(sum(d["iterations"] for d in per_pair)),
        "kkt_residual": max(d["kkt_residual"] for d in per_pair),
        "duality_gap": float(sum(d["duality_gap"] for d in per_pair)),
        "per_pair": per_pair,
    }
    return LinearClassifier(W, OVO, k, diag, pairs=pairs)
