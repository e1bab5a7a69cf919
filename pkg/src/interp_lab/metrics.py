"""Classification error: Monte Carlo estimates, analytic cross-checks and the
rate functions that accompany them.

Monte Carlo test streams are cut into fixed blocks of ``BLOCK`` points, each
drawn from its own derived stream, so an estimate depends only on
``(model, n_test, seed)`` and never on how the work is batched.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .datagen import GmmSpec, MlmSpec, BilevelParams, balanced_labels, softmax_cumulative
from .errors import ZeroSignal
from .rng import Stream
from .solvers import LinearClassifier

BLOCK = 1024


@dataclass
class ErrorEstimate:
    total: float
    per_class: np.ndarray
    n_test: int
    se_total: float
    se_class: np.ndarray


@dataclass
class SuCn:
    su: float
    cn: float


def predict(W, X) -> np.ndarray | int:
    """Winner-takes-all labels; ties resolve to the lowest class index."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[:, None]
    if isinstance(W, LinearClassifier):
        out = W.predict(X)
    else:
        out = np.argmax(np.asarray(W, dtype=np.float64) @ X, axis=0)
    return int(out[0]) if single else out


def q_function(x):
    """Gaussian upper tail ``P(Z > x)``."""
    return ndtr(-np.asarray(x, dtype=np.float64))


# ---------------------------------------------------------------------------
# test streams


def _gmm_blocks(spec: GmmSpec, n_test: int, seed):
    counts = np.bincount(balanced_labels(n_test, spec.priors), minlength=spec.k)
    base = Stream(*_parts(seed))
    for c in range(spec.k):
        for b, start in enumerate(range(0, counts[c], BLOCK)):
            m = min(BLOCK, counts[c] - start)
            noise = base.spawn(c, b).normal((m, spec.p)).T
            yield spec.means[:, [c]] + noise, np.full(m, c)


def _mlm_blocks(spec: MlmSpec, n_test: int, seed):
    base = Stream(*_parts(seed))
    sd = np.sqrt(spec.spectrum)
    for b, start in enumerate(range(0, n_test, BLOCK)):
        m = min(BLOCK, n_test - start)
        rs = base.spawn(b)
        X = (rs.normal((m, spec.p)) * sd).T
        y = rs.categorical(softmax_cumulative(spec.means.T @ X))
        yield X, y


def _parts(seed):
    if isinstance(seed, Stream):
        return seed.parts
    if isinstance(seed, (tuple, list)):
        return tuple(int(s) for s in seed)
    return (int(seed),)


def test_blocks(model, n_test: int, seed):
    if isinstance(model, GmmSpec):
        return _gmm_blocks(model, n_test, seed)
    if isinstance(model, MlmSpec):
        return _mlm_blocks(model, n_test, seed)
    raise TypeError(f"unsupported model {type(model).__name__}")


def _mistakes(classifiers, model, n_test, seed):
    """Per-classifier mistake indicators and the test labels, in stream order."""
    wrong = [[] for _ in classifiers]
    labels = []
    for X, y in test_blocks(model, n_test, seed):
        labels.append(y)
        for slot, clf in zip(wrong, classifiers):
            slot.append(predict(clf, X) != y)
    y = np.concatenate(labels) if labels else np.zeros(0, dtype=np.int64)
    return [np.concatenate(s) if s else np.zeros(0, bool) for s in wrong], y


def _estimate(wrong, y, model) -> ErrorEstimate:
    k = model.k
    per = np.full(k, np.nan)
    se = np.full(k, np.nan)
    counts = np.bincount(y, minlength=k)
    for c in range(k):
        if counts[c]:
            e = float(wrong[y == c].mean())
            per[c] = e
            se[c] = math.sqrt(e * (1 - e) / counts[c])
    if isinstance(model, GmmSpec):
        pri = model.priors
        mask = counts > 0
        total = float(np.sum(pri[mask] * per[mask]))
        se_total = float(math.sqrt(np.sum((pri[mask] * se[mask]) ** 2)))
    else:
        total = float(wrong.mean()) if wrong.size else math.nan
        se_total = math.sqrt(total * (1 - total) / wrong.size) if wrong.size else math.nan
    return ErrorEstimate(total, per, int(y.size), se_total, se)


def mc_error(W, model, n_test: int, seed) -> ErrorEstimate:
    """Monte Carlo class-wise and total error of ``W`` on fresh samples.

    GMM test sets are stratified (class sizes ``n_test * prior``); MLM test
    labels are drawn from the softmax posterior.
    """
    if n_test < 1:
        raise ValueError("n_test must be >= 1")
    (wrong,), y = _mistakes([W], model, n_test, seed)
    return _estimate(wrong, y, model)


def mc_errors(classifiers, model, n_test: int, seed) -> list[ErrorEstimate]:
    """Like ``mc_error`` for several classifiers on one shared test stream."""
    wrong, y = _mistakes(classifiers, model, n_test, seed)
    return [_estimate(w, y, model) for w in wrong]


def gmm_pairwise_q_bound(W, means) -> np.ndarray:
    """Per-class ``sum_{j != c} Q((w_c - w_j)^T mu_c / ||w_c - w_j||)``
    (isotropic unit-variance noise)."""
    W = W.W if isinstance(W, LinearClassifier) else np.asarray(W, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    k = W.shape[0]
    out = np.zeros(k)
    for c in range(k):
        for j in range(k):
            if j == c:
                continue
            diff = W[c] - W[j]
            norm = np.linalg.norm(diff)
            out[c] += 0.5 if norm == 0 else float(q_function(diff @ means[:, c] / norm))
    return out


# ---------------------------------------------------------------------------
# rate functions


def gmm_bound_rate(n, p, k, mu_norm, C1=1.0, C2=1.0, C3=1.0, C4=1.0) -> float:
    """Class-wise error rate function for the isotropic GMM (uncalibrated
    constants).  Returns 1 when the positivity condition fails.

    Non-increasing in ``mu_norm`` past the threshold.  In ``p`` (fixed ``n``)
    it is non-decreasing once ``mu_norm**2 <= k p / n`` and the inner term is
    at least ``4 C2 n mu_norm / p``; closer to the threshold the shrinking
    ``n / p`` penalty wins and the rate can fall as ``p`` grows.
    """
    inner = (1 - C1 / math.sqrt(n) - C2 * n / p) * mu_norm - C3 * min(
        math.sqrt(k), math.sqrt(math.log(2 * n))
    )
    if inner <= 0:
        return 1.0
    exponent = mu_norm**2 * inner**2 / (C4 * (1 + k * p / (n * mu_norm**2)))
    return float(min(1.0, max(0.0, (k - 1) * math.exp(-exponent))))


def su_cn(delta_hat, delta, spectrum) -> SuCn:
    """Survival and contamination of ``delta_hat`` against ``delta`` in the
    ``diag(spectrum)`` geometry."""
    root = np.sqrt(np.asarray(spectrum, dtype=np.float64))
    e_hat = root * np.asarray(delta_hat, dtype=np.float64)
    e = root * np.asarray(delta, dtype=np.float64)
    norm_e = float(np.linalg.norm(e))
    if norm_e == 0.0:
        raise ZeroSignal("Sigma^{1/2} delta is zero")
    su = float(e_hat @ e) / norm_e
    residual = e_hat - (su / norm_e) * e
    return SuCn(su, float(np.linalg.norm(residual)))


def sign_disagreement(su: float, cn: float) -> float:
    """``P(x.delta * x.delta_hat < 0) = 1/2 - arctan(su / cn) / pi``."""
    return 0.5 - math.atan2(su, cn) / math.pi


def mlm_pairwise_bound(W, means, spectrum) -> float:
    W = W.W if isinstance(W, LinearClassifier) else np.asarray(W, dtype=np.float64)
    total = 0.0
    for c1, c2 in itertools.combinations(range(W.shape[0]), 2):
        r = su_cn(W[c1] - W[c2], means[:, c1] - means[:, c2], spectrum)
        total += sign_disagreement(r.su, r.cn)
    return total


def mlm_excess_risk(W, spec: MlmSpec, n_test: int = 100_000, seed=0) -> dict:
    """Excess error over the Bayes rule ``w_c = mu_c`` on a shared stream.

    ``excess`` is reported raw (it can dip below zero from sampling noise);
    ``se`` is the paired standard error of the difference.
    """
    bayes_W = spec.means.T
    (w_wrong, b_wrong), y = _mistakes([W, bayes_W], spec, n_test, seed)
    diff = w_wrong.astype(float) - b_wrong.astype(float)
    se = float(diff.std(ddof=1) / math.sqrt(diff.size)) if diff.size > 1 else math.nan
    return {
        "error": float(w_wrong.mean()),
        "bayes": float(b_wrong.mean()),
        "excess": float(diff.mean()),
        "se": se,
        "pairwise_bound": mlm_pairwise_bound(W, spec.means, spec.spectrum),
    }


def bilevel_rate_exponents(params: BilevelParams) -> dict:
    """Polynomial exponents (in n) of survival, contamination and their ratio.

    Both regime branches agree at ``q = 1 - r``.  ``consistent`` is the
    benign-overfitting predicate ``q < (1 - r) + (m - 1) / 2``.
    """
    m, q, r = params.m, params.q, params.r
    if q < 1 - r:
        su_exp = 0.0
        cn_exp = -min(m - 1, 1 - r) / 2
    else:
        su_exp = (1 - r) - q
        cn_exp = -min(m - 1, 2 * q + r - 1) / 2
    return {
        "su_exponent": su_exp,
        "cn_exponent": cn_exp,
        "snr_exponent": su_exp - cn_exp,
        "regression_regime": q < 1 - r,
        "consistent": q < (1 - r) + (m - 1) / 2,
    }
