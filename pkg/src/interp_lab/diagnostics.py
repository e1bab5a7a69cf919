"""Leave-one-out quadratic forms of the Gram inverse under a Gaussian mixture.

For class ``j`` the mean component ``mu_j v_j^T`` is removed from ``X`` and
the Gram matrix ``A_{-j}`` of what remains is inverted directly.  With
``d_j = X_{-j}^T mu_j`` (equal to ``Q^T mu_j`` for orthogonal means)::

    s = v_j' A^-1 v_j     t = d_j' A^-1 d_j     h = v_j' A^-1 d_j
    g = v_j' A^-1 e_i     f = d_j' A^-1 e_i
    det = s (||mu_j||^2 - t) + (1 + h)^2

and the full-data form ``v_j' A_k^-1 e_i`` equals ``((1+h) g - s f) / det``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import linalg
from .datagen import GmmSpec, sample_gmm
from .errors import RankDeficient
from .rng import Stream


@dataclass
class QuadFormSet:
    j: int
    i: int
    s: float
    t: float
    h: float
    g: float
    f: float
    det: float
    g_full: float  # v_j' A_k^-1 e_i straight from the full Gram matrix

    @property
    def g_from_identity(self) -> float:
        return ((1.0 + self.h) * self.g - self.s * self.f) / self.det


def _loo_inverse(X, Y, means, j):
    mu = means[:, j]
    v = Y[j]
    X_loo = X - np.outer(mu, v)
    Ainv = linalg.pinv(linalg.gram(X_loo))
    if Ainv.rank < X.shape[1]:
        raise RankDeficient(f"leave-one-out Gram for class {j} has rank {Ainv.rank} < n={X.shape[1]}")
    d = X_loo.T @ mu
    return Ainv, v, d, float(mu @ mu)


def loo_quadforms_class(X, Y, means, j, full_inv=None) -> list[QuadFormSet]:
    """All ``n`` quadratic-form sets for one class ``j``."""
    X = linalg.as_matrix(X, "X")
    Y = np.asarray(Y, dtype=np.float64)
    means = np.asarray(means, dtype=np.float64)
    Ainv, v, d, mu_sq = _loo_inverse(X, Y, means, j)
    Av, Ad = Ainv.apply(v), Ainv.apply(d)
    s, t, h = float(v @ Av), float(d @ Ad), float(v @ Ad)
    det = s * (mu_sq - t) + (1.0 + h) ** 2
    if full_inv is None:
        full_inv = linalg.pinv(linalg.gram(X))
    g_full = full_inv.apply(v)
    return [
        QuadFormSet(j, i, s, t, h, float(Av[i]), float(Ad[i]), det, float(g_full[i]))
        for i in range(X.shape[1])
    ]


def loo_quadforms(X, Y, means, j: int, i: int) -> QuadFormSet:
    return loo_quadforms_class(X, Y, means, j)[i]


def s_after_adding_mean(s_kk, s_1k, s_11, h_k1, h_11, t_11, mu_sq) -> float:
    """One recursion step: ``v_k' A_1^-1 v_k`` from order-0 forms after the
    component ``mu_1 v_1'`` is added to the noise matrix."""
    det0 = s_11 * (mu_sq - t_11) + (h_11 + 1.0) ** 2
    star = (mu_sq - t_11) * s_1k**2 + 2 * s_1k * h_k1 * h_11 - s_11 * h_k1**2 + 2 * s_1k * h_k1
    return s_kk - star / det0


NORMALIZED = ("s_norm", "t_norm", "h_norm", "f_norm", "g_same_norm", "g_cross_norm")
CSV_COLUMNS = ("seed", "j", "i", "s", "t", "h", "g", "f", "det") + NORMALIZED


def normalized_row(q: QuadFormSet, y_i: int, n: int, p: int, k: int, mu_norm: float) -> dict:
    rho = min(1.0, math.sqrt(math.log(2 * n) / k))
    row = {
        "s_norm": q.s * k * p / n,
        "t_norm": q.t * p / (n * mu_norm**2) if mu_norm > 0 else math.nan,
        "h_norm": abs(q.h) * math.sqrt(k) * p / (n * mu_norm * rho) if mu_norm > 0 else math.nan,
        "f_norm": abs(q.f) * p / (math.sqrt(n) * mu_norm) if mu_norm > 0 else math.nan,
        "g_same_norm": q.g * p if q.j == y_i else math.nan,
        "g_cross_norm": abs(q.g) * k * k * p if q.j != y_i else math.nan,
    }
    return row


def lemma_order_check(spec: GmmSpec, n: int, seeds, out_csv=None, balanced: bool = False) -> list[dict]:
    """Per-seed normalised quadratic forms for every (j, i); optional CSV.

    ``balanced=True`` fixes the class sizes at ``n * prior`` instead of
    drawing labels i.i.d.
    """
    rows = []
    mu_norm = spec.mu_norm
    for seed in seeds:
        ds = sample_gmm(spec, n, Stream(int(seed)), balanced=balanced)
        Y = ds.Y
        full_inv = linalg.pinv(linalg.gram(ds.X))
        for j in range(spec.k):
            for q in loo_quadforms_class(ds.X, Y, spec.means, j, full_inv):
                row = {"seed": int(seed), **asdict(q)}
                row.pop("g_full")
                row.update(normalized_row(q, int(ds.y[q.i]), n, spec.p, spec.k, mu_norm))
                rows.append(row)
    if out_csv is not None:
        with open(Path(out_csv), "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: ("" if isinstance(v, float) and math.isnan(v) else v) for k, v in row.items()})
    return rows
