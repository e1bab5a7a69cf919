"""Single-shot artifacts: the inner-product bar data, classifier exports,
det-con dumps and threshold-constant calibration."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .. import solvers
from ..datagen import BilevelParams, GmmSpec, bilevel_spectrum, orthogonal_means, sample_gmm
from ..equivalence import DetConReport, effective_dims
from ..rng import Stream

BAR_K, BAR_N, BAR_P, BAR_MU_SCALE = 4, 50, 1000, 0.2
BAR_PER_CLASS = 2
BAR_COLUMNS = ("sample", "label", "class", "inner_product", "target")


def barplot_rows(seed: int = 0) -> list[dict]:
    """``w_c^T x_i`` for the first two training samples of every class."""
    spec = GmmSpec(orthogonal_means(BAR_K, BAR_P, BAR_MU_SCALE * math.sqrt(BAR_P)))
    ds = sample_gmm(spec, BAR_N, Stream(int(seed)))
    svm, _ = solvers.fit_multiclass_svm(ds.X, ds.Y)
    chosen = [int(i) for c in range(BAR_K) for i in np.flatnonzero(ds.y == c)[:BAR_PER_CLASS]]
    inner = svm.W @ ds.X[:, chosen]
    rows = []
    for col, i in enumerate(chosen):
        for c in range(BAR_K):
            target = (BAR_K - 1) / BAR_K if c == ds.y[i] else -1.0 / BAR_K
            rows.append({"sample": i, "label": int(ds.y[i]), "class": c,
                         "inner_product": float(inner[c, col]), "target": target})
    return rows


def repro_barplot(seed: int = 0, out="barplot.csv") -> Path:
    path = Path(out)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BAR_COLUMNS)
        for r in barplot_rows(seed):
            w.writerow([r["sample"], r["label"], r["class"], f"{r['inner_product']:.17g}", f"{r['target']:.17g}"])
    return path


def export_classifier(clf: solvers.LinearClassifier, out, tol=None, seed=None) -> tuple[Path, Path]:
    """Weights as CSV (one row per class, or per pair for OvO) plus a JSON
    sidecar with kind, shape, tolerance, data seed and solver diagnostics."""
    out = Path(out)
    np.savetxt(out, clf.W, delimiter=",", fmt="%.17g")
    diag = clf.diagnostics
    meta = {
        "kind": clf.kind,
        "k": clf.k,
        "p": int(clf.W.shape[1]),
        "pairs": _jsonable(clf.pairs),
        "tol": tol,
        "seed": seed,
        "iterations": _jsonable(diag.get("iterations")),
        "duality_gap": _jsonable(diag.get("duality_gap")),
        "kkt_residual": _jsonable(diag.get("kkt_residual")),
        "diagnostics": _jsonable(diag),
    }
    side = out.with_suffix(".json")
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return out, side


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        return None if math.isnan(v) else float(v)
    return v


def dump_det_con(report: DetConReport, out) -> Path:
    """All ``k * n`` det-con products, one ``class,sample,value`` row each."""
    path = Path(out)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["class", "sample", "value"])
        for c, i, v in report.rows():
            w.writerow([c, i, f"{v:.17g}"])
    return path


def _condition_terms(row) -> tuple[float, float, float, float]:
    """``(a1, T1, a2, T2)`` such that the sufficient condition reads
    ``a1 > C1 * T1 and a2 > C2 * T2`` for this grid point."""
    n, p, k = int(row["n"]), int(row["p"]), int(row["k"])
    log_kn = math.log(k * n)
    if row["model"] == "gmm":
        return p - n + 1.0, k**3 * n * log_kn, float(p), k**1.5 * n**1.5 * float(row["mu_norm"])
    if row.get("m", "") != "":
        lam = bilevel_spectrum(BilevelParams(n, float(row["m"]), float(row["q"]), float(row["r"])))
        d2, dinf = effective_dims(lam)
    else:
        d2 = dinf = float(p)
    return dinf, k * k * n * log_kn, d2, log_kn + n


def calibrate_constants(rows: list[dict], grid=None) -> dict:
    """Least conservative ``(C1, C2)`` with no counterexample on the data.

    A grid point counts as passing when every trial passed det-con.  For each
    candidate ``C1`` the smallest ``C2`` excluding all failing points that
    the first condition lets through is computed; among these pairs the one
    certifying the most passing points wins (ties go to the larger ``C1``).
    """
    points = _point_pass(rows)
    if not points:
        raise ValueError("no rows with a det-con verdict")
    if grid is None:
        grid = np.logspace(-4, 1, 101)
    best = None
    for C1 in grid:
        c2_min = 0.0
        for (a1, t1, a2, t2), ok in points.items():
            if not ok and a1 > C1 * t1:
                c2_min = max(c2_min, a2 / t2)
        C2 = c2_min * (1 + 1e-9)
        covered = sum(ok and a1 > C1 * t1 and a2 > C2 * t2 for (a1, t1, a2, t2), ok in points.items())
        if best is None or covered >= best["covered"]:
            best = {"C1": float(C1), "C2": float(C2), "covered": int(covered)}
    best["passing_points"] = int(sum(points.values()))
    best["points"] = len(points)
    return best


def _point_pass(rows) -> dict:
    out: dict = {}
    for r in rows:
        if r.get("det_con", "") == "" or r.get("p", "") == "":
            continue
        key = _condition_terms(r)
        out[key] = out.get(key, True) and r["det_con"] == "1"
    return out
