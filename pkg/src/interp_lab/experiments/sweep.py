"""Sweep engine: one CSV row per (grid point, trial), written in order.

Rows are appended and flushed as soon as every earlier row is done, so an
interrupted sweep leaves a valid prefix; rerunning the same config resumes
after the last complete row.  Trials run on a thread pool (the heavy lifting
is BLAS/LAPACK, which releases the GIL) capped by ``INTERP_LAB_THREADS``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .. import equivalence, linalg, metrics, solvers
from ..datagen import (
    BilevelParams,
    GmmSpec,
    bilevel_mlm_spec,
    isotropic_mlm_spec,
    neural_collapse_features,
    orthogonal_means,
    sample_gmm,
    sample_mlm,
)
from ..errors import InterpLabError
from ..rng import Stream, derive_seed
from .config import SweepConfig, resolve_mu_norm

log = logging.getLogger(__name__)

COLUMNS = (
    "experiment", "point", "trial", "seed", "model",
    "n", "p", "k", "mu_norm", "m", "q", "r",
    "rescale_signal", "rescale_k2", "rescale_k1",
    "status", "message",
    "det_con", "det_con_min", "interp_fraction", "svm_equals_mni", "decision_agreement",
    "weight_gap", "duality_gap", "svm_iterations",
    "err_total", "err_class", "err_se", "err_mni_total", "bayes_error",
    "bound_rate", "pairwise_bound", "wall_time",
)
SUMMARY_FIELDS = (
    "det_con", "interp_fraction", "svm_equals_mni", "err_total", "err_mni_total",
    "bound_rate", "pairwise_bound",
)


def thread_count() -> int:
    raw = os.environ.get("INTERP_LAB_THREADS", "")
    try:
        cap = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        cap = 1
    return max(1, cap)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "" if math.isnan(value) else f"{float(value):.17g}"
    return str(value)


def rescale_columns(n, p, k, mu_norm) -> dict:
    """Axes under which support-fraction curves should collapse."""
    kn_log = n * math.log(k * n)
    return {
        "rescale_signal": k**1.5 * n**1.5 * mu_norm / p if not math.isnan(mu_norm) else math.nan,
        "rescale_k2": k * k * kn_log / p,
        "rescale_k1": k * kn_log / p,
    }


def _dataset_for(cfg: SweepConfig, point: dict, stream: Stream):
    k, n = int(point["k"]), int(point["n"])
    if cfg.model == "gmm":
        p = int(point["p"])
        mu = resolve_mu_norm(point, p)
        spec = GmmSpec(orthogonal_means(k, p, mu))
        return sample_gmm(spec, n, stream, balanced=cfg.balanced), spec, {"p": p, "mu_norm": mu}
    if cfg.model == "mlm":
        if "m" in point:
            params = BilevelParams(n, float(point["m"]), float(point["q"]), float(point["r"]))
            spec = bilevel_mlm_spec(k, params)
            mu = float(np.linalg.norm(spec.means[:, 0]))
            extra = {"p": params.p, "mu_norm": mu, "m": params.m, "q": params.q, "r": params.r}
        else:
            p = int(point["p"])
            mu = resolve_mu_norm(point, p)
            spec = isotropic_mlm_spec(k, p, mu)
            extra = {"p": p, "mu_norm": mu}
        return sample_mlm(spec, n, stream), spec, extra
    p = int(point["p"])
    ds = neural_collapse_features(k, n // k, p)
    return ds, None, {"p": p, "mu_norm": 1.0}


def run_trial(cfg: SweepConfig, point_idx: int, trial: int, point: dict) -> dict:
    """Everything for one (point, trial); failures land in ``status``."""
    started = time.perf_counter()
    seed = derive_seed(cfg.base_seed, point_idx, trial)
    row = {c: None for c in COLUMNS}
    row.update(experiment=cfg.experiment, point=point_idx, trial=trial, seed=seed, model=cfg.model)
    row.update(n=int(point["n"]), k=int(point["k"]), status="ok", message="")
    try:
        ds, spec, extra = _dataset_for(cfg, point, Stream(cfg.base_seed, point_idx, trial))
        row.update(extra)
        row.update(rescale_columns(ds.n, ds.p, ds.k, row["mu_norm"]))
        _evaluate(cfg, ds, spec, row, Stream(cfg.base_seed, point_idx, trial, 1))
    except (InterpLabError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        row["status"] = type(exc).__name__
        row["message"] = str(exc).replace("\n", " ")
        log.warning("point %d trial %d failed: %s", point_idx, trial, exc)
    if cfg.timing:
        row["wall_time"] = time.perf_counter() - started
    return row


def _evaluate(cfg, ds, spec, row, test_stream):
    Ainv = linalg.pinv(linalg.gram(ds.X))
    Y = ds.Y
    det = equivalence.check_det_condition(ds.X, Y, gram_pinv=Ainv)
    row.update(det_con=det.verdict, det_con_min=det.min_value)
    mni = solvers.fit_mni(ds.X, Y, Ainv)
    try:
        svm, _ = solvers.fit_multiclass_svm(ds.X, Y, tol=cfg.solver_tol, gram_pinv=Ainv)
    except solvers.Unconverged as exc:
        row.update(status="Unconverged", message=str(exc))
        if exc.best is None:
            return
        svm = exc.best[0]
    eq = equivalence.certify_equivalence(ds.X, Y, svm=svm, solver_tol=cfg.solver_tol)
    row.update(
        interp_fraction=equivalence.interpolation_fraction(svm, ds.X, Y, cfg.interp_tol).fraction,
        svm_equals_mni=eq.svm_equals_mni,
        decision_agreement=eq.decision_agreement,
        weight_gap=eq.max_weight_gap,
        duality_gap=svm.diagnostics.get("duality_gap"),
        svm_iterations=svm.diagnostics.get("iterations"),
    )
    C = cfg.constants
    if cfg.model == "gmm":
        row["bound_rate"] = metrics.gmm_bound_rate(
            ds.n, ds.p, ds.k, row["mu_norm"], C.get("C1", 1.0), C.get("C2", 1.0), C.get("C3", 1.0), C.get("C4", 1.0)
        )
    if cfg.n_test <= 0 or spec is None:
        return
    if cfg.model == "gmm":
        est, est_mni = metrics.mc_errors([svm, mni], spec, cfg.n_test, test_stream)
        q = metrics.gmm_pairwise_q_bound(svm, spec.means)
        row["pairwise_bound"] = float(np.sum(spec.priors * q))
    else:
        est, est_mni, bayes = metrics.mc_errors([svm, mni, spec.means.T], spec, cfg.n_test, test_stream)
        row["bayes_error"] = bayes.total
        row["pairwise_bound"] = metrics.mlm_pairwise_bound(svm, spec.means, spec.spectrum)
    row.update(
        err_total=est.total,
        err_class=";".join(_fmt(v) for v in est.per_class),
        err_se=est.se_total,
        err_mni_total=est_mni.total,
    )


def _completed_rows(path: Path) -> int:
    """Count complete data rows and drop any torn trailing line."""
    if not path.exists():
        return -1
    data = path.read_bytes()
    if not data:
        return -1
    if not data.endswith(b"\n"):
        data = data[: data.rfind(b"\n") + 1]
        path.write_bytes(data)
    lines = data.decode().splitlines()
    if not lines or lines[0] != ",".join(COLUMNS):
        raise InterpLabError(f"{path} exists with a different header; refusing to append")
    return len(lines) - 1


def run_sweep(cfg: SweepConfig, output=None, threads: int | None = None) -> Path:
    """Run (or resume) a sweep; returns the CSV path.  A per-point summary
    lands next to it as ``<name>.summary.json``."""
    path = Path(output or cfg.output)
    path.parent.mkdir(parents=True, exist_ok=True)
    jobs = [(pi, t, pt) for pi, pt in enumerate(cfg.points()) for t in range(cfg.trials)]
    done = _completed_rows(path)
    if done < 0:
        path.write_text(",".join(COLUMNS) + "\n")
        done = 0
    pending = jobs[done:]
    if done:
        log.info("resuming %s after %d completed trials", path, done)
    workers = min(threads or thread_count(), max(1, len(pending)))
    with open(path, "a", newline="") as fh:
        if workers == 1:
            for job in pending:
                _append(fh, run_trial(cfg, *job))
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(run_trial, cfg, *job) for job in pending]
                for fut in futures:  # completion order never leaks into the file
                    _append(fh, fut.result())
    write_summary(path, cfg)
    return path


def _append(fh, row: dict) -> None:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(_fmt(row[c]) for c in COLUMNS)
    fh.write(buf.getvalue())
    fh.flush()


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(rows: list[dict]) -> list[dict]:
    """Per-point mean and (population) std of the summary fields."""
    groups: dict[int, list[dict]] = {}
    for row in rows:
        groups.setdefault(int(row["point"]), []).append(row)
    out = []
    for point in sorted(groups):
        members = groups[point]
        first = members[0]
        entry = {key: first.get(key, "") for key in ("n", "p", "k", "mu_norm", "m", "q", "r",
                                                     "rescale_signal", "rescale_k2", "rescale_k1")}
        entry.update(point=point, trials=len(members), failures=sum(r["status"] != "ok" for r in members))
        for fld in SUMMARY_FIELDS:
            vals = [float(r[fld]) for r in members if r.get(fld, "") != ""]
            entry[fld] = {"mean": float(np.mean(vals)), "std": float(np.std(vals))} if vals else None
        out.append(entry)
    return out


def write_summary(path, cfg: SweepConfig | None = None) -> Path:
    path = Path(path)
    target = path.with_suffix(".summary.json")
    payload = {"points": summarize(read_rows(path))}
    if cfg is not None:
        payload["config"] = json.loads(cfg.to_json())
    target.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return target
