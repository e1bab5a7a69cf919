import csv
import json

import numpy as np
import pytest

from interp_lab import cli
from interp_lab.errors import ConfigError, MissingColumn
from interp_lab.experiments import (
    COLUMNS,
    SweepConfig,
    barplot_rows,
    calibrate_constants,
    from_dict,
    load_config,
    plot_csv,
    preset,
    read_rows,
    repro_barplot,
    run_sweep,
)
from interp_lab.rng import derive_seed


def _cfg(tmp_path, **kw):
    base = dict(
        experiment="t",
        model="gmm",
        grid={"k": [3], "mu_scale": [0.3], "p": [80, 200], "n": [10]},
        trials=2,
        n_test=300,
        output=str(tmp_path / "s.csv"),
    )
    base.update(kw)
    return SweepConfig(**base)


def test_single_point_single_trial(tmp_path):
    cfg = _cfg(tmp_path, grid={"k": [3], "mu_scale": [0.3], "p": [80], "n": [10]}, trials=1)
    rows = read_rows(run_sweep(cfg))
    assert len(rows) == 1
    assert tuple(rows[0]) == COLUMNS
    assert rows[0]["seed"] == str(derive_seed(0, 0, 0))
    assert rows[0]["wall_time"] == ""


def test_sweep_is_byte_reproducible_and_thread_independent(tmp_path):
    a = run_sweep(_cfg(tmp_path), output=tmp_path / "a.csv", threads=1)
    b = run_sweep(_cfg(tmp_path), output=tmp_path / "b.csv", threads=3)
    assert a.read_bytes() == b.read_bytes()
    summary = json.loads(a.with_suffix(".summary.json").read_text())
    assert len(summary["points"]) == 2
    assert summary["points"][0]["interp_fraction"]["mean"] <= 1.0


def test_sweep_resumes_after_torn_write(tmp_path):
    full = run_sweep(_cfg(tmp_path), output=tmp_path / "full.csv")
    lines = full.read_text().splitlines(keepends=True)
    part = tmp_path / "part.csv"
    part.write_text("".join(lines[:3]) + lines[3][:20])
    run_sweep(_cfg(tmp_path), output=part)
    assert part.read_bytes() == full.read_bytes()


def test_sweep_records_failures_in_row(tmp_path):
    cfg = _cfg(tmp_path, model="mlm", grid={"k": [3], "m": [1.5], "q": [0.3], "r": [0.3], "n": [20]}, trials=1)
    rows = read_rows(run_sweep(cfg))
    assert rows[0]["status"] == "InvalidRegime" and "spiked" in rows[0]["message"]


def test_rescale_columns_and_models(tmp_path):
    rows = read_rows(run_sweep(_cfg(tmp_path, trials=1)))
    r = rows[0]
    n, p, k, mu = 10, 80, 3, float(r["mu_norm"])
    assert float(r["rescale_signal"]) == pytest.approx(k**1.5 * n**1.5 * mu / p)
    assert float(r["rescale_k2"]) == pytest.approx(k * k * n * np.log(k * n) / p)
    nc = read_rows(run_sweep(_cfg(tmp_path, model="nc", grid={"k": [3], "p": [6], "n": [6]}, trials=1,
                                  output=str(tmp_path / "nc.csv"))))
    assert nc[0]["det_con"] == "1" and nc[0]["svm_equals_mni"] == "1"
    mlm = read_rows(run_sweep(_cfg(tmp_path, model="mlm", grid={"k": [3], "mu_scale": [1.0], "p": [60], "n": [8]},
                                   trials=1, output=str(tmp_path / "mlm.csv"))))
    assert mlm[0]["bayes_error"] != "" and mlm[0]["pairwise_bound"] != ""


@pytest.mark.parametrize(
    "bad",
    [
        dict(model="svm"),
        dict(grid={}),
        dict(trials=0),
        dict(grid={"k": [3], "p": [80], "n": [10]}),
        dict(grid={"k": [3], "mu_scale": [0.3], "p": [2], "n": [10]}),
        dict(grid={"k": [3], "mu_scale": [0.3], "p": [80], "n": [10], "zeta": [1]}),
    ],
)
def test_config_validation(tmp_path, bad):
    with pytest.raises(ConfigError):
        _cfg(tmp_path, **bad)


def test_config_file_and_precedence(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"experiment": "x", "model": "gmm", "grid": {"k": [2], "mu_norm": [3.0], "p": [20], "n": [4]},
                                "trials": 5}))
    assert load_config(path).trials == 5
    assert load_config(path, {"trials": 2, "n_test": None}).trials == 2
    with pytest.raises(ConfigError):
        from_dict({"experiment": "x", "model": "gmm", "grid": {}, "bogus": 1})
    assert preset("support-gmm-a").trials == 20
    assert preset("support-gmm-a", paper_scale=True).trials == 100


def test_barplot(tmp_path):
    rows = barplot_rows(0)
    assert len(rows) == 32
    a = repro_barplot(0, tmp_path / "a.csv")
    b = repro_barplot(0, tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_plot_csv(tmp_path):
    src = tmp_path / "two.csv"
    src.write_text("p,frac,g\n1,0.5,\n2,0.75,\n")
    svg = plot_csv(src, "p", "frac", "g").read_text()
    assert svg.count('class="series"') == 1
    line = [ln for ln in svg.splitlines() if 'class="series"' in ln][0]
    assert len(line.split('points="')[1].split('"')[0].split()) == 2
    with pytest.raises(MissingColumn):
        plot_csv(src, "p", "nope")


def test_plot_groups(tmp_path):
    src = tmp_path / "g.csv"
    src.write_text("p,frac,mu\n1,0.5,a\n1,0.7,a\n2,0.9,a\n1,0.2,b\n2,0.4,b\n")
    svg = plot_csv(src, "p", "frac", "mu").read_text()
    assert svg.count('class="series"') == 2 and svg.count('class="band"') == 2


def test_calibrate_constants_has_no_counterexample(tmp_path):
    rows = read_rows(run_sweep(_cfg(tmp_path, grid={"k": [3], "mu_scale": [0.2], "p": [300], "n": [6, 12, 24, 40]}, trials=3,
                                    n_test=0)))
    out = calibrate_constants(rows)
    from interp_lab.experiments.artifacts import _point_pass

    for (a1, t1, a2, t2), ok in _point_pass(rows).items():
        if a1 > out["C1"] * t1 and a2 > out["C2"] * t2:
            assert ok


# --- CLI ---------------------------------------------------------------


def test_cli_gen_fit_check(tmp_path, capsys):
    data = tmp_path / "d.csv"
    assert cli.main(["gen", "--n", "12", "--p", "100", "--k", "3", "--seed", "4", "--out", str(data)]) == 0
    w = tmp_path / "w.csv"
    assert cli.main(["fit", "--data", str(data), "--solver", "svm", "--out", str(w)]) == 0
    meta = json.loads(w.with_suffix(".json").read_text())
    assert meta["kind"] == "MulticlassSVM" and meta["seed"] == 4 and meta["tol"] == 1e-8
    assert np.loadtxt(w, delimiter=",").shape == (3, 100)
    dump = tmp_path / "dc.csv"
    capsys.readouterr()
    assert cli.main(["check", "--data", str(data), "--dump-full", str(dump)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) >= {"det_con", "svm_equals_mni", "decision_agreement", "max_weight_gap"}
    with open(dump) as fh:
        assert sum(1 for _ in csv.reader(fh)) == 1 + 3 * 12


def test_cli_exit_codes(tmp_path):
    data = tmp_path / "bad.csv"
    data.write_text("# p,n,k,seed\n# 1,2,2,\n0,1.0\n1,1.0\n")  # identical points, different labels
    assert cli.main(["fit", "--data", str(data), "--out", str(tmp_path / "w.csv")]) == 3
    assert cli.main(["sweep"]) == 2
    assert cli.main(["plot", str(data), "--x", "a", "--y", "b"]) == 2
    assert cli.main(["fit", "--data", str(tmp_path / "missing.csv"), "--out", "x"]) == 2


def test_cli_sweep_flag_overrides_file(tmp_path):
    cfg = tmp_path / "c.json"
    out = tmp_path / "o.csv"
    cfg.write_text(json.dumps({"experiment": "x", "model": "gmm", "trials": 4, "output": str(out),
                               "grid": {"k": [2], "mu_norm": [3.0], "p": [30], "n": [4]}}))
    assert cli.main(["sweep", "--config", str(cfg), "--trials", "1"]) == 0
    assert len(read_rows(out)) == 1


def test_cli_barplot_and_plot(tmp_path):
    bar = tmp_path / "bar.csv"
    assert cli.main(["barplot", "--out", str(bar)]) == 0
    assert cli.main(["plot", str(bar), "--x", "sample", "--y", "inner_product", "--group", "class"]) == 0
    assert bar.with_suffix(".svg").exists()
