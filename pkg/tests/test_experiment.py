import json

import numpy as np
import pytest

from conftest import X_STAR
from tnfg.experiment import (ExperimentConfig, evaluate_approach, gain_pct, read_csv,
                             rows_to_csv, run_experiment)
from tnfg.flows import adaptive_value
from tnfg.network import fixture_d1


def test_evaluate_examples(d1):
    m = evaluate_approach(d1, X_STAR, 1)
    assert m.objective == pytest.approx(4.67, abs=1e-12)
    assert m.lost_flow == pytest.approx(9)
    assert m.attack == (0,)
    assert m.attacked_mean_flow == 10
    z = evaluate_approach(d1, np.zeros(6), 2)
    assert z.objective == 0 and z.lost_flow == 0
    n = evaluate_approach(d1, X_STAR, 0)
    assert n.objective == pytest.approx(13.68) and n.lost_flow == 0


def test_residual_metric(d1):
    # only e4 (a->b) avoids both s and t; it carries 4 of 4
    assert evaluate_approach(d1, X_STAR, 0).mean_residual == 0
    x = X_STAR.copy()
    x[[0, 3, 4, 5]] = [8, 2, 6, 12]
    assert evaluate_approach(d1, x, 0).mean_residual == 2


def test_gain_examples():
    assert gain_pct(13.68, 13.68, 20, 5) == 0.0
    assert gain_pct(24.0, 0.0, 20, 5) == pytest.approx(24.0)
    assert gain_pct(2.4, 0.0, 20, 5) == pytest.approx(2.4)
    assert gain_pct(4.67, 3.67, 10, 1) == pytest.approx(10.0)
    assert gain_pct(1.0, 0.0, 10, 0) is None


def test_d1_experiment_rows():
    rows = run_experiment(ExperimentConfig(instances=["D1"], gamma=1))
    assert [r["approach"] for r in rows] == ["MF", "OSP", "RF", "AAMF", "RAMF"]
    ramf = rows[-1]["objective"]
    assert all(ramf >= r["objective"] - 1e-6 for r in rows)
    assert rows[-1]["gain_pct"] == 0.0
    assert rows[-1]["iterations"] >= 1


def test_objective_recomputes_from_logged_flow():
    net = fixture_d1()
    for r in run_experiment(ExperimentConfig(instances=["D1"], gamma=2)):
        x = np.array([r["flow"][e.id] for e in net.all_edges()])
        att = tuple(net.index(e) for e in r["attack"])
        assert adaptive_value(net, x, att) == pytest.approx(r["objective"], abs=1e-6)


def test_seeded_generator_rows():
    cfg = ExperimentConfig(instances=[{"generator": {"n_nodes": 7, "edge_density": 0.5}}],
                           seeds=[0, 1, 2, 3, 4], gamma=1)
    rows = run_experiment(cfg)
    assert len(rows) == 25
    assert len({r["instance"] for r in rows}) == 5


def test_empty_approach_list(tmp_path):
    cfg = ExperimentConfig(instances=["D1"], approaches=[], out_csv=str(tmp_path / "o.csv"))
    assert run_experiment(cfg) == []
    assert (tmp_path / "o.csv").read_text().count("\n") == 1


def test_error_rows_do_not_stop_the_run(tmp_path):
    cfg = ExperimentConfig(instances=[str(tmp_path / "missing.txt"), "D1"], approaches=["MF"])
    rows = run_experiment(cfg)
    assert rows[0]["error"].startswith("FileNotFoundError")
    assert rows[1]["approach"] == "MF" and rows[1]["error"] == ""


def test_csv_roundtrip():
    rows = run_experiment(ExperimentConfig(instances=["D1"], gamma=1))
    back = read_csv(rows_to_csv(rows))
    for a, b in zip(rows, back):
        for k in ("objective", "lost_flow", "gain_pct", "throughput", "mean_residual"):
            assert a[k] == b[k]
        assert a["attack"] == b["attack"]


def test_config_loading(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("instances: [D1]\ngamma: 2\napproaches: [mf, ramf]\nout_csv: out.csv\n")
    cfg = ExperimentConfig.load(p)
    assert cfg.gamma == 2 and cfg.approaches == ["MF", "RAMF"]
    assert cfg.out_csv == str(tmp_path / "out.csv")
    j = tmp_path / "c.json"
    j.write_text(json.dumps({"instances": ["D1"], "mode": "heuristic"}))
    assert ExperimentConfig.load(j).mode == "heuristic"
    bad = tmp_path / "b.yaml"
    bad.write_text("instances: [D1]\nbudget: 3\n")
    with pytest.raises(ValueError, match="unknown config keys"):
        ExperimentConfig.load(bad)


def test_outputs_byte_identical(tmp_path):
    def run(tag):
        cfg = ExperimentConfig(instances=["D1", {"generator": {"n_nodes": 6, "edge_density": 0.5}}],
                               seeds=[3], gamma=1, out_csv=str(tmp_path / f"{tag}.csv"),
                               out_json=str(tmp_path / f"{tag}.json"))
        run_experiment(cfg)
        return (tmp_path / f"{tag}.csv").read_bytes(), (tmp_path / f"{tag}.json").read_bytes()
    assert run("a") == run("b")
