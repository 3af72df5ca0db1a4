import csv
import json
import math

import numpy as np
import pytest

from locplex import cli, io
from locplex.economics import z_plex_value
from locplex.harness import synth_data
from locplex.model import ValidationError


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def small_case(tmp_path):
    inst, xy, _ = synth_data(20, 2)
    io.write_nodes(tmp_path / "nodes.csv", inst, xy)
    io.write_distances(tmp_path / "dist.csv", inst)
    cfg = {"nodes": "nodes.csv", "distances": "dist.csv", "k": 3, "problem": "kmedianplex", "seed": 2,
           "params": {"r": 5, "gamma": 1e-3, "alpha": 0.1, "phi": 1000}}
    (tmp_path / "solve.json").write_text(json.dumps(cfg))
    return tmp_path, inst, cfg


def test_population_column_sets_demand(tmp_path):
    p = tmp_path / "n.csv"
    p.write_text("id,name,population\n0,a,100000\n1,b,50000\n")
    t = io.read_nodes(p)
    assert t.demand.tolist() == pytest.approx([500 * math.log(1e5), 500 * math.log(5e4)])


def test_sparse_distances_round_trip(tmp_path):
    (tmp_path / "n.csv").write_text("id,name,demand\n0,a,1\n1,b,2\n")
    (tmp_path / "d.csv").write_text("from,to,km\n0,1,5\n1,0,5\n0,0,0\n1,1,0\n")
    inst, _ = io.load_instance(tmp_path / "n.csv", tmp_path / "d.csv")
    assert inst.dist.tolist() == [[0, 5], [5, 0]]


def test_evaluate_golden(capsys):
    nodes, dist = io.golden_paths()
    code, out, _ = run(capsys, "evaluate", "--nodes", nodes, "--dist", dist, "--facilities", "2,9,12",
                       "--r", 10, "--gamma", 0.1)
    assert code == 0
    assert json.loads(out)["complexity"]["total"] == pytest.approx(3.624, abs=1e-3)


def test_evaluate_csv_format(capsys, tmp_path):
    nodes, dist = io.golden_paths()
    code, _, _ = run(capsys, "evaluate", "--nodes", nodes, "--dist", dist, "--facilities", "2,9,12",
                     "--r", 10, "--gamma", 0.1, "--format", "csv", "--out", tmp_path / "e.csv")
    assert code == 0
    assert (tmp_path / "e.csv").read_text().startswith("facility,name,share,complexity,revenue")


def test_evaluate_single_node_is_zero(capsys, tmp_path):
    (tmp_path / "n.csv").write_text("id,name,demand\n0,a,3\n")
    (tmp_path / "d.csv").write_text("0\n")
    code, out, _ = run(capsys, "evaluate", "--nodes", tmp_path / "n.csv", "--dist", tmp_path / "d.csv",
                       "--facilities", "0", "--r", 1, "--gamma", 0)
    assert code == 0 and json.loads(out)["complexity"]["total"] == 0.0


def test_sparse_missing_entry_is_validation_error(capsys, tmp_path):
    (tmp_path / "n.csv").write_text("id,name,demand\n0,a,1\n1,b,2\n")
    (tmp_path / "d.csv").write_text("from,to,km\n0,1,5\n0,0,0\n1,1,0\n")
    code, _, err = run(capsys, "evaluate", "--nodes", tmp_path / "n.csv", "--dist", tmp_path / "d.csv",
                       "--facilities", "0", "--r", 1, "--gamma", 1)
    assert code == 2
    report = json.loads(err)
    assert report["error"] == "validation" and "coverage" in report["problems"][0]


def test_bad_params_is_validation_error(capsys, small_case):
    tmp, _, cfg = small_case
    cfg["params"]["alpha"] = 1.5
    (tmp / "bad.json").write_text(json.dumps(cfg))
    code, _, err = run(capsys, "solve", "--config", tmp / "bad.json")
    assert code == 2 and json.loads(err)["error"] == "validation"


def test_exact_large_is_budget_error(capsys, tmp_path):
    inst, xy, _ = synth_data(125, 0)
    io.write_nodes(tmp_path / "nodes.csv", inst, xy)
    io.write_distances(tmp_path / "dist.csv", inst)
    cfg = {"nodes": "nodes.csv", "distances": "dist.csv", "k": 9, "params": {"r": 5, "gamma": 1e-3}}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    code, _, err = run(capsys, "solve", "--config", tmp_path / "c.json", "--mode", "exact")
    assert code == 3 and json.loads(err)["error"] == "budget"


def test_k1_exact_matches_scan(capsys, small_case):
    tmp, inst, cfg = small_case
    code, _, _ = run(capsys, "solve", "--config", tmp / "solve.json", "--k", 1, "--mode", "exact",
                     "--out", tmp / "s")
    assert code == 0
    summary = json.loads((tmp / "s" / "summary.json").read_text())
    from locplex.model import CostParams
    from locplex.solvers import allocate_nearest
    p = CostParams(**cfg["params"])
    best = max(z_plex_value(inst, allocate_nearest(inst, [f], p), p) for f in range(inst.n))
    assert summary["objective"] == pytest.approx(best, rel=1e-12)
    assert summary["config_hash"] and summary["seed"] == 2


def test_alpha_zero_outputs_identical(capsys, small_case):
    tmp, _, cfg = small_case
    cfg["params"]["alpha"] = 0
    for prob in ("kmedian", "kmedianplex"):
        cfg["problem"] = prob
        (tmp / f"{prob}.json").write_text(json.dumps(cfg))
        assert run(capsys, "solve", "--config", tmp / f"{prob}.json", "--out", tmp / prob)[0] == 0
    a = json.loads((tmp / "kmedian" / "summary.json").read_text())
    b = json.loads((tmp / "kmedianplex" / "summary.json").read_text())
    assert a["objective"] == b["objective"]
    assert (tmp / "kmedian" / "network.csv").read_text() == (tmp / "kmedianplex" / "network.csv").read_text()


def test_solve_restructure_round_trip(capsys, small_case):
    tmp, inst, cfg = small_case
    assert run(capsys, "solve", "--config", tmp / "solve.json", "--out", tmp / "s")[0] == 0
    solved = json.loads((tmp / "s" / "summary.json").read_text())
    cfg["network"] = "s/network.csv"
    (tmp / "re.json").write_text(json.dumps(cfg))
    code, _, _ = run(capsys, "restructure", "--config", tmp / "re.json", "--strategy", "rebalance",
                     "--out", tmp / "r")
    assert code == 0
    summary = json.loads((tmp / "r" / "summary.json").read_text())
    assert summary["z_before"] == pytest.approx(solved["objective"], rel=1e-9)
    table = io.read_nodes(tmp / "nodes.csv")
    final = io.read_network(tmp / "r" / "network.csv", table)
    from locplex.model import CostParams
    assert z_plex_value(inst, final, CostParams(**cfg["params"])) == pytest.approx(summary["z_after"], rel=1e-9)
    with open(tmp / "r" / "moves.csv") as fh:
        assert len(list(csv.DictReader(fh))) == summary["moves"]


def test_restructure_reallocate_keeps_cp(capsys, small_case):
    tmp, inst, cfg = small_case
    cfg.update(k=5, problem="kmedian")
    cfg["params"]["phi"] = 40_000
    (tmp / "k5.json").write_text(json.dumps(cfg))
    assert run(capsys, "solve", "--config", tmp / "k5.json", "--out", tmp / "s")[0] == 0
    code, _, _ = run(capsys, "restructure", "--config", tmp / "k5.json", "--network", tmp / "s" / "network.csv",
                     "--strategy", "reduce", "--reallocate", "--out", tmp / "r")
    assert code == 0
    s = json.loads((tmp / "r" / "summary.json").read_text())
    assert s["strategy"] == "reduce-reallocate"
    assert s["cp_after"] == pytest.approx(s["cp_before"], abs=1e-9)


def test_restructure_single_facility_warns(capsys, caplog, small_case):
    tmp, _, cfg = small_case
    assert run(capsys, "solve", "--config", tmp / "solve.json", "--k", 1, "--out", tmp / "s")[0] == 0
    code, _, err = run(capsys, "restructure", "--config", tmp / "solve.json", "--network",
                       tmp / "s" / "network.csv", "--strategy", "rebalance", "--out", tmp / "r")
    assert code == 0 and "fewer than two facilities" in caplog.text
    assert json.loads((tmp / "r" / "summary.json").read_text())["moves"] == 0


def test_restructure_without_network_fails(capsys, small_case):
    tmp, _, _ = small_case
    code, _, err = run(capsys, "restructure", "--config", tmp / "solve.json", "--strategy", "rebalance")
    assert code == 2


def test_one_cell_grid(capsys, small_case):
    tmp, _, cfg = small_case
    cfg["grid"] = {"alphas": [0.1], "gammas": [100.0], "rhos": [0.0], "phis": [50_000.0], "k_range": [3]}
    (tmp / "g.json").write_text(json.dumps(cfg))
    assert run(capsys, "grid", "--config", tmp / "g.json", "--out", tmp / "g")[0] == 0
    with open(tmp / "g" / "records.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 1
    assert rows[0]["seed"] == "2" and rows[0]["config_hash"]
    assert "rebalance.dca_pct" in rows[0]
    assert len((tmp / "g" / "records.jsonl").read_text().splitlines()) == 1
    summary = json.loads((tmp / "g" / "summary.json").read_text())
    assert summary["checks"]["rebalance_dca_nonpositive"]["passed"]
    assert not list((tmp / "g").glob(".*"))


def test_env_var_sets_output_dir(capsys, monkeypatch, tmp_path):
    monkeypatch.setenv("LOCPLEX_OUT", str(tmp_path / "envout"))
    assert run(capsys, "synth", "--n", 5, "--seed", 1)[0] == 0
    assert (tmp_path / "envout" / "nodes.csv").exists()


def test_config_hash_is_stable(small_case):
    tmp, _, _ = small_case
    a = io.RunConfig.load(tmp / "solve.json")
    b = io.RunConfig.load(tmp / "solve.json")
    assert a.hash() == b.hash() and len(a.hash()) == 16
    b.seed = 99
    assert a.hash() != b.hash()


def test_missing_config_file():
    with pytest.raises(ValidationError):
        io.RunConfig.load("/nonexistent/config.json")


def test_atomic_write_replaces(tmp_path):
    p = tmp_path / "x.txt"
    io.atomic_write(p, "one")
    io.atomic_write(p, "two")
    assert p.read_text() == "two" and [q.name for q in tmp_path.iterdir()] == ["x.txt"]
