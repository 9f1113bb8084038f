import json
import os

from muxim.cli import main


def write_config(tmp_path, **overrides):
    doc = {
        "generator": {"layer_node_counts": [12, 16, 20], "total_edges": 90,
                      "overlap_percent": 0.5,
                      "model_per_layer": ["IC", "IC", "IC"], "rng_seed": 3},
        "budget": 3, "m": 40, "seed": 5, "gamma": 1.0,
    }
    doc.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


def read_json(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_generate_table1_preset_manifest(tmp_path, capsys):
    out = str(tmp_path / "net.mux")
    assert main(["generate", "--preset", "table1-3layer", "--seed", "2",
                 "--output", out]) == 0
    manifest = read_json(capsys)
    assert manifest["pre_merge_total_nodes"] == 7500
    assert manifest["k"] == 3
    assert os.path.exists(out) and os.path.exists(out + ".manifest.json")


def test_generate_same_seed_same_hash(tmp_path, capsys):
    a, b = str(tmp_path / "a.mux"), str(tmp_path / "b.mux")
    main(["generate", "--preset", "table1-3layer", "--seed", "7", "--output", a])
    ha = read_json(capsys)["sha256"]
    main(["generate", "--preset", "table1-3layer", "--seed", "7", "--output", b])
    hb = read_json(capsys)["sha256"]
    assert ha == hb
    assert open(a).read() == open(b).read()


def test_generate_rejects_bad_overlap(tmp_path, capsys):
    out = str(tmp_path / "x.mux")
    code = main(["generate", "--preset", "table1-3layer", "--overlap", "1.5",
                 "--output", out])
    assert code == 2
    assert "error" in read_json(capsys)


def test_solve_writes_solution_and_csv(tmp_path, capsys):
    cfg = write_config(tmp_path)
    outdir = str(tmp_path / "out")
    assert main(["solve", "--config", cfg, "--method", "ksn",
                 "--outdir", outdir]) == 0
    assert main(["solve", "--config", cfg, "--method", "mim-reasoner",
                 "--outdir", outdir]) == 0
    rows = open(os.path.join(outdir, "results.csv")).read().strip().splitlines()
    assert rows[0] == "method,k,o,l,total_spread,stderr,wall_seconds"
    assert len(rows) == 3
    assert rows[1].startswith("ksn,3,") and rows[2].startswith("mim-reasoner,3,")
    doc = json.load(open(os.path.join(outdir, "solution_ksn.json")))
    assert doc["certificate"]["o"] == int(rows[1].split(",")[2])


def test_solve_missing_network_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path)
    code = main(["solve", "--config", cfg, "--network",
                 str(tmp_path / "nope.mux")])
    assert code == 2


def test_solve_exact_flag_uses_oracle(tmp_path, capsys):
    cfg = write_config(tmp_path, generator={
        "layer_node_counts": [5, 6], "total_edges": 10,
        "overlap_percent": 0.5, "model_per_layer": ["IC", "IC"],
        "rng_seed": 11}, budget=2, m=30)
    outdir = str(tmp_path / "out")
    assert main(["solve", "--config", cfg, "--method", "mim-reasoner",
                 "--outdir", outdir, "--exact"]) == 0
    doc = json.load(open(os.path.join(outdir, "solution_mim-reasoner.json")))
    assert doc["total_spread"]["stderr"] == 0.0


def test_solve_exact_flag_guard_violation(tmp_path, capsys):
    cfg = write_config(tmp_path)  # 90 IC edges: over the guard
    code = main(["solve", "--config", cfg, "--method", "ksn",
                 "--outdir", str(tmp_path / "o"), "--exact"])
    assert code == 3
    assert "error" in read_json(capsys)


def test_solve_deterministic_outputs(tmp_path):
    cfg = write_config(tmp_path)
    for d in ("d1", "d2"):
        main(["solve", "--config", cfg, "--method", "mim-reasoner",
              "--outdir", str(tmp_path / d)])
    a = json.load(open(tmp_path / "d1" / "solution_mim-reasoner.json"))
    b = json.load(open(tmp_path / "d2" / "solution_mim-reasoner.json"))
    a.pop("wall_times"); b.pop("wall_times")
    assert a == b


def test_verify_passes_on_guarded_instance(tmp_path, capsys):
    cfg = write_config(tmp_path, generator={
        "layer_node_counts": [5, 6], "total_edges": 10,
        "overlap_percent": 0.5, "model_per_layer": ["IC", "IC"],
        "rng_seed": 11}, budget=2, m=40)
    assert main(["verify", "--config", cfg, "--method", "mim-reasoner"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out and "FAIL" not in out


def test_verify_refuses_unguarded_instance(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["verify", "--config", cfg]) == 3
    assert "error" in read_json(capsys)


def test_inspect_pgm_dumps_trees(tmp_path, capsys):
    cfg = write_config(tmp_path)
    outdir = str(tmp_path / "pgms")
    assert main(["inspect-pgm", "--config", cfg, "--outdir", outdir]) == 0
    listing = read_json(capsys)["pgms"]
    assert len(listing) == 2  # three layers -> two fitted models
    doc = json.load(open(listing[0]))
    assert "group_partition" in doc


def test_thread_env_does_not_change_results(tmp_path, monkeypatch):
    cfg = write_config(tmp_path)
    main(["solve", "--config", cfg, "--method", "ksn",
          "--outdir", str(tmp_path / "s1")])
    monkeypatch.setenv("MIM_THREADS", "4")
    main(["solve", "--config", cfg, "--method", "ksn",
          "--outdir", str(tmp_path / "s2")])
    a = json.load(open(tmp_path / "s1" / "solution_ksn.json"))
    b = json.load(open(tmp_path / "s2" / "solution_ksn.json"))
    a.pop("wall_times"); b.pop("wall_times")
    assert a == b
