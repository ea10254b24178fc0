import hashlib
import json
import os

import numpy as np
import pytest

from bisimlab.cli import main
from bisimlab.mdp import random_mdp, save_mdp_json


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_bisim_counting(tmp_path, capsys):
    out = str(tmp_path / "out")
    code, stdout, _ = run(["bisim", "--counting", "8", "4", "--out-dir", out], capsys)
    assert code == 0
    summary = json.loads(stdout)
    assert summary["num_blocks"] == 9
    assert summary["num_pairs"] == 72
    assert summary["fixed_point_verified"] is True
    for name in ("relation.csv", "partition.csv", "summary.json", "manifest.json"):
        assert os.path.exists(os.path.join(out, name))
    part_lines = open(os.path.join(out, "partition.csv")).read().splitlines()
    assert part_lines[0] == "observation_id,block_id"
    assert len(part_lines) == 10


def test_bisim_engines_agree(tmp_path, capsys):
    path = str(tmp_path / "mdp.json")
    save_mdp_json(random_mdp(12, 3, 2, np.random.default_rng(5)), path)
    outs = {}
    for engine in ("naive", "refine"):
        out = str(tmp_path / engine)
        code, stdout, _ = run(
            ["bisim", "--mdp", path, "--engine", engine, "--out-dir", out], capsys
        )
        assert code == 0
        outs[engine] = (
            json.loads(stdout),
            open(os.path.join(out, "relation.csv")).read(),
            open(os.path.join(out, "partition.csv")).read(),
        )
    assert outs["naive"][0]["num_pairs"] == outs["refine"][0]["num_pairs"]
    assert outs["naive"][1] == outs["refine"][1]
    assert outs["naive"][2] == outs["refine"][2]


def test_bisim_requires_source(tmp_path, capsys):
    code, _, err = run(["bisim", "--out-dir", str(tmp_path)], capsys)
    assert code == 2
    assert "required" in err


def test_bisim_bad_mdp_file(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(["bisim", "--mdp", str(bad), "--out-dir", str(tmp_path)], capsys)
    assert code == 2


def test_collect_then_empirical_bisim(tmp_path, capsys):
    data_dir = str(tmp_path / "data")
    code, stdout, _ = run(
        ["collect", "--steps", "200", "--image-size", "16", "--out-dir", data_dir], capsys
    )
    assert code == 0
    assert json.loads(stdout)["records"] == 200

    out = str(tmp_path / "emp")
    code, stdout, _ = run(
        ["empirical-bisim", "--dataset", os.path.join(data_dir, "dataset.bslb"),
         "--out-dir", out], capsys
    )
    assert code == 0
    summary = json.loads(stdout)
    assert summary["num_sources"] >= 2
    assert summary["pairs_in_R"] >= 0
    first = open(os.path.join(out, "relation.csv")).read().splitlines()[0]
    assert first == "i,j"


def test_collect_is_reproducible(tmp_path, capsys):
    digests = []
    for name in ("a", "b"):
        out = tmp_path / name
        code, _, _ = run(
            ["collect", "--steps", "50", "--image-size", "16",
             "--seed", "3", "--out-dir", str(out)], capsys
        )
        assert code == 0
        digests.append(hashlib.sha256((out / "dataset.bslb").read_bytes()).hexdigest())
    assert digests[0] == digests[1]


def test_empirical_bisim_missing_dataset(tmp_path, capsys):
    with pytest.raises(SystemExit):
        main(["empirical-bisim", "--out-dir", str(tmp_path)])


def test_train_analyze_verify_tabular(tmp_path, capsys):
    run_dir = str(tmp_path / "run")
    code, stdout, _ = run(
        ["train", "--preset", "tabular_counting", "--steps", "300", "--out-dir", run_dir],
        capsys,
    )
    assert code == 0
    payload = json.loads(stdout)
    assert 0.0 <= payload["best_centroid_acc"] <= 1.0
    ckpt = os.path.join(run_dir, "checkpoint.pjpa")
    assert os.path.exists(ckpt)
    metrics = [json.loads(l) for l in open(os.path.join(run_dir, "metrics.jsonl"))]
    assert metrics[-1]["step"] == 300

    an_dir = str(tmp_path / "analysis")
    code, stdout, _ = run(["analyze", "--checkpoint", ckpt, "--out-dir", an_dir], capsys)
    assert code == 0
    summary = json.loads(stdout)
    assert set(summary) == {"nearest_centroid_accuracy", "collapse_ratio", "explained_variance"}
    for name in ("pca.csv", "distances.csv", "heatmap.ppm", "analysis.json"):
        assert os.path.exists(os.path.join(an_dir, name))

    # an undertrained model at a tight epsilon should fail verification (exit 3)
    v_dir = str(tmp_path / "verify")
    code, stdout, _ = run(
        ["verify", "--checkpoint", ckpt, "--counting", "8", "4",
         "--eps-collapse", "1000.0", "--out-dir", v_dir], capsys
    )
    assert code == 3
    report = json.loads(open(os.path.join(v_dir, "collapse_report.json")).read())
    assert report["verdict"] == "fail"
    assert report["pairs_checked"] == 36

    # and pass at epsilon 0 (all distances are >= 0, none strictly below)
    code, stdout, _ = run(
        ["verify", "--checkpoint", ckpt, "--counting", "8", "4",
         "--eps-collapse", "0.0", "--out-dir", v_dir], capsys
    )
    assert code == 0


def test_train_divergence_exit_code(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"base_lr": 1e120}))
    code, _, err = run(
        ["--config", str(cfg), "train", "--preset", "tabular_counting",
         "--steps", "50", "--out-dir", str(tmp_path / "out")], capsys
    )
    assert code == 4
    assert "diverged" in err


def test_train_reruns_identical(tmp_path, capsys):
    digests = []
    for name in ("a", "b"):
        out = tmp_path / name
        code, _, _ = run(
            ["train", "--preset", "tabular_counting", "--steps", "100",
             "--out-dir", str(out)], capsys
        )
        assert code == 0
        digests.append(
            (
                hashlib.sha256((out / "checkpoint.pjpa").read_bytes()).hexdigest(),
                (out / "metrics.jsonl").read_text(),
            )
        )
    assert digests[0] == digests[1]


def test_manifest_hashes(tmp_path, capsys):
    out = tmp_path / "out"
    code, _, _ = run(["bisim", "--counting", "2", "1", "--out-dir", str(out)], capsys)
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    for name, digest in manifest["artifacts"].items():
        actual = hashlib.sha256((out / name).read_bytes()).hexdigest()
        assert actual == digest


def test_config_file_defaults_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"engine": "naive", "aux_tol": 0.0}))
    out = str(tmp_path / "out")
    code, stdout, _ = run(
        ["--config", str(cfg), "bisim", "--counting", "2", "1", "--out-dir", out], capsys
    )
    assert code == 0
    assert json.loads(stdout)["engine"] == "naive"
    # an explicit flag wins over the config file
    cfg2 = tmp_path / "cfg2.json"
    cfg2.write_text(json.dumps({"steps": 80}))
    run_dir = str(tmp_path / "run")
    code, stdout, _ = run(
        ["--config", str(cfg2), "train", "--preset", "tabular_counting",
         "--steps", "40", "--out-dir", run_dir], capsys
    )
    assert code == 0
    metrics = [json.loads(l) for l in open(os.path.join(run_dir, "metrics.jsonl"))]
    assert metrics[-1]["step"] == 40


def test_thread_cap_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("BISIMLAB_THREADS", "1")
    code, _, _ = run(["bisim", "--counting", "2", "1", "--out-dir", str(tmp_path)], capsys)
    assert code == 0
    assert os.environ["OMP_NUM_THREADS"] == "1"
