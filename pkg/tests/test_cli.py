"""End-to-end CLI flows and exit codes."""

from __future__ import annotations

import json

import numpy as np
import pytest

from fsosr.cli import main
from fsosr.feature_store import load_feature_store


@pytest.fixture
def synth_store(tmp_path):
    spec_path = tmp_path / "synth.json"
    spec_path.write_text(
        json.dumps(
            {
                "dim": 5, "n_classes": 12, "points_per_class": 10,
                "centroid_radius": 1.5, "within_std": 0.4, "seed": 21,
                "split_fractions": [0.25, 0.25, 0.5],
            }
        )
    )
    store = tmp_path / "store.fsos"
    assert main(["synth", "--spec", str(spec_path), "--out", str(store)]) == 0
    return store


def test_synth_creates_loadable_store(synth_store):
    fs = load_feature_store(synth_store)
    assert fs.n == 120 and fs.dim == 5 and fs.n_classes == 12


def test_ingest_round_trip(tmp_path, capsys):
    csv_path = tmp_path / "feats.csv"
    csv_path.write_text("label,f0,f1\na,0.5,1.5\nb,2.5,3.5\na,4.5,5.5\n")
    splits_path = tmp_path / "splits.json"
    splits_path.write_text(json.dumps({"base": ["a"], "val": [], "test": ["b"]}))
    out = tmp_path / "ingested.fsos"
    assert main(["ingest", "--csv", str(csv_path), "--splits", str(splits_path),
                 "--out", str(out)]) == 0
    fs = load_feature_store(out)
    assert fs.class_names == ("a", "b")
    assert "3 vectors" in capsys.readouterr().out


def test_sample_dumps_episodes(synth_store, tmp_path):
    spec_path = tmp_path / "episode.json"
    spec_path.write_text(
        json.dumps({"n_way": 2, "n_shot": 1, "n_query_per_class": 2,
                    "n_open_classes": 1, "seed": 4})
    )
    dump = tmp_path / "episodes"
    assert main(["sample", "--store", str(synth_store), "--spec", str(spec_path),
                 "--n", "3", "--dump", str(dump)]) == 0
    files = sorted(dump.glob("episode_*.json"))
    assert len(files) == 3
    doc = json.loads(files[0].read_text())
    assert len(doc["support_labels"]) == 2
    assert len(doc["query_truth"]) == 6
    assert doc["query_truth"].count(-1) == 2


def test_diagnose_reports_split(synth_store, tmp_path, capsys):
    out = tmp_path / "diag.json"
    assert main(["diagnose", "--store", str(synth_store), "--split", "test",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert 0.0 <= doc["mif"] <= 1.0
    assert doc["mif_percent"] == 100.0 * doc["mif"]
    assert doc["rho"] >= 0.0
    assert len(doc["per_class_if"]) == 6


def test_run_and_sweep(synth_store, tmp_path, capsys):
    out_dir = tmp_path / "reports"
    config = tmp_path / "run.json"
    config.write_text(
        json.dumps(
            {
                "store": str(synth_store),
                "episodes": {"n_way": 2, "n_shot": 1, "n_query_per_class": 2,
                             "n_open_classes": 1, "seed": 9},
                "methods": ["ostim", "strong_baseline"],
                "n_episodes": 3,
                "output_dir": str(out_dir),
                "ostim": {"n_steps": 5},
            }
        )
    )
    assert main(["run", "--config", str(config)]) == 0
    captured = capsys.readouterr().out
    assert "ostim:" in captured and "strong_baseline:" in captured
    report = json.loads((out_dir / "run_report.json").read_text())
    assert set(report["reports"]) == {"ostim", "strong_baseline"}
    assert (out_dir / "run_report.csv").read_text().startswith("method,shot,")

    assert main(["sweep", "--config", str(config), "--param", "ostim.alpha",
                 "--grid", "0.5,1.0"]) == 0
    sweep_doc = json.loads((out_dir / "sweep.json").read_text())
    assert sweep_doc["best"] in (0.5, 1.0)
    assert len(sweep_doc["table"]) == 2


class TestExitCodes:
    def test_config_error_is_2(self, tmp_path, capsys):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"methods": ["knn"]}))
        assert main(["run", "--config", str(config)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_config_file_is_2(self, tmp_path, capsys):
        assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2

    def test_data_error_is_3(self, tmp_path, capsys):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"store": str(tmp_path / "absent.fsos"),
                                      "methods": ["knn"], "n_episodes": 1}))
        assert main(["run", "--config", str(config)]) == 3

    def test_corrupt_store_is_3(self, synth_store, tmp_path, capsys):
        raw = bytearray(synth_store.read_bytes())
        raw[40] ^= 0x5A
        synth_store.write_bytes(bytes(raw))
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"store": str(synth_store), "methods": ["knn"],
                                      "episodes": {"n_way": 2, "n_query_per_class": 2,
                                                   "n_open_classes": 1},
                                      "n_episodes": 1}))
        assert main(["run", "--config", str(config)]) == 3

    def test_sweep_rejects_other_params(self, synth_store, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(json.dumps({"store": str(synth_store)}))
        assert main(["sweep", "--config", str(config), "--param", "ostim.lr",
                     "--grid", "0.1"]) == 2

    def test_divergence_exit_code_is_4(self):
        from fsosr import DivergenceError

        assert DivergenceError("x").exit_code == 4
