"""Command-line contract: exit codes, stdout payloads, file outputs."""

import json

import numpy as np
import pytest

from lgg.cli import main
from lgg.graph import GraphConfig, build_lgg, graph_to_dict
from lgg.io import load_manifest, one_hot, write_array_file
from lgg.mixup import load_plan, make_plan, mix_rows, save_plan
from lgg.scoring import run_score, builtin_preset

# the fixture's 40-pair pool is deliberately smaller than the default
# 500-vertex target, which is reported with a warning
pytestmark = pytest.mark.filterwarnings(
    "ignore::lgg.scoring.SampleShortfallWarning"
)


@pytest.fixture()
def manifest_dir(tmp_path):
    """A three-layer manifest with a mixup pool, clustered so scores are
    stable."""
    rng = np.random.default_rng(0)
    n, C, dim = 60, 3, 5
    labels = (np.arange(n) % C).astype(np.int64)
    centers = rng.normal(size=(C, dim)) * 4.0
    layers = {}
    for depth, name in ((1, "fc3"), (2, "fc2"), (3, "fc1")):
        layers[depth] = centers[labels] + rng.normal(size=(n, dim)) * 0.1
        write_array_file(tmp_path / f"{name}.npy", layers[depth])
    write_array_file(tmp_path / "labels.npy", labels)

    plan = make_plan(n_pairs=40, n_source=n, alpha=2.0, seed=5)
    save_plan(plan, tmp_path / "plan.json")
    write_array_file(tmp_path / "mix2.npy", mix_rows(layers[2], plan))
    write_array_file(tmp_path / "soft.npy", mix_rows(one_hot(labels, C), plan))

    doc = {
        "layers": [
            {"name": "fc3", "file": "fc3.npy", "depth_from_end": 1},
            {"name": "fc2", "file": "fc2.npy", "depth_from_end": 2},
            {"name": "fc1", "file": "fc1.npy", "depth_from_end": 3},
        ],
        "labels": "labels.npy",
        "num_classes": C,
        "mixup": {
            "plan": "plan.json",
            "layers": [{"name": "mix2", "file": "mix2.npy", "depth_from_end": 2}],
            "soft_labels": "soft.npy",
        },
    }
    (tmp_path / "manifest.json").write_text(json.dumps(doc))
    return tmp_path


class TestUsageErrors:
    def test_no_command_exits_2(self, capsys):
        with pytest.raises(SystemExit) as e:
            main([])
        assert e.value.code == 2

    def test_graph_build_requires_embeddings(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["graph", "build", "--out", "g.json"])
        assert e.value.code == 2

    def test_k_zero_rejected_as_usage_error(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["graph", "build", "--embeddings", "x.npy", "--k", "0",
                  "--out", "g.json"])
        assert e.value.code == 2
        assert "positive integer" in capsys.readouterr().err

    def test_alpha_zero_rejected_as_usage_error(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["mixup", "plan", "--n", "4", "--sources", "8",
                  "--alpha", "0", "--out", "p.json"])
        assert e.value.code == 2

    def test_bad_method_choice_rejected(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["score", "--manifest", "m.json", "--method", "magic"])
        assert e.value.code == 2

    def test_bad_vertex_policy_rejected(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["score", "--manifest", "m.json", "--method", "vpm",
                  "--vertex-policy", "sideways"])
        assert e.value.code == 2


class TestGraphBuild:
    def test_build_matches_library(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(20, 4))
        write_array_file(tmp_path / "emb.npy", X)
        out = tmp_path / "graph.json"
        rc = main(["graph", "build", "--embeddings", str(tmp_path / "emb.npy"),
                   "--kernel", "rbf", "--k", "2", "--symmetrize",
                   "--normalize", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        expect = graph_to_dict(build_lgg(X, GraphConfig(
            kernel="rbf", k=2, symmetrize=True, normalize=True)))
        assert doc == expect

    def test_missing_embedding_file_exits_1(self, tmp_path, capsys):
        rc = main(["graph", "build", "--embeddings", str(tmp_path / "no.npy"),
                   "--out", str(tmp_path / "g.json")])
        assert rc == 1
        err = capsys.readouterr().err
        assert "error:" in err and "no.npy" in err


class TestScore:
    def test_stdout_is_final_score_repr(self, manifest_dir, capsys):
        rc = main(["score", "--manifest", str(manifest_dir / "manifest.json"),
                   "--method", "wcv", "--seed", "7"])
        assert rc == 0
        out = capsys.readouterr().out
        value = float(out.strip())
        expected = run_score(
            load_manifest(manifest_dir / "manifest.json"),
            builtin_preset("wcv"), seed=7, target=500,
        ).final
        assert out == f"{expected!r}\n"
        assert 0.0 <= value <= 2.0

    def test_seed_7_reruns_byte_identical(self, manifest_dir, capsys, tmp_path):
        argv = ["score", "--manifest", str(manifest_dir / "manifest.json"),
                "--method", "vpm", "--seed", "7"]
        outs = []
        for name in ("a.json", "b.json"):
            rc = main(argv + ["--out", str(tmp_path / name)])
            assert rc == 0
            outs.append(capsys.readouterr().out)
        assert outs[0] == outs[1]
        assert (tmp_path / "a.json").read_bytes() == (
            tmp_path / "b.json"
        ).read_bytes()

    def test_vpm_graphs_1_equals_final_preset(self, manifest_dir, capsys):
        rc = main(["score", "--manifest", str(manifest_dir / "manifest.json"),
                   "--method", "vpm", "--graphs", "1", "--seed", "3"])
        assert rc == 0
        out = capsys.readouterr().out
        expected = run_score(
            load_manifest(manifest_dir / "manifest.json"),
            builtin_preset("vpm_final"), seed=3, target=500,
        ).final
        assert float(out.strip()) == expected

    def test_vr_needs_three_layers(self, tmp_path, capsys):
        rng = np.random.default_rng(2)
        labels = (np.arange(30) % 3).astype(np.int64)
        write_array_file(tmp_path / "fc3.npy", rng.normal(size=(30, 4)))
        write_array_file(tmp_path / "fc2.npy", rng.normal(size=(30, 4)))
        write_array_file(tmp_path / "labels.npy", labels)
        (tmp_path / "manifest.json").write_text(json.dumps({
            "layers": [
                {"name": "fc3", "file": "fc3.npy", "depth_from_end": 1},
                {"name": "fc2", "file": "fc2.npy", "depth_from_end": 2},
            ],
            "labels": "labels.npy",
            "num_classes": 3,
        }))
        rc = main(["score", "--manifest", str(tmp_path / "manifest.json"),
                   "--method", "vr"])
        assert rc == 1
        assert "depth_from_end [3]" in capsys.readouterr().err

    def test_vpm_without_mixup_pool_is_actionable(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        labels = (np.arange(30) % 3).astype(np.int64)
        write_array_file(tmp_path / "fc2.npy", rng.normal(size=(30, 4)))
        write_array_file(tmp_path / "labels.npy", labels)
        (tmp_path / "manifest.json").write_text(json.dumps({
            "layers": [{"name": "fc2", "file": "fc2.npy", "depth_from_end": 2}],
            "labels": "labels.npy",
            "num_classes": 3,
        }))
        rc = main(["score", "--manifest", str(tmp_path / "manifest.json"),
                   "--method", "vpm"])
        assert rc == 1
        assert "plan" in capsys.readouterr().err

    def test_report_written_when_out_given(self, manifest_dir, tmp_path, capsys):
        out = tmp_path / "report.json"
        rc = main(["score", "--manifest", str(manifest_dir / "manifest.json"),
                   "--method", "vr", "--graphs", "3", "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["method"] == "vr"
        assert len(doc["graphs"]) == 3


class TestExperiment:
    def _zoo_file(self, tmp_path):
        p = tmp_path / "zoo.json"
        p.write_text(json.dumps({
            "data": {"n_train": 120, "n_test": 120, "classes": 3, "dim": 6},
            "models": [
                {"id": "clean", "width": 16, "depth": 3, "epochs": 8},
                {"id": "noisy", "width": 16, "depth": 3, "epochs": 8,
                 "noise": 1.0},
            ],
        }))
        return p

    def test_custom_zoo_runs_and_writes(self, tmp_path, capsys):
        zoo = self._zoo_file(tmp_path)
        out_dir = tmp_path / "results" / "nested"
        rc = main(["experiment", "--zoo", str(zoo), "--seed", "1",
                   "--out-dir", str(out_dir)])
        assert rc == 0
        captured = capsys.readouterr()
        assert captured.out.startswith("tau_vpm=")
        float(captured.out.split("=", 1)[1])
        assert "tau_vr=" in captured.err and "tau_wcv=" in captured.err
        assert (out_dir / "results.csv").exists()
        assert (out_dir / "results.json").exists()

    def test_missing_zoo_file_exits_1_naming_path(self, tmp_path, capsys):
        rc = main(["experiment", "--zoo", str(tmp_path / "ghost.json"),
                   "--out-dir", str(tmp_path / "o")])
        assert rc == 1
        assert "ghost.json" in capsys.readouterr().err


class TestMixupPlan:
    def test_round_trip(self, tmp_path, capsys):
        out = tmp_path / "plan.json"
        rc = main(["mixup", "plan", "--n", "12", "--sources", "9",
                   "--alpha", "2.0", "--seed", "4", "--out", str(out)])
        assert rc == 0
        plan = load_plan(out)
        assert plan == make_plan(n_pairs=12, n_source=9, alpha=2.0, seed=4)

    def test_two_sources_only_pair_each_other(self, tmp_path, capsys):
        out = tmp_path / "plan.json"
        rc = main(["mixup", "plan", "--n", "5", "--sources", "2",
                   "--alpha", "2.0", "--out", str(out)])
        assert rc == 0
        plan = load_plan(out)
        assert len(plan) == 5
        assert all({i, j} == {0, 1} for i, j, _ in plan.entries)


def test_module_entry_point_runs(tmp_path):
    import subprocess
    import sys

    proc = subprocess.run(
        [sys.executable, "-m", "lgg.cli", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "score" in proc.stdout
    proc = subprocess.run(
        [sys.executable, "-m", "lgg", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
