import csv
import json

import pytest

from docarg.cli import main
from docarg.data import load_dataset, load_predictions


def run(args):
    return main(args)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """A synth corpus plus a trained tiny checkpoint shared by CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    assert run([
        "synth", "--out-dir", str(root), "--n-train", "24", "--n-test", "8",
        "--seed", "5",
    ]) == 0
    config = {
        "variant": "span",
        "backend": {"layers": 1, "d": 32, "heads": 2, "max_tokens": 192, "dropout": 0.0},
        "optimizer": {"transformer_lr": 1e-3, "head_lr": 3e-3, "warmup_ratio": 0.05,
                      "batch_size": 4, "epochs": 2},
        "structure": {"max_span_length": 3, "max_input_length": 512,
                      "window": 192, "stride": 96, "role_block": "suffix"},
        "d_reduced": 4,
        "d_interaction": 8,
        "seed": 11,
    }
    cfg_path = root / "config.json"
    cfg_path.write_text(json.dumps(config))
    assert run([
        "train", "--data", str(root / "train.jsonl"), "--config", str(cfg_path),
        "--checkpoint", str(root / "model.ckpt"), "--out-dir", str(root),
    ]) == 0
    return root


class TestSynth:
    def test_outputs_exist_and_parse(self, workspace):
        train = load_dataset(workspace / "train.jsonl")
        test = load_dataset(workspace / "test.jsonl")
        assert len(train) == 24 and len(test) == 8
        templates = json.loads((workspace / "templates.json").read_text())
        assert set(templates) == {i.event_type for i in train} | {i.event_type for i in test}

    def test_reproducible_outputs(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["synth", "--out-dir", str(out), "--n-train", "10",
                        "--n-test", "4", "--seed", "3"]) == 0
        assert (a / "train.jsonl").read_bytes() == (b / "train.jsonl").read_bytes()
        assert (a / "test.jsonl").read_bytes() == (b / "test.jsonl").read_bytes()


class TestEvalPredictErrors:
    def test_eval_writes_report(self, workspace, capsys):
        assert run([
            "eval", "--checkpoint", str(workspace / "model.ckpt"),
            "--data", str(workspace / "test.jsonl"),
            "--report", str(workspace / "report.json"), "--out-dir", str(workspace),
        ]) == 0
        report = json.loads((workspace / "report.json").read_text())
        for key in ("arg_if", "arg_cf", "head_if", "head_cf", "errors"):
            assert key in report
        out = capsys.readouterr().out
        assert "Arg-C" in out

    def test_predict_then_errors(self, workspace):
        pred_path = workspace / "preds.jsonl"
        assert run([
            "predict", "--checkpoint", str(workspace / "model.ckpt"),
            "--data", str(workspace / "test.jsonl"), "--pred", str(pred_path),
            "--out-dir", str(workspace),
        ]) == 0
        events = load_predictions(pred_path)
        assert len(events) == 8
        assert run([
            "errors", "--pred", str(pred_path), "--data", str(workspace / "test.jsonl"),
            "--report", str(workspace / "errors.json"), "--out-dir", str(workspace),
        ]) == 0
        report = json.loads((workspace / "errors.json").read_text())
        assert report["total"] == sum(report["counts"].values())


class TestCooccurAndVisualize:
    def test_cooccurrence_csv_is_symmetric_with_zero_diagonal(self, workspace):
        out = workspace / "cooccurrence.csv"
        assert run(["cooccur", "--data", str(workspace / "train.jsonl"),
                    "--csv", str(out), "--out-dir", str(workspace)]) == 0
        with open(out) as fh:
            rows = list(csv.reader(fh))
        roles = rows[0][1:]
        matrix = [[float(x) for x in row[1:]] for row in rows[1:]]
        n = len(roles)
        for i in range(n):
            assert matrix[i][i] == 0.0
            for j in range(n):
                assert matrix[i][j] == pytest.approx(matrix[j][i])

    def test_visualize_exports(self, workspace):
        viz = workspace / "viz"
        assert run([
            "visualize", "--checkpoint", str(workspace / "model.ckpt"),
            "--data", str(workspace / "test.jsonl"), "--index", "0",
            "--out-dir", str(viz),
        ]) == 0
        heatmap = viz / "clue_heatmap.csv"
        assert heatmap.exists()
        with open(heatmap) as fh:
            rows = list(csv.reader(fh))
        n_tokens = len(rows[0]) - 1
        test_set = load_dataset(workspace / "test.jsonl")
        # weight files have one row per context token; heatmap rows sum to 1
        for row in rows[1:]:
            assert sum(float(x) for x in row[1:]) == pytest.approx(1.0, abs=1e-6)
        weight_files = sorted(viz.glob("clue_weights_*.csv"))
        if weight_files:
            with open(weight_files[0]) as fh:
                wrows = list(csv.reader(fh))
            assert len(wrows) - 1 == n_tokens == len(test_set[0].words)
        sim = viz / "role_similarity.csv"
        with open(sim) as fh:
            rows = list(csv.reader(fh))
        names = rows[0][1:]
        matrix = [[float(x) for x in row[1:]] for row in rows[1:]]
        for i in range(len(names)):
            assert matrix[i][i] == pytest.approx(1.0, abs=1e-6)
            for j in range(len(names)):
                assert matrix[i][j] == pytest.approx(matrix[j][i], abs=1e-6)
        assert (viz / "embeddings.csv").exists()


class TestExitCodes:
    def test_usage_error_is_one(self):
        assert run(["no-such-verb"]) == 1
        assert run(["train"]) == 1  # missing required --data

    def test_data_error_is_two(self, tmp_path):
        assert run(["cooccur", "--data", str(tmp_path / "missing.jsonl"),
                    "--out-dir", str(tmp_path)]) == 2

    def test_malformed_data_is_two(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("not json\n")
        assert run(["cooccur", "--data", str(bad), "--out-dir", str(tmp_path)]) == 2

    def test_divergence_is_three(self, workspace, tmp_path):
        config = json.loads((workspace / "config.json").read_text())
        config["optimizer"]["transformer_lr"] = 1e18
        config["optimizer"]["head_lr"] = 1e18
        config["optimizer"]["epochs"] = 8
        cfg_path = tmp_path / "diverge.json"
        cfg_path.write_text(json.dumps(config))
        assert run([
            "train", "--data", str(workspace / "train.jsonl"),
            "--config", str(cfg_path), "--checkpoint", str(tmp_path / "m.ckpt"),
            "--out-dir", str(tmp_path),
        ]) == 3

    def test_ablation_flags_accepted(self, workspace, tmp_path):
        assert run([
            "train", "--data", str(workspace / "train.jsonl"),
            "--config", str(workspace / "config.json"), "--ablate", "both",
            "--checkpoint", str(tmp_path / "ablated.ckpt"), "--out-dir", str(tmp_path),
        ]) == 0


class TestPromptVariant:
    def test_prompt_train_eval_visualize(self, workspace, tmp_path):
        config = {
            "variant": "prompt",
            "backend": {"layers": 1, "d": 32, "heads": 2, "max_tokens": 192,
                        "decoder_layers": 1, "dropout": 0.0},
            "optimizer": {"transformer_lr": 1e-3, "head_lr": 3e-3, "warmup_ratio": 0.05,
                          "batch_size": 4, "epochs": None, "steps": 30,
                          "max_grad_norm": 5.0},
            "structure": {"max_span_length": 4, "max_input_length": 512,
                          "window": 192, "stride": 96, "role_block": "prefix"},
            "d_reduced": 4,
            "d_interaction": 8,
            "seed": 2,
        }
        cfg_path = tmp_path / "prompt.json"
        cfg_path.write_text(json.dumps(config))
        ckpt = tmp_path / "prompt.ckpt"
        assert run([
            "train", "--data", str(workspace / "train.jsonl"), "--config", str(cfg_path),
            "--templates", str(workspace / "templates.json"),
            "--checkpoint", str(ckpt), "--out-dir", str(tmp_path),
        ]) == 0
        assert run([
            "eval", "--checkpoint", str(ckpt), "--data", str(workspace / "test.jsonl"),
            "--report", str(tmp_path / "report.json"), "--out-dir", str(tmp_path),
        ]) == 0
        viz = tmp_path / "viz"
        assert run([
            "visualize", "--checkpoint", str(ckpt), "--data", str(workspace / "test.jsonl"),
            "--index", "0", "--out-dir", str(viz),
        ]) == 0
        assert (viz / "clue_heatmap.csv").exists()
        assert (viz / "role_similarity.csv").exists()
