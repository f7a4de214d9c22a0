import json

import pytest

from v2vbeam.cli import main

SCENARIO = {
    "codebook_size": 64,
    "trajectory": {
        "duration": 40.0,
        "sample_period": 0.1,
        "rx_heading": 1.5707963267948966,
        "origin": {"lat": 33.42, "lon": -111.93},
        "tx_waypoints": [[-60.0, 20.0], [60.0, 50.0]],
        "rx_waypoints": [[0.0, 0.0]],
    },
    "channel": {"n_subcarriers": 16, "noise_power": 1e-5, "seed": 2},
}


def experiment_doc(out_dir, **overrides):
    doc = {
        "seed": 5,
        "out_dir": str(out_dir),
        "dataset": {"synthetic": SCENARIO},
        "model": {"conv_channels": [8, 16], "dense_hidden": [32]},
        "training": {"epochs": 2},
        "baseline": {"bins_per_axis": 16},
        "m_values": [1, 5],
        "repeats": 1,
    }
    doc.update(overrides)
    return doc


@pytest.fixture
def experiment_config(tmp_path):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps(experiment_doc(tmp_path / "out")))
    return path


class TestGenerate:
    def test_writes_csv_and_prints_count(self, tmp_path, capsys):
        cfg = tmp_path / "scenario.json"
        cfg.write_text(json.dumps(SCENARIO))
        out = tmp_path / "data.csv"
        assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
        assert "wrote 400 samples" in capsys.readouterr().out
        assert out.exists()

    def test_fixed_seed_identical_bytes(self, tmp_path):
        cfg = tmp_path / "scenario.json"
        cfg.write_text(json.dumps(SCENARIO))
        out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["generate", "--config", str(cfg), "--out", str(out_a)])
        main(["generate", "--config", str(cfg), "--out", str(out_b)])
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_malformed_config_exit_2_names_field(self, tmp_path, capsys):
        cfg = tmp_path / "scenario.json"
        bad = {k: v for k, v in SCENARIO.items()}
        bad["trajectory"] = {
            k: v for k, v in SCENARIO["trajectory"].items() if k != "duration"
        }
        cfg.write_text(json.dumps(bad))
        code = main(["generate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")])
        assert code == 2
        assert "trajectory.duration" in capsys.readouterr().err

    def test_invalid_json_exit_2(self, tmp_path):
        cfg = tmp_path / "scenario.json"
        cfg.write_text("{not json")
        assert main(["generate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2

    def test_missing_config_exit_3(self, tmp_path):
        code = main(
            ["generate", "--config", str(tmp_path / "gone.json"), "--out", str(tmp_path / "x.csv")]
        )
        assert code == 3


class TestTrain:
    def test_smoke_run_writes_artifacts(self, experiment_config, tmp_path, capsys):
        assert main(["train", "--config", str(experiment_config)]) == 0
        out = tmp_path / "out"
        assert (out / "checkpoint.json").exists()
        history = (out / "history.csv").read_text().splitlines()
        assert len(history) == 3  # header + 2 epochs

    def test_same_seed_identical_history(self, experiment_config, tmp_path):
        out = tmp_path / "out"
        main(["train", "--config", str(experiment_config)])
        first = (out / "history.csv").read_bytes()
        main(["train", "--config", str(experiment_config)])
        assert (out / "history.csv").read_bytes() == first

    def test_missing_dataset_exit_3(self, tmp_path):
        doc = experiment_doc(tmp_path / "out")
        doc["dataset"] = {"csv": str(tmp_path / "missing.csv")}
        cfg = tmp_path / "experiment.json"
        cfg.write_text(json.dumps(doc))
        assert main(["train", "--config", str(cfg)]) == 3


class TestBaseline:
    def test_writes_database(self, experiment_config, tmp_path):
        assert main(["baseline", "--config", str(experiment_config)]) == 0
        db = json.loads((tmp_path / "out" / "fingerprint_db.json").read_text())
        assert db["codebook_size"] == 64
        assert len(db["bins"]) >= 1


class TestEval:
    def _train_and_generate(self, experiment_config, tmp_path):
        main(["train", "--config", str(experiment_config)])
        scenario = tmp_path / "scenario.json"
        scenario.write_text(json.dumps(SCENARIO))
        data = tmp_path / "data.csv"
        main(["generate", "--config", str(scenario), "--out", str(data)])
        return tmp_path / "out" / "checkpoint.json", data

    def test_eval_writes_report(self, experiment_config, tmp_path, capsys):
        ckpt, data = self._train_and_generate(experiment_config, tmp_path)
        out = tmp_path / "eval_out"
        code = main(
            [
                "eval",
                "--checkpoint", str(ckpt),
                "--dataset", str(data),
                "--m-values", "1,5,9,13",
                "--out", str(out),
                "--emit-svg",
            ]
        )
        assert code == 0
        report = (out / "report.csv").read_text().splitlines()
        assert report[0] == "predictor,metric,variant,M,mean,stddev"
        # 2 predictors x 3 series x 4 m values
        assert len(report) == 1 + 24
        assert (out / "report.json").exists()
        assert (out / "report.svg").exists()

    def test_repeats_populate_stddev(self, experiment_config, tmp_path):
        ckpt, data = self._train_and_generate(experiment_config, tmp_path)
        out = tmp_path / "eval_out"
        main(
            [
                "eval",
                "--checkpoint", str(ckpt),
                "--dataset", str(data),
                "--repeats", "5",
                "--out", str(out),
            ]
        )
        doc = json.loads((out / "report.json").read_text())
        assert doc["meta"]["repeats"] == 5
        assert all("stddev" in row for row in doc["rows"])

    def test_codebook_mismatch_exit_2(self, experiment_config, tmp_path):
        ckpt, data = self._train_and_generate(experiment_config, tmp_path)
        small = dict(SCENARIO, codebook_size=32)
        scenario = tmp_path / "small.json"
        scenario.write_text(json.dumps(small))
        small_csv = tmp_path / "small.csv"
        main(["generate", "--config", str(scenario), "--out", str(small_csv)])
        code = main(["eval", "--checkpoint", str(ckpt), "--dataset", str(small_csv)])
        assert code == 2

    def test_missing_checkpoint_exit_3(self, tmp_path):
        code = main(
            ["eval", "--checkpoint", str(tmp_path / "no.json"), "--dataset", str(tmp_path / "no.csv")]
        )
        assert code == 3


class TestReport:
    def test_full_experiment_with_repeats(self, tmp_path, capsys):
        cfg = tmp_path / "experiment.json"
        cfg.write_text(json.dumps(experiment_doc(tmp_path / "out", repeats=2)))
        assert main(["report", "--config", str(cfg), "--emit-svg"]) == 0
        out = tmp_path / "out"
        assert (out / "report.csv").exists()
        assert (out / "report.svg").exists()
        assert (out / "dataset.csv").exists()
        assert (out / "history_r0.csv").exists()
        assert (out / "history_r1.csv").exists()
        assert (out / "checkpoint_r1.json").exists()
        doc = json.loads((out / "report.json").read_text())
        assert doc["meta"]["repeats"] == 2

    def test_seed_override_changes_outputs(self, tmp_path):
        cfg = tmp_path / "experiment.json"
        cfg.write_text(json.dumps(experiment_doc(tmp_path / "out")))
        main(["report", "--config", str(cfg), "--seed", "5"])
        first = (tmp_path / "out" / "report.csv").read_text()
        main(["report", "--config", str(cfg), "--seed", "6"])
        second = (tmp_path / "out" / "report.csv").read_text()
        assert first != second

    def test_threads_flag_accepted(self, tmp_path):
        cfg = tmp_path / "experiment.json"
        cfg.write_text(json.dumps(experiment_doc(tmp_path / "out")))
        assert main(["--threads", "2", "report", "--config", str(cfg)]) == 0
