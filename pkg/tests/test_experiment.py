import pytest

from v2vbeam.errors import CodebookMismatchError, ConfigError
from v2vbeam.experiment import (
    ExperimentConfig,
    build_layer_spec,
    check_codebook_compatible,
    experiment_config_from_json,
    resolve_dataset,
    run_experiment,
    single_run,
)

TINY_SCENARIO = {
    "codebook_size": 64,
    "trajectory": {
        "duration": 64.0,
        "sample_period": 0.1,
        "rx_heading": 1.5707963267948966,
        "origin": {"lat": 33.42, "lon": -111.93},
        "tx_waypoints": [[-60.0, 20.0], [60.0, 50.0]],
        "rx_waypoints": [[0.0, 0.0]],
    },
    "channel": {"n_subcarriers": 16, "noise_power": 1e-5, "seed": 2},
}


def tiny_config(**overrides):
    doc = {
        "seed": 3,
        "dataset": {"synthetic": TINY_SCENARIO},
        "model": {"conv_channels": [8, 16], "dense_hidden": [32]},
        "training": {"epochs": 2},
        "baseline": {"bins_per_axis": 16},
        "m_values": [1, 5],
        "repeats": 1,
    }
    doc.update(overrides)
    return doc


class TestConfigParsing:
    def test_valid_config(self):
        cfg = experiment_config_from_json(tiny_config())
        assert cfg.seed == 3
        assert cfg.training.epochs == 2
        assert cfg.training.seed == 3
        assert cfg.m_values == (1, 5)
        assert cfg.model.conv_channels == (8, 16)

    def test_missing_dataset_named(self):
        with pytest.raises(ConfigError) as exc:
            experiment_config_from_json({"seed": 1})
        assert "dataset" in str(exc.value)

    def test_both_sources_rejected(self):
        doc = tiny_config()
        doc["dataset"] = {"csv": "x.csv", "synthetic": TINY_SCENARIO}
        with pytest.raises(ConfigError):
            experiment_config_from_json(doc)

    def test_bad_m_values_named(self):
        with pytest.raises(ConfigError) as exc:
            experiment_config_from_json(tiny_config(m_values=[0, 5]))
        assert "m_values" in str(exc.value)

    def test_bad_input_mode_named(self):
        doc = tiny_config()
        doc["model"] = {"input_mode": "laser"}
        with pytest.raises(ConfigError) as exc:
            experiment_config_from_json(doc)
        assert "input_mode" in str(exc.value)

    def test_defaults_fill_in(self):
        cfg = experiment_config_from_json({"dataset": {"synthetic": TINY_SCENARIO}})
        assert cfg.train_frac == 0.6
        assert cfg.m_values == (1, 5, 9, 13)
        assert cfg.training.learning_rate == 0.01
        assert cfg.training.weight_decay == 1e-4
        assert cfg.training.batch_size == 128
        assert cfg.training.epochs == 30
        assert cfg.bins_per_axis == 32

    def test_exactly_one_source_invariant(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(dataset_csv=None, synthetic=None)


class TestResolveDataset:
    def test_synthetic_generation(self):
        cfg = experiment_config_from_json(tiny_config())
        ds = resolve_dataset(cfg)
        assert len(ds) == 640
        assert ds.codebook_size == 64

    def test_missing_csv_raises_file_not_found(self, tmp_path):
        doc = tiny_config()
        doc["dataset"] = {"csv": str(tmp_path / "nope.csv")}
        cfg = experiment_config_from_json(doc)
        with pytest.raises(FileNotFoundError):
            resolve_dataset(cfg)


class TestSingleRun:
    def test_pipeline_produces_reports(self):
        cfg = experiment_config_from_json(tiny_config())
        ds = resolve_dataset(cfg)
        run = single_run(ds, cfg, run_seed=3)
        assert run.model_report.n_test == 128
        assert run.baseline_report.n_test == 128
        assert len(run.history) == 2
        assert run.model_report.m_values == (1, 5)
        for v in run.model_report.accuracy_inclusion:
            assert 0.0 <= v <= 1.0

    def test_m_beyond_codebook_rejected(self):
        cfg = experiment_config_from_json(tiny_config(m_values=[1, 65]))
        ds = resolve_dataset(cfg)
        with pytest.raises(ConfigError):
            single_run(ds, cfg, run_seed=3)


class TestRunExperiment:
    def test_repeats_aggregate(self):
        cfg = experiment_config_from_json(tiny_config(repeats=2))
        ds = resolve_dataset(cfg)
        result = run_experiment(ds, cfg)
        assert len(result.runs) == 2
        assert result.runs[0].run_seed == 3
        assert result.runs[1].run_seed == 4
        predictors = {r.predictor for r in result.rows}
        assert predictors == {"model", "baseline"}
        # 2 predictors x 3 metric series x 2 m_values
        assert len(result.rows) == 12

    def test_deterministic_rows(self):
        cfg = experiment_config_from_json(tiny_config())
        ds = resolve_dataset(cfg)
        a = run_experiment(ds, cfg).rows
        b = run_experiment(ds, cfg).rows
        assert a == b


class TestCodebookCheck:
    def test_mismatch_raises(self):
        cfg = experiment_config_from_json(tiny_config())
        ds = resolve_dataset(cfg)
        spec = build_layer_spec(cfg.model, classes=32)
        with pytest.raises(CodebookMismatchError):
            check_codebook_compatible(spec, ds)

    def test_match_passes(self):
        cfg = experiment_config_from_json(tiny_config())
        ds = resolve_dataset(cfg)
        spec = build_layer_spec(cfg.model, classes=64)
        check_codebook_compatible(spec, ds)
