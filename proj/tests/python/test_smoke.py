import math

import pytest

import qfsl


def small_spec():
    spec = qfsl.SynthSpec()
    spec.num_source, spec.num_target = 6, 3
    spec.per_class, spec.feature_dim, spec.attr_dim = 10, 8, 5
    return spec


def quick_config():
    cfg = qfsl.TrainConfig()
    cfg.iterations, cfg.batch_size, cfg.learning_rate = 50, 16, 0.05
    return cfg


def test_harmonic_and_mca():
    assert abs(qfsl.harmonic(92.4, 64.3) - 75.8) <= 0.05
    assert qfsl.mca([1.0, 0.0, 1.0]) == pytest.approx(2 / 3)


def test_generate_train_evaluate(tmp_path):
    data = qfsl.generate_synthetic(small_spec())
    assert data.num_source == 6 and data.num_target == 3
    assert len(data) == 90
    result = qfsl.train(data, quick_config())
    assert len(result.losses) == 50
    assert all(math.isfinite(v) for v in result.losses)
    report = qfsl.evaluate(result.model, data, "generalized")
    assert 0.0 <= report["h"] <= 1.0
    conv = qfsl.evaluate(result.model, data, "conventional")
    assert conv["mca_s"] is None and conv["bias_rate"] == 0.0

    path = tmp_path / "model.txt"
    result.model.save(str(path))
    loaded = qfsl.load_model(str(path))
    assert loaded.checksum() == result.model.checksum()
    assert (loaded.scoring == result.model.scoring).all()


def test_dataset_round_trip(tmp_path):
    data = qfsl.generate_synthetic(small_spec())
    qfsl.save_dataset(data, str(tmp_path))
    again = qfsl.load_dataset(str(tmp_path))
    assert again.class_names == data.class_names
    assert again.count("target-pool") == data.count("target-pool")


def test_errors_map_to_exceptions(tmp_path):
    cfg = quick_config()
    cfg.iterations = 0
    with pytest.raises(qfsl.ConfigError):
        qfsl.train(qfsl.generate_synthetic(small_spec()), cfg)
    with pytest.raises(qfsl.DataError):
        qfsl.load_dataset(str(tmp_path / "missing"))
    with pytest.raises(qfsl.ConfigError):
        cfg.mode = "sideways"


def test_gradcheck_and_cli():
    passed, err = qfsl.gradcheck()
    assert passed and err <= 1e-5
    code, out, _ = qfsl.run_cli(["gradcheck"])
    assert code == 0 and "PASS" in out
