import json

import numpy as np
import pytest

import _stkd as stkd


def test_softmax_rows_sum_to_one():
    logits = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 1000.0]])
    p = stkd.softmax(logits)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert np.isfinite(p).all()
    expect = np.exp(logits[0] - logits[0].max())
    assert np.allclose(p[0], expect / expect.sum(), atol=1e-12)


def test_cross_entropy_value_and_gradient():
    logits = np.array([[0.2, -0.1, 0.4]])
    target = np.array([[0.0, 1.0, 0.0]])
    value, grad = stkd.cross_entropy(logits, target)
    p = stkd.softmax(logits)
    assert value == pytest.approx(-np.log(p[0, 1]), abs=1e-12)
    assert np.allclose(grad, p - target, atol=1e-12)


def test_kl_vanishes_for_identical_logits():
    logits = np.random.default_rng(0).normal(size=(4, 5))
    for t in (1.0, 4.0, 1000.0):
        value, grad = stkd.kd_softened_kl(logits, logits, t)
        assert abs(value) <= 1e-12
        assert np.abs(grad).max() <= 1e-12


def test_vanilla_kd_is_kl_plus_weighted_ce():
    rng = np.random.default_rng(1)
    s, t = rng.normal(size=(3, 4)), rng.normal(size=(3, 4))
    y = np.eye(4)[[0, 2, 1]]
    total, _ = stkd.vanilla_kd_loss(s, t, y, temperature=4.0, balance=0.7)
    kl, _ = stkd.kd_softened_kl(s, t, 4.0)
    ce, _ = stkd.cross_entropy(s, y)
    assert total == pytest.approx(kl + 0.7 * ce, abs=1e-12)


def test_mixup_fixed_lambda_blend():
    inputs = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, 2.0], [-1.0, 3.0]])
    labels = np.eye(4)
    rng = stkd.Rng(7)
    vb = stkd.make_virtual_batch(inputs, labels, mode="fixed", fixed_lambda=0.5, rng=rng)
    pair = np.asarray(vb.pair_index)
    assert np.allclose(vb.inputs, 0.5 * inputs + 0.5 * inputs[pair], atol=0)
    mixed = stkd.mixed_label(vb)
    assert np.allclose(mixed.sum(axis=1), 1.0, atol=1e-12)

    logits = np.random.default_rng(3).normal(size=(4, 4))
    value, grad = stkd.stkd_total_loss(logits, logits, vb)
    mix_value, _ = stkd.mix_loss(logits, vb)
    assert value == pytest.approx(mix_value, abs=1e-12)  # KL(p, p) = 0
    assert grad.shape == logits.shape


def test_network_forward_save_load(tmp_path):
    net = stkd.Network.mlp(input_dim=2, hidden=[8], classes=3, seed=42)
    batch = np.array([[0.1, -0.2], [1.0, 0.5]])
    logits = net.logits(batch)
    assert logits.shape == (2, 3)

    path = str(tmp_path / "net.ckpt")
    net.save(path)
    back = stkd.Network.load(path)
    assert back.param_checksum() == net.param_checksum()
    assert np.array_equal(back.logits(batch), logits)


def test_synthetic_determinism():
    a_x, a_y = stkd.generate_synthetic(seed=5, noise_sigma=0.2)
    b_x, b_y = stkd.generate_synthetic(seed=5, noise_sigma=0.2)
    assert np.array_equal(a_x, b_x)
    assert np.array_equal(a_y, b_y)
    assert a_x.shape == (300, 2)
    assert a_y.sum(axis=1).max() == 1.0


def test_experiment_pipeline(tmp_path):
    config = {
        "dataset": {
            "synthetic": {"classes": 3, "samples_per_class": 30, "input_dim": 2,
                          "noise_sigma": 0.1, "seed": 2},
            "test_fraction": 0.25,
        },
        "teacher": {"hidden": [8]},
        "student": {"hidden": [4]},
        "training": {"epochs": 4, "batch_size": 16, "optimizer": {"lr": 0.05},
                     "schedule": {"milestones": [], "factor": 0.1}},
        "methods": {"baseline": {}, "stkd": {"mix": {"mode": "fixed", "lambda": 0.5}}},
        "seeds": [1, 2, 3],
        "output_dir": str(tmp_path / "out"),
    }
    result = stkd.run_experiment(json.dumps(config))
    assert result["ok"]
    assert result["failed_runs"] == 0
    aggs = result["aggregates"]
    assert set(aggs) == {"teacher", "baseline", "stkd"}
    for entry in aggs.values():
        assert len(entry["per_seed_accuracies"]) == 3
        assert entry["median_accuracy"] == sorted(entry["per_seed_accuracies"])[1]
    assert (tmp_path / "out" / "reports.jsonl").exists()
    assert (tmp_path / "out" / "teacher-1.ckpt").exists()


def test_strict_config_rejects_unknown_keys():
    bad = {"dataset": {"synthetic": {}}, "methods": {"baseline": {}}, "typo_key": 1}
    with pytest.raises(stkd.ConfigError):
        stkd.echo_config(json.dumps(bad))
