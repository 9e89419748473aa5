"""Smoke tests for the bundled extension: import, train a tiny model, push a
frame through the channel, and check the vgg16 summary numbers survive the
binding layer. The C++ test suites carry the real coverage."""

import math

import numpy as np
import pytest

import splitsim


def test_vgg16_summary_numbers():
    profile = splitsim.vgg16_profile()
    stats = splitsim.model_stats(profile, batch=16)
    assert stats.total_params == 138_357_544
    assert stats.total_mult_adds == 247_524_229_120
    assert math.isclose(splitsim.bytes_to_mb(stats.forward_backward_bytes), 1735.26, abs_tol=0.01)

    rows = splitsim.layer_table(profile, batch=16)
    assert rows[0].name == "block1_conv1"
    assert rows[0].param_count == 1_792
    assert rows[0].output_shape == [16, 64, 224, 224]


def test_tensor_numpy_round_trip():
    rng = np.random.default_rng(5)
    array = rng.normal(size=(3, 4, 4))
    tensor = splitsim.Tensor.from_numpy(array)
    assert tensor.shape == [3, 4, 4]
    back = tensor.numpy()
    np.testing.assert_array_equal(back, array)


def test_train_and_predict():
    train_set, test_set = splitsim.generate_dataset(seed=3, n_train=80, n_test=20, num_classes=4)
    assert train_set.size == 80 and test_set.size == 20

    model = splitsim.build_toy_cnn(num_classes=4, seed=3)
    config = splitsim.TrainConfig()
    config.epochs = 2
    config.seed = 3
    result = splitsim.train(model, train_set, config)
    assert len(result.loss_history) == 2
    assert result.loss_history[1] < result.loss_history[0]

    accuracy = splitsim.evaluate_accuracy(model, test_set)
    assert 0.0 <= accuracy <= 1.0
    label = splitsim.predict(model, test_set.input(0))
    assert 0 <= label < 4


def test_split_round_trip():
    model = splitsim.build_toy_cnn(num_classes=4, seed=3)
    plan = splitsim.make_split(model, target_layer=3, rho=0.5)
    assert plan.bottleneck.latent_channels == 8
    assert splitsim.split_payload_bytes(plan) == 2048

    _, test_set = splitsim.generate_dataset(seed=3, n_train=4, n_test=4, num_classes=4)
    x = test_set.input(0)
    latent = splitsim.encode(plan, splitsim.head_forward(plan, x))
    assert latent.shape == [8, 8, 8]
    assert 0 <= splitsim.split_predict(plan, x) < 4


def test_transmit_frame_deterministic():
    channel = splitsim.ChannelConfig()
    channel.latency_s = 1e-4
    channel.capacity_bps = 1e8
    channel.interface_bps = 1e8
    channel.loss_rate = 0.0

    transport = splitsim.TransportConfig()
    transport.protocol = splitsim.Protocol.TCP

    first = splitsim.transmit_frame(3000, channel, transport, seed=7)
    again = splitsim.transmit_frame(3000, channel, transport, seed=7)
    assert not first.failed
    assert first.completion_s == again.completion_s
    assert first.completion_s == pytest.approx(3000 * 8 / 1e8 + 1e-4)
    assert first.delivered == b"\x01" * 3000


def test_profile_scenario_report():
    profile = splitsim.vgg16_profile()
    cfg = splitsim.ScenarioConfig()
    cfg.mode = splitsim.Mode.SC
    cfg.frame_count = 20
    cfg.seed = 11
    cfg.channel.capacity_bps = 1e9
    cfg.channel.interface_bps = 1e9

    split = splitsim.find_layer(profile, "block5_conv2")
    report = splitsim.run_profile_scenario(cfg, profile, split_layer=split, rho=0.5,
                                           table_accuracy=0.9)
    assert report.total_frames == 20
    assert report.dropped_frames == 0
    assert report.accuracy == pytest.approx(0.9)
    assert len(report.frame_latencies_s) == 20
