import numpy as np
import pytest

from uqbench.checkpoint import checkpoint_text, load_checkpoint, save_checkpoint
from uqbench.exceptions import ConfigError
from uqbench.jsonio import dumps_canonical, format_float
from uqbench.nn import TrainConfig, build_mlp, forward
from uqbench.rng import RngStream


def test_round_trip_bit_exact(tmp_path):
    model = build_mlp(5, [7, 6], 3, RngStream(42), dropout_rate=0.15, head_kind="edl")
    config = TrainConfig(seed=9, loss_kind="edl", class_weights=[1.0, 0.5, 2.0])
    path = tmp_path / "model.json"
    save_checkpoint(path, model, config, seed=9)
    loaded, loaded_cfg, seed = load_checkpoint(path)
    assert seed == 9
    assert loaded.head_kind == "edl"
    assert loaded.dropout_rate == model.dropout_rate
    for a, b in zip(model.layers, loaded.layers):
        np.testing.assert_array_equal(a.weight, b.weight)
        np.testing.assert_array_equal(a.bias, b.bias)
        assert a.activation == b.activation
    np.testing.assert_array_equal(loaded_cfg.class_weights, config.class_weights)
    x = RngStream(1).standard_normal((4, 5))
    np.testing.assert_array_equal(forward(model, x), forward(loaded, x))


def test_serialization_is_deterministic(tmp_path):
    model = build_mlp(4, [5], 2, RngStream(3))
    config = TrainConfig()
    assert checkpoint_text(model, config, 0) == checkpoint_text(model, config, 0)


def test_field_order_and_float_format():
    model = build_mlp(2, [], 2, RngStream(1))
    text = checkpoint_text(model, TrainConfig(), 0)
    keys = ["format_version", "head_kind", "num_classes", "layers", "dropout_rate", "train_config", "seed"]
    positions = [text.index(f'"{k}"') for k in keys]
    assert positions == sorted(positions)
    # 17 significant digits round-trip exactly
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(1 / 3)) == 1 / 3


def test_refuses_non_finite_parameters(tmp_path):
    model = build_mlp(2, [], 2, RngStream(1))
    model.layers[0].weight[0, 0] = np.inf
    with pytest.raises(ConfigError):
        checkpoint_text(model, TrainConfig(), 0)


def test_unknown_format_version(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(dumps_canonical({"format_version": 99}))
    with pytest.raises(ConfigError):
        load_checkpoint(path)


def test_canonical_json_rejects_non_finite():
    with pytest.raises(ValueError):
        dumps_canonical({"x": float("nan")})
