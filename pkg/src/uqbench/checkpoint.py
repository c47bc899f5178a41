"""Model checkpoints as JSON with byte-exact float round trips.

Field order is fixed: format_version, head_kind, num_classes, layers
(dims, activation, flat row-major weights), dropout_rate, train_config,
seed. Loading reconstructs the model bit-identically.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .exceptions import ConfigError
from .jsonio import read_json, write_text_atomic, dumps_canonical
from .nn import Layer, MLPModel, TrainConfig

FORMAT_VERSION = 1


def train_config_to_dict(config: TrainConfig) -> dict:
    return {
        "learning_rate": float(config.learning_rate),
        "epochs": int(config.epochs),
        "batch_size": int(config.batch_size),
        "seed": int(config.seed),
        "class_weights": None
        if config.class_weights is None
        else [float(w) for w in config.class_weights],
        "loss_kind": config.loss_kind,
        "anneal_epochs": int(config.anneal_epochs),
        "pn_concentration": float(config.pn_concentration),
        "optimizer": config.optimizer,
    }


def train_config_from_dict(data: dict) -> TrainConfig:
    return TrainConfig(
        learning_rate=data["learning_rate"],
        epochs=data["epochs"],
        batch_size=data["batch_size"],
        seed=data["seed"],
        class_weights=data.get("class_weights"),
        loss_kind=data["loss_kind"],
        anneal_epochs=data["anneal_epochs"],
        pn_concentration=data["pn_concentration"],
        optimizer=data.get("optimizer", "adam"),
    )


def checkpoint_text(model: MLPModel, train_config: TrainConfig, seed: int) -> str:
    for i, layer in enumerate(model.layers):
        if not (np.all(np.isfinite(layer.weight)) and np.all(np.isfinite(layer.bias))):
            raise ConfigError(f"layer {i} holds non-finite parameters; refusing to save")
    doc = {
        "format_version": FORMAT_VERSION,
        "head_kind": model.head_kind,
        "num_classes": model.num_classes,
        "layers": [
            {
                "in_dim": layer.in_dim,
                "out_dim": layer.out_dim,
                "activation": layer.activation,
                "weights": [float(w) for w in layer.weight.ravel()],
                "bias": [float(b) for b in layer.bias],
            }
            for layer in model.layers
        ],
        "dropout_rate": float(model.dropout_rate),
        "train_config": train_config_to_dict(train_config),
        "seed": int(seed),
    }
    return dumps_canonical(doc)


def save_checkpoint(path: str | Path, model: MLPModel, train_config: TrainConfig, seed: int) -> None:
    write_text_atomic(path, checkpoint_text(model, train_config, seed))


def load_checkpoint(path: str | Path) -> tuple[MLPModel, TrainConfig, int]:
    doc = read_json(path)
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigError(
            f"unsupported checkpoint format_version {doc.get('format_version')!r} in {path}"
        )
    layers = []
    for spec in doc["layers"]:
        weight = np.array(spec["weights"], dtype=float).reshape(spec["in_dim"], spec["out_dim"])
        layers.append(Layer(weight=weight, bias=np.array(spec["bias"], dtype=float), activation=spec["activation"]))
    model = MLPModel(
        layers=layers,
        dropout_rate=doc["dropout_rate"],
        head_kind=doc["head_kind"],
        num_classes=doc["num_classes"],
    )
    return model, train_config_from_dict(doc["train_config"]), doc["seed"]
