"""JSON config loading for the train/eval pipelines.

A config file is a flat JSON object per pipeline, with nested blocks for
loss weights and the network, e.g.::

    {"data_dir": "imgs", "iterations": 2000,
     "loss_weights": {"style": 120.0, "use_style": true},
     "unet": {"depth": 4, "encoder_channels": [16, 32, 64, 64]}}

CLI flags override file values.
"""

from __future__ import annotations

import json
from dataclasses import fields

from .evaluate import EvalConfig
from .losses import LossWeights
from .train import TrainConfig
from .unet import UNetConfig


class ConfigError(ValueError):
    pass


def _build(cls, data, nested=()):
    allowed = {f.name for f in fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(
            f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in dict(nested):
            value = _build(dict(nested)[key], value)
        elif isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v
                          for v in value)
        kwargs[key] = value
    return cls(**kwargs)


def train_config(data=None, path=None, **overrides):
    data = dict(data or {})
    if path:
        with open(path) as f:
            data.update(json.load(f))
    data.update({k: v for k, v in overrides.items() if v is not None})
    return _build(TrainConfig, data,
                  nested=(("loss_weights", LossWeights), ("unet", UNetConfig)))


def eval_config(data=None, path=None, **overrides):
    data = dict(data or {})
    if path:
        with open(path) as f:
            data.update(json.load(f))
    data.update({k: v for k, v in overrides.items() if v is not None})
    if isinstance(data.get("weights"), dict):
        data["weights"] = dict(data["weights"])
    return _build(EvalConfig, data)
