"""TOML run configuration with schema validation.

A config file has up to four tables, all optional::

    [train]        # TrainConfig scalars: epochs, reward_scheme, encoder, v_max, plastic, seed
    [encoder]      # EncoderConfig
    [network]      # ColumnNetConfig, with sub-tables [network.stdp], [network.rstdp], [network.neuron]
    [experiment]   # ExperimentConfig

Every key is checked against the dataclass it lands in before anything runs.
Errors name the offending field by its dotted path, e.g. ``network.stdp.a_plus``.
"""
from __future__ import annotations

import dataclasses
import sys
import typing
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .column import ColumnNetConfig
from .core import NeuronParams
from .encoders import EncoderConfig
from .errors import ConfigurationError
from .plasticity import StdpParams
from .train import ExperimentConfig, TrainConfig

_NESTED = {
    (ColumnNetConfig, "stdp"): StdpParams,
    (ColumnNetConfig, "rstdp"): StdpParams,
    (ColumnNetConfig, "neuron"): NeuronParams,
}
_SECTIONS = ("train", "encoder", "network", "experiment")


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs, resolved from defaults plus a TOML file."""

    train: TrainConfig = field(default_factory=TrainConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)

    def with_seed(self, seed: int) -> "RunConfig":
        """Route one master seed into every seeded component."""
        t = self.train
        return replace(self, train=replace(t, seed=seed,
                                           encoder_config=replace(t.encoder_config, seed=seed),
                                           network=replace(t.network, seed=seed)))

    def to_dict(self) -> dict:
        t = self.train.to_dict()
        return {
            "train": {k: v for k, v in t.items() if k not in ("encoder_config", "network")},
            "encoder": t["encoder_config"],
            "network": t["network"],
            "experiment": dataclasses.asdict(self.experiment),
        }


def _check_value(path: str, value: Any, annotation) -> Any:
    origin = typing.get_origin(annotation)
    if origin is typing.Union:
        args = [a for a in typing.get_args(annotation) if a is not type(None)]
        if value is None:
            return None
        return _check_value(path, value, args[0])
    if annotation is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{path}: expected a boolean, got {value!r}")
        return value
    if annotation is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{path}: expected an integer, got {value!r}")
        return value
    if annotation is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if annotation is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"{path}: expected a string, got {value!r}")
        return value
    return value


def _build(cls, data: dict, path: str, base=None):
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a table")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        where = f"{path}.{key}"
        if key not in names:
            raise ConfigurationError(f"{where}: unknown field (valid: {', '.join(sorted(names))})")
        nested = _NESTED.get((cls, key))
        if nested is not None:
            current = getattr(base, key) if base is not None else nested()
            kwargs[key] = _build(nested, value, where, current)
        else:
            kwargs[key] = _check_value(where, value, hints[key])
    try:
        return replace(base, **kwargs) if base is not None else cls(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def config_from_dict(data: dict, base: Optional[RunConfig] = None) -> RunConfig:
    """Validate a parsed TOML document and overlay it on ``base`` (defaults if None)."""
    base = base or RunConfig()
    for key in data:
        if key not in _SECTIONS:
            raise ConfigurationError(f"{key}: unknown section (valid: {', '.join(_SECTIONS)})")
    t = base.train
    train_scalars = dict(data.get("train", {}))
    for nested in ("encoder_config", "network"):
        if nested in train_scalars:
            raise ConfigurationError(f"train.{nested}: use the [{'encoder' if nested == 'encoder_config' else 'network'}] table")
    enc = _build(EncoderConfig, data["encoder"], "encoder", t.encoder_config) if "encoder" in data else t.encoder_config
    net = _build(ColumnNetConfig, data["network"], "network", t.network) if "network" in data else t.network
    train = _build(TrainConfig, train_scalars, "train", replace(t, encoder_config=enc, network=net))
    exp = _build(ExperimentConfig, data["experiment"], "experiment", base.experiment) \
        if "experiment" in data else base.experiment
    return RunConfig(train, exp)


def load_config(path) -> RunConfig:
    """Read and validate a TOML config file."""
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise FileNotFoundError(f"cannot read config {p}: {exc.strerror}") from None
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"{p}: not valid TOML ({exc})") from None
    return config_from_dict(data)
