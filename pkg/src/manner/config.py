"""Sectioned key=value run configuration with strict schema validation.

Unknown sections or keys are rejected, every value is type-checked, and
semantic validation (model/trainer invariants) runs before anything heavy
is allocated.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .loss import StftConfig, default_resolutions
from .model import ModelConfig
from .trainer import TrainSettings

_BOOL_STATES = {
    "1": True, "yes": True, "true": True, "on": True,
    "0": False, "no": False, "false": False, "off": False,
}


def _to_bool(raw: str) -> bool:
    try:
        return _BOOL_STATES[raw.strip().lower()]
    except KeyError:
        raise ValueError(f"not a boolean: {raw!r}")


def _to_resolutions(raw: str) -> tuple[StftConfig, ...]:
    out = []
    for part in raw.split(","):
        fields = part.strip().split(":")
        if len(fields) != 3:
            raise ValueError(f"resolution must be fft:hop:win, got {part.strip()!r}")
        fft, hop, win = (int(x) for x in fields)
        out.append(StftConfig(fft_size=fft, hop=hop, win_length=win).validate())
    if not out:
        raise ValueError("at least one resolution required")
    return tuple(out)


# section -> key -> (converter, attribute)
_SCHEMA = {
    "model": {
        "kernel_size": int,
        "stride": int,
        "base_channels": int,
        "depth": int,
        "chunk_size": int,
        "variant": str,
        "channel_attention": _to_bool,
        "global_attention": _to_bool,
        "local_attention": _to_bool,
    },
    "trainer": {
        "epochs": int,
        "batch_size": int,
        "seed": int,
        "segment_seconds": float,
        "hop_seconds": float,
        "tempo_augment": _to_bool,
        "weighted_loss": _to_bool,
        "lr_min": float,
        "lr_max": float,
        "warmup_frac": float,
        "cycle_per_epoch": _to_bool,
        "val_every": int,
        "max_steps": int,
    },
    "data": {
        "noisy_dir": str,
        "clean_dir": str,
        "val_noisy_dir": str,
        "val_clean_dir": str,
    },
    "loss": {
        "resolutions": _to_resolutions,
    },
}


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    trainer: TrainSettings = field(default_factory=TrainSettings)
    noisy_dir: str | None = None
    clean_dir: str | None = None
    val_noisy_dir: str | None = None
    val_clean_dir: str | None = None
    resolutions: tuple[StftConfig, ...] = field(default_factory=default_resolutions)


def default_run_config() -> RunConfig:
    return RunConfig()


def parse_run_config(path) -> RunConfig:
    """Parse and fully validate a config file; raises ConfigError."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such config file")
    parser = configparser.ConfigParser(interpolation=None, default_section="")
    try:
        with open(path) as f:
            parser.read_file(f)
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    cfg = RunConfig()
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        schema = _SCHEMA[section]
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"{path}: unknown key {key!r} in [{section}]")
            try:
                value = schema[key](raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for [{section}] {key}: {exc}") from exc
            if section == "model":
                setattr(cfg.model, key, value)
            elif section == "trainer":
                setattr(cfg.trainer, key, value)
            elif section == "data":
                setattr(cfg, key, value)
            else:
                cfg.resolutions = value

    try:
        cfg.model.validate()
        cfg.trainer.validate()
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return cfg
