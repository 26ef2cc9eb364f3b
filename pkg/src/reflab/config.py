"""YAML configuration: one human-editable document, strictly validated
(unknown keys rejected, every violation reported at once)."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .data import GenConfig
from .training import HyperParams, TrainConfig


class ConfigError(Exception):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid config:\n" + "\n".join(f"  - {p}" for p in problems))


@dataclass
class ModelConfig:
    d: int = 32  # model width; must equal the dataset feature width
    diff_slots: int = 5
    max_len: int = 20
    sigma_init: float = 0.25
    seed: int = 0


@dataclass
class ServeConfig:
    host: str = "127.0.0.1"
    port: int = 8700
    record_log: str = "responses.jsonl"
    workers_per_sentence: int = 5


@dataclass
class Config:
    dataset: str = "dataset.jsonl"
    out_dir: str = "out"
    model: ModelConfig = field(default_factory=ModelConfig)
    hyper: HyperParams = field(default_factory=HyperParams)
    train: TrainConfig = field(default_factory=TrainConfig)
    gen: GenConfig = field(default_factory=GenConfig)
    serve: ServeConfig = field(default_factory=ServeConfig)


_SECTIONS = {f.name: f.type for f in fields(Config)}


def _fill(cls, data, where: str, problems: list[str]):
    if not isinstance(data, dict):
        problems.append(f"{where}: expected a mapping, got {type(data).__name__}")
        return cls()
    known = {f.name: f for f in fields(cls)}
    hints = typing.get_type_hints(cls)
    for key in data:
        if key not in known:
            problems.append(f"{where}.{key}: unknown key")
    kwargs = {}
    for name in known:
        if name not in data:
            continue
        value = data[name]
        hint = hints.get(name)
        want = hint if isinstance(hint, type) else None
        if want in (int, float) and isinstance(value, bool):
            problems.append(f"{where}.{name}: expected {want.__name__}, got bool")
            continue
        if want is float and isinstance(value, int):
            value = float(value)
        if want is not None and not isinstance(value, want):
            problems.append(
                f"{where}.{name}: expected {want.__name__}, got {type(value).__name__}"
            )
            continue
        kwargs[name] = value
    try:
        return cls(**kwargs)
    except TypeError as e:
        problems.append(f"{where}: {e}")
        return cls()


def config_from_dict(data: dict) -> Config:
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["top level: expected a mapping"])
    cfg = Config()
    for key, value in data.items():
        if key == "dataset":
            if isinstance(value, str):
                cfg.dataset = value
            else:
                problems.append("dataset: expected str")
        elif key == "out_dir":
            if isinstance(value, str):
                cfg.out_dir = value
            else:
                problems.append("out_dir: expected str")
        elif key == "model":
            cfg.model = _fill(ModelConfig, value, "model", problems)
        elif key == "hyper":
            cfg.hyper = _fill(HyperParams, value, "hyper", problems)
        elif key == "train":
            cfg.train = _fill(TrainConfig, value, "train", problems)
        elif key == "gen":
            cfg.gen = _fill(GenConfig, value, "gen", problems)
        elif key == "serve":
            cfg.serve = _fill(ServeConfig, value, "serve", problems)
        else:
            problems.append(f"{key}: unknown section")
    for name, obj in (("hyper", cfg.hyper), ("train", cfg.train), ("gen", cfg.gen)):
        try:
            obj.validate()
        except Exception as e:
            problems.append(f"{name}: {e}")
    if cfg.model.d < 8:
        problems.append("model.d: must be >= 8")
    if cfg.model.d != cfg.gen.d:
        problems.append(
            f"model.d ({cfg.model.d}) must equal gen.d ({cfg.gen.d}): the decoder "
            "mixes raw feature columns with its own states"
        )
    if problems:
        raise ConfigError(problems)
    return cfg


def load_config(path) -> Config:
    text = Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(text) or {}
    return config_from_dict(data)


def config_to_dict(cfg: Config) -> dict:
    return dataclasses.asdict(cfg)


def default_config_yaml() -> str:
    return yaml.safe_dump(config_to_dict(Config()), sort_keys=False)
