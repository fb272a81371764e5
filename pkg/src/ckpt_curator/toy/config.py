"""Flat ``key = value`` run configuration."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from ..errors import ConfigError

SEED_ENV = "CKPT_CURATOR_SEED"


@dataclass(frozen=True)
class TrainConfig:
    seed: int = 0
    n_train: int = 256
    n_valid: int = 256
    n_test: int = 2000
    sut_size: int = 0  # 0 -> n_valid
    n_features: int = 8
    n_classes: int = 3
    class_sep: float = 1.0
    hidden_sizes: tuple = (64, 64)
    dropout_p: float = 0.3
    input_noise_sigma: float = 0.5
    label_noise_p: float = 0.0
    lr: float = 0.05
    batch_size: int = 32
    max_epochs: int = 400
    patience: int = 5

    def __post_init__(self):
        if self.n_train < 1 or self.n_valid < 1:
            raise ConfigError("n_train and n_valid must be positive")
        if self.n_valid > self.n_train:
            raise ConfigError(f"n_valid ({self.n_valid}) must not exceed n_train ({self.n_train})")
        if self.max_epochs < 1:
            raise ConfigError("max_epochs must be >= 1")
        if not 0 <= self.dropout_p < 1 or not 0 <= self.label_noise_p < 1:
            raise ConfigError("dropout_p and label_noise_p must lie in [0, 1)")
        if self.input_noise_sigma < 0:
            raise ConfigError("input_noise_sigma must be >= 0")
        if self.n_classes < 2 or self.n_features < 1:
            raise ConfigError("need n_classes >= 2 and n_features >= 1")
        if self.batch_size < 1 or self.patience < 1 or self.lr <= 0:
            raise ConfigError("batch_size, patience and lr must be positive")
        if self.sut_size < 0 or self.sut_size > self.n_train:
            raise ConfigError(f"sut_size must lie in [0, n_train], got {self.sut_size}")

    @property
    def resolved_sut_size(self):
        return self.sut_size or self.n_valid

    @property
    def layer_sizes(self):
        return (self.n_features, *self.hidden_sizes, self.n_classes)

    def with_overrides(self, **kw):
        return replace(self, **kw)


def _coerce(name, raw, default):
    raw = raw.strip()
    try:
        if isinstance(default, tuple):
            return tuple(int(v) for v in raw.replace(" ", "").split(",") if v)
        if isinstance(default, bool):
            return raw.lower() in ("1", "true", "yes")
        if isinstance(default, int):
            return int(raw)
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {raw!r}") from None


def parse_config(text: str, **overrides) -> TrainConfig:
    defaults = {f.name: f.default for f in fields(TrainConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in defaults:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw, defaults[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


def load_config(path=None, seed=None, env=True) -> TrainConfig:
    """Read a config file; seed precedence is ``seed`` argument > env var > file.

    Pass ``env=False`` when re-reading a run's ``config.resolved``.
    """
    text = Path(path).read_text(encoding="utf-8") if path else ""
    if seed is None and env and os.environ.get(SEED_ENV):
        try:
            seed = int(os.environ[SEED_ENV])
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    return parse_config(text, seed=seed)


def format_config(cfg: TrainConfig) -> str:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
