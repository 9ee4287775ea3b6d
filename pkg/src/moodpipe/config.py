"""Pipeline configuration: TOML file plus CLI-flag overrides (flags win)."""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .corpus import KINDS
from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

# section -> {toml key -> config field}
_SCHEMA = {
    "corpus": {"root": "corpus_root", "kind": "kind"},
    "mel": {"bins": "mel_bins", "frame_ms": "frame_ms", "hop_ms": "hop_ms"},
    "netvlad": {"clusters": "clusters"},
    "train": {"lr": "lr", "epochs": "epochs", "batch": "batch", "seed": "seed"},
    "crossval": {"k": "k"},
    "output": {"dir": "out_dir"},
}


@dataclass
class PipelineConfig:
    corpus_root: str = ""
    kind: str = "three-response"
    mel_bins: int = 80
    frame_ms: int = 25
    hop_ms: int = 10
    clusters: int = 8
    lr: float = 1e-3
    epochs: int = 200
    batch: int = 8
    seed: int = 0
    k: int = 3
    out_dir: str = "out"

    def validate(self) -> "PipelineConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        for name, lo in (("mel_bins", 1), ("frame_ms", 1), ("hop_ms", 1),
                         ("clusters", 1), ("epochs", 1), ("k", 2)):
            if getattr(self, name) < lo:
                raise ConfigError(f"{name} must be >= {lo}")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.batch < 0:
            raise ConfigError("batch must be >= 0 (0 = full batch)")
        return self

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d).validate()

    @classmethod
    def from_toml(cls, path) -> "PipelineConfig":
        try:
            doc = tomllib.loads(Path(path).read_text(encoding="utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        values: dict = {}
        for section, table in doc.items():
            if section not in _SCHEMA:
                raise ConfigError(f"{path}: unknown section [{section}]")
            if not isinstance(table, dict):
                raise ConfigError(f"{path}: [{section}] must be a table")
            for key, value in table.items():
                if key not in _SCHEMA[section]:
                    raise ConfigError(f"{path}: unknown key {section}.{key}")
                values[_SCHEMA[section][key]] = value
        return cls.from_dict(values)

    def to_toml(self) -> str:
        """Serialize; from_toml(to_toml()) round-trips to an equal config."""
        lines = []
        for section, mapping in _SCHEMA.items():
            lines.append(f"[{section}]")
            for key, field_name in mapping.items():
                value = getattr(self, field_name)
                if isinstance(value, str):
                    lines.append(f'{key} = "{value}"')
                else:
                    lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)

    def override(self, **kwargs) -> "PipelineConfig":
        """New config with non-None kwargs replacing file/default values."""
        d = self.to_dict()
        for key, value in kwargs.items():
            if key not in d:
                raise ConfigError(f"unknown config key {key!r}")
            if value is not None:
                d[key] = value
        return PipelineConfig.from_dict(d)
