"""Run configuration: hyperparameters, paths, and mode flags.

Config files are flat ``key=value`` text (``#`` comments allowed); CLI
flags override file values. Unknown keys are rejected.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

from .errors import DataError


@dataclass
class Hyperparams:
    embedding_dim: int = 300
    hidden_size: int = 256
    num_layers: int = 2
    gamma_r: float = 0.1
    gamma_s: float = 0.1
    m_r: int = 1024
    m_s: int = 1024
    lr_relation: float = 0.02
    lr_typevec_encoder: float = 0.001
    lr_embed_avg: float = 0.02
    lr_labeler: float = 0.02
    lr_subject: float = 0.02
    momentum: float = 0.9
    batch_size: int = 256
    dropout: float = 0.5
    alpha: float = 1.0
    relation_dim: int = 256
    entity_dim: int = 256
    init_range: float = 0.08
    epochs: int = 30
    transe_epochs: int = 50
    transe_lr: float = 0.01
    transe_margin: float = 1.0

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "dropout":
                if not 0.0 <= value < 1.0:
                    raise DataError("dropout must be in [0, 1)")
            elif f.name == "momentum":
                if not 0.0 <= value < 1.0:
                    raise DataError("momentum must be in [0, 1)")
            elif value <= 0 and f.name != "alpha":
                raise DataError(f"hyperparameter {f.name} must be positive")
        if self.alpha < 0:
            raise DataError("alpha must be >= 0")


@dataclass
class RunConfig:
    kb_triples: str = ""
    kb_aliases: str = ""
    kb_types: str = ""
    dataset: str = ""
    checkpoint_dir: str = ""
    embedding_file: str = ""
    entity_repr: str = "typevec"       # random | pretrained | typevec
    encoder: str = "bigru"             # bigru | avg
    pruning: str = "focused"           # focused | ngram
    combine: str = "softmax"           # softmax | raw
    hub_relations: str = ""            # comma-separated relation names
    freeze_entities: bool = False
    seed: int = 0
    workers: int = 1
    hyper: Hyperparams = field(default_factory=Hyperparams)

    def validate(self) -> None:
        if self.entity_repr not in ("random", "pretrained", "typevec"):
            raise DataError(f"bad entity_repr '{self.entity_repr}'")
        if self.encoder not in ("bigru", "avg"):
            raise DataError(f"bad encoder '{self.encoder}'")
        if self.pruning not in ("focused", "ngram"):
            raise DataError(f"bad pruning '{self.pruning}'")
        if self.combine not in ("softmax", "raw"):
            raise DataError(f"bad combine '{self.combine}'")
        if self.workers < 1:
            raise DataError("workers must be >= 1")
        self.hyper.validate()

    def require_paths(self, *names: str) -> None:
        for name in names:
            path = getattr(self, name)
            if not path:
                raise DataError(f"missing required path setting '{name}'")
            if name != "checkpoint_dir" and not os.path.exists(path):
                raise DataError(f"{name}: no such file '{path}'")

    def hub_relation_names(self) -> list[str]:
        return [h for h in self.hub_relations.split(",") if h]


_BOOL_KEYS = {"freeze_entities"}
_INT_KEYS = {"seed", "workers"}
_STR_KEYS = {"kb_triples", "kb_aliases", "kb_types", "dataset",
             "checkpoint_dir", "embedding_file", "entity_repr", "encoder",
             "pruning", "combine", "hub_relations"}


def _hyper_field_types() -> dict[str, type]:
    return {f.name: f.type for f in fields(Hyperparams)}


def apply_setting(config: RunConfig, key: str, raw: str) -> None:
    """Set one key=value pair, with type coercion; unknown keys rejected."""
    hyper_types = _hyper_field_types()
    try:
        if key in _STR_KEYS:
            setattr(config, key, raw)
        elif key in _INT_KEYS:
            setattr(config, key, int(raw))
        elif key in _BOOL_KEYS:
            if raw.lower() not in ("0", "1", "true", "false"):
                raise ValueError(f"bad boolean '{raw}'")
            setattr(config, key, raw.lower() in ("1", "true"))
        elif key in hyper_types:
            kind = hyper_types[key]
            is_int = kind in (int, "int")
            setattr(config.hyper, key,
                    int(raw) if is_int else float(raw))
        else:
            raise DataError(f"unknown config key '{key}'")
    except ValueError as exc:
        raise DataError(f"bad value for '{key}': {exc}") from exc


def load_config_file(path, config: RunConfig | None = None) -> RunConfig:
    config = config or RunConfig()
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key=value")
            key, _, raw = line.partition("=")
            try:
                apply_setting(config, key.strip(), raw.strip())
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return config
