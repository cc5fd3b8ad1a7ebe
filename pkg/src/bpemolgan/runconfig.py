"""INI run configuration.

Sections ``[paths]``, ``[tokenizer]``, ``[generator]``, ``[discriminator]``
and ``[train]``. Every model and training key is optional; omitted keys take
the defaults of the config dataclasses. Relative paths resolve against the
config file's directory.

Example::

    [paths]
    corpus = data/train.smi
    vocab = out/vocab.json
    checkpoints = out/ckpt
    metrics = out/metrics.csv

    [generator]
    hidden_size = 64

    [train]
    batch_size = 32
    seed = 7
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .gan.config import ConfigError, DiscriminatorConfig, GeneratorConfig, TrainConfig

PATH_KEYS = ("corpus", "vocab", "checkpoints", "metrics")
DEFAULT_VOCAB_SIZE = 1024


@dataclass
class RunConfig:
    paths: dict[str, Path]
    vocab_size: int
    generator: dict
    discriminator: dict
    train: TrainConfig

    @property
    def seed(self) -> int:
        return self.train.seed

    def generator_config(self, vocab_size: int) -> GeneratorConfig:
        return GeneratorConfig(vocab_size=vocab_size, **self.generator)

    def discriminator_config(self, vocab_size: int) -> DiscriminatorConfig:
        return DiscriminatorConfig(vocab_size=vocab_size, **self.discriminator)

    def to_dict(self) -> dict:
        return {
            "paths": {k: str(v) for k, v in sorted(self.paths.items())},
            "tokenizer": {"vocab_size": self.vocab_size},
            "generator": dict(sorted(self.generator.items())),
            "discriminator": dict(sorted(self.discriminator.items())),
            "train": asdict(self.train),
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _typed_section(parser: configparser.ConfigParser, section: str, cls, skip=("vocab_size",)) -> dict:
    if not parser.has_section(section):
        return {}
    types = {f.name: f.type for f in fields(cls) if f.name not in skip}
    out = {}
    for key, raw in parser.items(section):
        if key not in types:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        kind = types[key] if isinstance(types[key], type) else {"int": int, "float": float}[types[key]]
        try:
            out[key] = kind(raw)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from exc
    return out


def load_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    known = {"paths", "tokenizer", "generator", "discriminator", "train"}
    extra = set(parser.sections()) - known
    if extra:
        raise ConfigError(f"unknown sections: {sorted(extra)}")
    base = path.parent
    paths = {}
    if parser.has_section("paths"):
        for key, raw in parser.items("paths"):
            if key not in PATH_KEYS:
                raise ConfigError(f"unknown key {key!r} in [paths]")
            p = Path(raw)
            paths[key] = p if p.is_absolute() else base / p
    missing = [k for k in PATH_KEYS if k not in paths]
    if missing:
        raise ConfigError(f"[paths] is missing {missing}")
    vocab_size = parser.getint("tokenizer", "vocab_size", fallback=DEFAULT_VOCAB_SIZE)
    gen = _typed_section(parser, "generator", GeneratorConfig)
    disc = _typed_section(parser, "discriminator", DiscriminatorConfig)
    train = TrainConfig(**_typed_section(parser, "train", TrainConfig, skip=()))
    # validate the model sections early with a placeholder vocabulary size
    GeneratorConfig(vocab_size=1, **gen)
    DiscriminatorConfig(vocab_size=1, **disc)
    return RunConfig(paths, vocab_size, gen, disc, train)
