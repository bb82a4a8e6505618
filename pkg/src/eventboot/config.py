"""Pipeline configuration: one YAML file plus command-line overrides."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .bootstrap import BootstrapConfig
from .spike_cluster import ClusterConfig
from .synth import SynthSpec
from .tagger import TaggerConfig


class ConfigError(ValueError):
    def __init__(self, problems: list[str]) -> None:
        self.problems = problems
        super().__init__("invalid configuration:\n  " + "\n  ".join(problems))


DEFAULT_CONFIG = """\
# eventboot pipeline configuration. Relative paths resolve against this file.
paths:
  corpus: documents.jsonl      # news articles, JSONL document format
  embeddings: embeddings.txt   # text vector format
  gold: gold.jsonl             # gold trigger examples
  test: test.jsonl             # held-out gold triggers (optional)
  heldout: heldout.jsonl       # held-out documents to tag (optional)
  output: run
cluster:
  theta_pair: 1.0              # pair-score admission threshold
  min_shared_entities: 1
  max_cluster_size: 100
bootstrap:
  theta_event: 2               # extractor mentions of one type needed to label a cluster; 2 is the reference setting
  theta_sim: 0.4               # cosine above which a token becomes the trigger; 0.4 is the reference setting
  per_type_cap: 200            # examples kept per event type after balancing
  sample_seed: 0
  min_margin: 0.0
  multi_type: plurality        # mixed-type clusters: plurality (tie skipped) or skip
tagger:
  window: 2
  epochs: 10
  seed: 0
eval:
  resamples: 10000
  seed: 0
workers: null                  # parallel threads; null means all available cores
"""

_PATH_KEYS = ("corpus", "embeddings", "gold", "test", "heldout", "output")


@dataclass(frozen=True)
class EvalConfig:
    resamples: int = 10_000
    seed: int = 0


@dataclass
class PipelineConfig:
    paths: dict[str, Path | None] = field(default_factory=lambda: dict.fromkeys(_PATH_KEYS))
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    tagger: TaggerConfig = field(default_factory=TaggerConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    synth: SynthSpec = field(default_factory=SynthSpec)
    workers: int = 1


_SECTIONS = {
    "cluster": ClusterConfig,
    "bootstrap": BootstrapConfig,
    "tagger": TaggerConfig,
    "eval": EvalConfig,
    "synth": SynthSpec,
}


def _build_section(name: str, cls: type, raw: Mapping[str, Any], problems: list[str]) -> Any:
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        if key not in known:
            problems.append(f"{name}.{key}: unknown key")
            continue
        default = known[key].default
        if isinstance(default, (int, float)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                problems.append(f"{name}.{key}: expected a number, got {value!r}")
                continue
            if isinstance(default, int) and isinstance(value, float):
                if not value.is_integer():
                    problems.append(f"{name}.{key}: expected an integer, got {value!r}")
                    continue
                value = int(value)
        if key == "families":
            value = tuple(value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        problems.append(f"{name}: {exc}")
        return cls()


def build_config(raw: Mapping[str, Any] | None, base_dir: Path | None = None,
                 overrides: Mapping[str, Mapping[str, Any]] | None = None) -> PipelineConfig:
    """Validate a decoded config mapping, collecting every violation."""
    raw = dict(raw or {})
    overrides = overrides or {}
    problems: list[str] = []
    for key in raw:
        if key not in {"paths", "workers", *_SECTIONS}:
            problems.append(f"{key}: unknown key")

    paths: dict[str, Path | None] = dict.fromkeys(_PATH_KEYS)
    raw_paths = raw.get("paths") or {}
    if not isinstance(raw_paths, Mapping):
        problems.append("paths: must be a mapping")
        raw_paths = {}
    for key, value in {**raw_paths, **overrides.get("paths", {})}.items():
        if key not in _PATH_KEYS:
            problems.append(f"paths.{key}: unknown key")
        elif value is not None:
            p = Path(value)
            if base_dir is not None and not p.is_absolute() and key in raw_paths and key not in overrides.get("paths", {}):
                p = base_dir / p
            paths[key] = p

    sections = {}
    for name, cls in _SECTIONS.items():
        section = raw.get(name) or {}
        if not isinstance(section, Mapping):
            problems.append(f"{name}: must be a mapping")
            section = {}
        merged = {**section, **{k: v for k, v in overrides.get(name, {}).items() if v is not None}}
        sections[name] = _build_section(name, cls, merged, problems)

    workers = overrides.get("workers")
    if workers is None:
        workers = raw.get("workers")
    if workers is None:
        workers = os.cpu_count() or 1
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        problems.append(f"workers: must be a positive integer, got {workers!r}")
        workers = 1
    if problems:
        raise ConfigError(problems)
    return PipelineConfig(paths=paths, workers=workers, **sections)


def load_config(path: str | Path | None, overrides: Mapping[str, Mapping[str, Any]] | None = None) -> PipelineConfig:
    if path is None:
        return build_config({}, None, overrides)
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError([f"{path}: not valid YAML ({exc})"]) from None
    if raw is not None and not isinstance(raw, Mapping):
        raise ConfigError([f"{path}: top level must be a mapping"])
    return build_config(raw, path.parent, overrides)
