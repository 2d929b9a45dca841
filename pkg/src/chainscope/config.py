"""Pipeline configuration: a flat ``key = value`` file with schema validation.

Lines starting with ``#`` are comments. Relative paths resolve against the
config file's directory. Unknown keys are rejected.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .features import FEATURE_CONFIGS, BurstParams
from .segments import Granularity, parse_granularity
from .vulns import Severity


@dataclass(frozen=True)
class PipelineConfig:
    dataset: Path
    findings: Optional[Path] = None
    excluded: Optional[Path] = None
    vocabulary: Optional[Path] = None
    aliases: Optional[Path] = None
    granularities: tuple = (Granularity.DAY1, Granularity.DAY3, Granularity.MONTH1, Granularity.ALL)
    feature_configs: tuple = FEATURE_CONFIGS
    epsilon: float = 1e-7
    temporal_gap_max: int = 1
    degree_threshold: int = 2
    value_run_min: int = 2
    k_min: int = 3
    k_max: int = 26
    seed: int = 42
    threshold_mode: str = "auto"
    target_rule: str = "most_malicious"
    blocks_per_day: int = 6000
    max_block: Optional[int] = None
    severity_high: float = 3.0
    severity_medium: float = 2.0
    severity_low: float = 1.0
    dedupe: str = "distinct"
    include_sourceless: bool = False
    silhouette_sample: int = 20000
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        problems = []
        if self.epsilon < 0 or self.epsilon >= 1:
            problems.append("epsilon must lie in [0, 1)")
        if not 2 <= self.k_min <= self.k_max:
            problems.append("need 2 <= k_min <= k_max")
        if self.threshold_mode not in ("auto", "absolute", "relative"):
            problems.append(f"threshold_mode {self.threshold_mode!r} not in auto/absolute/relative")
        if self.target_rule not in ("most_malicious", "largest"):
            problems.append(f"target_rule {self.target_rule!r} not in most_malicious/largest")
        if self.dedupe not in ("distinct", "multiset"):
            problems.append(f"dedupe {self.dedupe!r} not in distinct/multiset")
        if self.blocks_per_day < 1:
            problems.append("blocks_per_day must be positive")
        if self.max_block is not None and self.max_block < 1:
            problems.append("max_block must be positive")
        if self.silhouette_sample < 2:
            problems.append("silhouette_sample must be >= 2")
        if not (self.severity_high > self.severity_medium > self.severity_low):
            problems.append("severity weights must satisfy high > medium > low")
        for c in self.feature_configs:
            if c not in FEATURE_CONFIGS:
                problems.append(f"unknown feature config {c!r}")
        if not self.granularities:
            problems.append("no granularities selected")
        try:
            self.burst_params
        except ValueError as exc:
            problems.append(str(exc))
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def burst_params(self) -> BurstParams:
        return BurstParams(self.temporal_gap_max, self.degree_threshold, self.value_run_min)

    @property
    def severity_weights(self) -> dict:
        return {Severity.HIGH: self.severity_high, Severity.MEDIUM: self.severity_medium, Severity.LOW: self.severity_low}

    def mode_for(self, granularity: Granularity) -> str:
        if self.threshold_mode != "auto":
            return self.threshold_mode
        return "relative" if granularity is Granularity.ALL else "absolute"

    def replace(self, **changes) -> "PipelineConfig":
        return dataclasses.replace(self, **changes)

    def fingerprint(self) -> str:
        """Stable text of every setting except file locations."""
        parts = []
        for f in dataclasses.fields(self):
            if f.name == "extra" or f.name in _PATHS:
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(x.value if isinstance(x, Granularity) else str(x) for x in v)
            parts.append(f"{f.name}={v}")
        return "\n".join(parts)


_PATHS = ("dataset", "findings", "excluded", "vocabulary", "aliases")
_INTS = ("temporal_gap_max", "degree_threshold", "value_run_min", "k_min", "k_max", "seed", "blocks_per_day",
         "max_block", "silhouette_sample")
_FLOATS = ("epsilon", "severity_high", "severity_medium", "severity_low")
_STRS = ("threshold_mode", "target_rule", "dedupe")


def _coerce(key: str, raw: str, base: Path):
    raw = raw.strip()
    try:
        if key in _PATHS:
            p = Path(raw).expanduser()
            return p if p.is_absolute() else (base / p)
        if key in _INTS:
            return int(raw)
        if key in _FLOATS:
            return float(raw)
        if key in _STRS:
            return raw.lower()
        if key == "include_sourceless":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if key == "granularities":
            return tuple(parse_granularity(g) for g in raw.split(",") if g.strip())
        if key == "feature_configs":
            return tuple(c.strip() for c in raw.split(",") if c.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    raise ConfigError(f"unknown config key {key!r}")


def config_from_mapping(values: dict, base: Path = Path(".")) -> PipelineConfig:
    kwargs = {k: _coerce(k, str(v), base) for k, v in values.items()}
    if "dataset" not in kwargs:
        raise ConfigError("missing required key 'dataset'")
    try:
        return PipelineConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    values = {}
    for n, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key in values:
            raise ConfigError(f"{path}:{n}: duplicate key {key!r}")
        values[key] = value
    return config_from_mapping(values, path.parent)
