"""Pipeline configuration and artifact provenance."""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields

from . import __version__
from .errors import ConfigError
from .warp import WarpConfig


def settings_from_dict(cls, data, section):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"config section {section!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {', '.join(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"bad {section!r} config: {exc}") from None


@dataclass(frozen=True)
class IngestSettings:
    units: str = "mm/day"
    station_id: str = ""
    date_column: int | str = 0
    value_column: int | str = 1
    has_header: bool | None = None
    date_format: str = "auto"
    delimiter: str = ","
    decimal: str = "."
    missing_codes: tuple = ("-9999", "")
    max_missing_fraction: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "missing_codes", tuple(self.missing_codes))
        if not 0 <= self.max_missing_fraction <= 1:
            raise ConfigError("max_missing_fraction must be in [0, 1]")

    def csv_format(self):
        from .ingest import CsvFormat

        return CsvFormat(
            date_column=self.date_column,
            value_column=self.value_column,
            has_header=self.has_header,
            date_format=self.date_format,
            delimiter=self.delimiter,
            decimal=self.decimal,
            units=self.units,
            missing_codes=self.missing_codes,
        )


@dataclass(frozen=True)
class ClusterSettings:
    k: int = 4
    seeds: tuple = tuple(range(10))
    max_iter: int = 100

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")


@dataclass(frozen=True)
class IndexSettings:
    wet_threshold: float = 1.0

    def __post_init__(self):
        if not self.wet_threshold > 0:
            raise ConfigError("wet_threshold must be > 0")


@dataclass(frozen=True)
class TrendSettings:
    first_start_year: int | None = None
    length_years: int = 26
    step_years: int = 19
    extend_last: bool = True
    normalization: str = "row"
    dead_band: float = 0.5
    strict: bool = False

    def __post_init__(self):
        if self.length_years < 1 or self.step_years < 1:
            raise ConfigError("length_years and step_years must be >= 1")
        if self.normalization not in ("row", "column"):
            raise ConfigError("normalization must be 'row' or 'column'")


@dataclass(frozen=True)
class FigureSettings:
    heatmap: bool = True
    align: tuple | None = None

    def __post_init__(self):
        if self.align is not None:
            if len(self.align) != 2:
                raise ConfigError("figures.align must list exactly two years")
            object.__setattr__(self, "align", tuple(int(y) for y in self.align))


@dataclass(frozen=True)
class PipelineConfig:
    input: str | None = None
    output_dir: str = "out"
    workers: int = 1
    ingest: IngestSettings = field(default_factory=IngestSettings)
    warp: WarpConfig = field(default_factory=WarpConfig)
    clustering: ClusterSettings = field(default_factory=ClusterSettings)
    indices: IndexSettings = field(default_factory=IndexSettings)
    trend: TrendSettings = field(default_factory=TrendSettings)
    figures: FigureSettings = field(default_factory=FigureSettings)

    # settings that do not influence any computed value
    EXECUTION_KEYS = ("input", "output_dir", "workers")

    @classmethod
    def from_dict(cls, data, base_dir=None):
        if not isinstance(data, dict):
            raise ConfigError("pipeline config must be a JSON object")
        sections = {
            "ingest": IngestSettings,
            "clustering": ClusterSettings,
            "indices": IndexSettings,
            "trend": TrendSettings,
            "figures": FigureSettings,
        }
        allowed = set(sections) | {"warp", "input", "output_dir", "workers"}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise ConfigError(f"unknown top-level config keys: {', '.join(unknown)}")
        kwargs = {name: settings_from_dict(kind, data.get(name), name) for name, kind in sections.items()}
        kwargs["warp"] = WarpConfig.from_dict(data.get("warp", {}))
        for key in cls.EXECUTION_KEYS:
            if key in data:
                kwargs[key] = data[key]
        if base_dir is not None:
            for key in ("input", "output_dir"):
                if kwargs.get(key) is not None and not os.path.isabs(kwargs[key]):
                    kwargs[key] = os.path.join(base_dir, kwargs[key])
        return cls(**kwargs)

    @classmethod
    def load(cls, path):
        data = load_json_config(path)
        return cls.from_dict(data, base_dir=os.path.dirname(os.path.abspath(path)))

    def computational(self):
        """Config dict embedded in artifacts (execution-only keys removed)."""
        d = asdict(self)
        for key in self.EXECUTION_KEYS:
            d.pop(key)
        return _jsonable(d)


def load_json_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc})") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def provenance(stage, config, inputs=()):
    """Provenance block: tool version, stage, config and input digests.

    Inputs are keyed by basename so that artifacts do not depend on where
    the run took place.
    """
    return {
        "tool": "rainwarp",
        "version": __version__,
        "stage": stage,
        "config": _jsonable(config),
        "inputs": {os.path.basename(str(p)): file_digest(p) for p in inputs},
    }
