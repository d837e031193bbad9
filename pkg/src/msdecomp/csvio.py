"""CSV series files, ``key = value`` configuration files and error metrics."""

from __future__ import annotations

import csv
import math
from dataclasses import fields, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import admm
from .core import Decomposition, DecompositionError, DimensionMismatch, ValidationError
from .filters import BilateralParams, SeasonalFilterParams
from .pipeline import PipelineConfig
from .synth import SynthConfig

COMPONENT_HEADER = ["index", "trend", "seasonal_short", "seasonal_long", "remainder"]


class IoError(DecompositionError, OSError):
    pass


class ParseError(IoError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.line = line


class GapError(ParseError):
    pass


class ConfigError(ValidationError):
    pass


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _open_read(path):
    try:
        return open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _open_write(path):
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_table(path, columns: Optional[list[str]] = None) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Read a headed CSV whose first column is a contiguous integer index.

    Returns ``(index, {column: values})``.
    """
    with _open_read(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(path, 1, "empty file") from None
        except (UnicodeDecodeError, csv.Error) as exc:
            raise ParseError(path, 1, str(exc)) from None
        header = [h.strip() for h in header]
        if not header or header[0] != "index":
            raise ParseError(path, 1, "first header column must be 'index'")
        if columns is not None and header[1:] != columns:
            raise ParseError(path, 1, f"expected columns {['index'] + columns}, got {header}")
        names = header[1:]
        index, rows = [], []
        try:
            for lineno, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != len(header):
                    raise ParseError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
                try:
                    idx = int(row[0])
                    vals = [float(c) for c in row[1:]]
                except ValueError as exc:
                    raise ParseError(path, lineno, str(exc)) from None
                if not all(math.isfinite(v) for v in vals):
                    raise ParseError(path, lineno, "non-finite value")
                if index and idx != index[-1] + 1:
                    raise GapError(path, lineno, f"index {idx} does not follow {index[-1]}")
                index.append(idx)
                rows.append(vals)
        except (UnicodeDecodeError, csv.Error) as exc:
            raise ParseError(path, reader.line_num, str(exc)) from None
    if not rows:
        raise ParseError(path, 2, "no data rows")
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return np.array(index, dtype=np.int64), {n: data[:, i] for i, n in enumerate(names)}


def read_series_csv(path) -> np.ndarray:
    """Values of a two-column ``index,value`` file."""
    return read_series_with_index(path)[1]


def read_series_with_index(path) -> tuple[np.ndarray, np.ndarray]:
    index, cols = read_table(path, ["value"])
    return index, cols["value"]


def write_series_csv(path, values, start_index: int = 0) -> None:
    with _open_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "value"])
        for i, v in enumerate(np.asarray(values, dtype=np.float64)):
            w.writerow([start_index + i, _fmt(v)])


def write_components_csv(path, d: Decomposition, start_index: int = 0) -> None:
    with _open_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COMPONENT_HEADER)
        for i in range(len(d)):
            w.writerow([start_index + i, _fmt(d.trend[i]), _fmt(d.seasonal_short[i]),
                        _fmt(d.seasonal_long[i]), _fmt(d.remainder[i])])


def read_components_csv(path) -> tuple[np.ndarray, Decomposition]:
    index, cols = read_table(path, COMPONENT_HEADER[1:])
    return index, Decomposition(cols["trend"], cols["seasonal_short"], cols["seasonal_long"],
                                cols["remainder"])


def mse(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"length mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


# --------------------------------------------------------------------------
# configuration files

def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def read_config(path) -> dict[str, str]:
    with _open_read(path) as fh:
        try:
            text = fh.read()
        except UnicodeDecodeError as exc:
            raise ParseError(path, 1, str(exc)) from None
    return parse_config_text(text, str(path))


def _coerce(value: str, kind, key: str):
    try:
        if kind is bool:
            low = value.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(value)
        if kind is int:
            return int(value)
        if kind == "optional_float":
            return None if value.lower() == "none" else float(value)
        return float(value)
    except ValueError:
        raise ConfigError(f"bad value for {key!r}: {value!r}") from None


_SYNTH_TYPES = {"length": int, "period_short": int, "period_long": int, "trend_changes": int,
                "seed": int, "recent_window": int, "include_short": bool, "include_long": bool}

# flat key -> (section, field, type)
_PIPELINE_KEYS = {
    "lambda1": ("lambdas", 0, float),
    "lambda2": ("lambdas", 1, float),
    "lambda3": ("lambdas", 2, float),
    "lowres_lambda_a": ("lowres_trend_lambdas", 0, float),
    "lowres_lambda_b": ("lowres_trend_lambdas", 1, float),
    "anchor_long_level": ("top", "anchor_long_level", bool),
}
for _f in fields(admm.AdmmConfig):
    _PIPELINE_KEYS[_f.name] = ("admm", _f.name, int if _f.name == "max_iterations" else float)
_BILATERAL_KINDS = {"half_window": int, "sigma_value": "optional_float"}
_SEASONAL_KINDS = {"num_periods": int, "phase_half_window": int, "include_own_period": bool,
                   "sigma_value": "optional_float"}
for _prefix, _section in (("", ""), ("lowres_", "lowres_")):
    for _f in fields(BilateralParams):
        _PIPELINE_KEYS[f"{_prefix}bilateral_{_f.name}"] = (
            f"{_section}bilateral", _f.name, _BILATERAL_KINDS.get(_f.name, float))
    for _f in fields(SeasonalFilterParams):
        _PIPELINE_KEYS[f"{_prefix}seasonal_{_f.name}"] = (
            f"{_section}seasonal_filter", _f.name, _SEASONAL_KINDS.get(_f.name, float))
_PIPELINE_KEYS["lowres_refine_passes"] = ("top", "lowres_refine_passes", int)
_SECTIONS = ("admm", "bilateral", "seasonal_filter", "lowres_bilateral", "lowres_seasonal_filter")

# keys of the split itself, accepted in synth files so one file can drive a full run
SPLIT_KEYS = {"high_len": int, "factor": int}


def synth_config_from(values: dict[str, str]) -> tuple[SynthConfig, dict[str, int]]:
    """Build a :class:`SynthConfig`; unknown keys are an error."""
    known = set(SynthConfig.field_names())
    kwargs, split = {}, {}
    for key, value in values.items():
        if key in SPLIT_KEYS:
            split[key] = _coerce(value, int, key)
        elif key in known:
            kwargs[key] = _coerce(value, _SYNTH_TYPES.get(key, float), key)
        else:
            raise ConfigError(f"unknown synth config key {key!r}")
    return SynthConfig(**kwargs), split


def pipeline_config_from(values: dict[str, str],
                         base: PipelineConfig = PipelineConfig()) -> PipelineConfig:
    """Apply flat ``key = value`` overrides to `base`; unknown keys are an error."""
    lambdas = list(base.lambdas)
    low = list(base.lowres_trend_lambdas)
    sections: dict[str, dict] = {name: {} for name in _SECTIONS + ("top",)}
    for key, value in values.items():
        if key not in _PIPELINE_KEYS:
            raise ConfigError(f"unknown pipeline config key {key!r}")
        section, name, kind = _PIPELINE_KEYS[key]
        v = _coerce(value, kind, key)
        if section == "lambdas":
            lambdas[name] = v
        elif section == "lowres_trend_lambdas":
            low[name] = v
        else:
            sections[section][name] = v
    nested = {name: replace(getattr(base, name), **sections[name]) for name in _SECTIONS}
    return replace(base, lambdas=tuple(lambdas), lowres_trend_lambdas=tuple(low),
                   **nested, **sections["top"])


def pipeline_config_items(cfg: PipelineConfig) -> dict[str, object]:
    """Flat representation of `cfg` using the config-file key names."""
    out: dict[str, object] = {}
    for key, (section, name, _) in _PIPELINE_KEYS.items():
        if section == "lambdas":
            out[key] = cfg.lambdas[name]
        elif section == "lowres_trend_lambdas":
            out[key] = cfg.lowres_trend_lambdas[name]
        elif section == "top":
            out[key] = getattr(cfg, name)
        else:
            out[key] = getattr(getattr(cfg, section), name)
    return out


def format_config(items: dict[str, object]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in items.items())


def split_known(values: dict[str, str], keys: Iterable[str]) -> dict[str, str]:
    keys = set(keys)
    return {k: v for k, v in values.items() if k in keys}
