"""
Configuration resolution and output provenance.

Flat key=value files are read through a pydantic-settings dotenv source.
Keys are matched to the fields of the target pydantic model
case-insensitively; unknown keys are an error. Precedence: explicit overrides (CLI) > file values > model defaults.
"""
import json
import logging
import typing
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Type, TypeVar

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from pydantic_settings import BaseSettings, SettingsConfigDict

logger = logging.getLogger(__name__)

TOOL_NAME = "sanlab"
__version__ = "0.1.0"
SCHEMA_VERSION = 1

M = TypeVar("M", bound=BaseModel)


class ConfigError(ValueError):
    pass


class RunConfig(BaseModel):
    """Options shared by every subcommand."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    action: str
    out_dir: Path = Path("out")
    seed: int = Field(0, ge=0, lt=2 ** 64)
    workers: int = Field(1, ge=1)
    config_path: Optional[Path] = None


class ConfigFile(BaseSettings):
    """Every key=value line of a config file, kept as a string under its original key."""

    model_config = SettingsConfigDict(extra="allow", case_sensitive=True, env_file_encoding="utf-8")

    @classmethod
    def settings_customise_sources(cls, settings_cls, init_settings, env_settings, dotenv_settings,
                                   file_secret_settings):
        # the process environment never leaks into a run
        return (dotenv_settings,)


def load_config_file(path: Optional[str]) -> Dict[str, str]:
    """Key/value pairs of a dotenv-style file; an empty dict when path is None."""
    if not path:
        return {}
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {k: str(v) for k, v in (ConfigFile(_env_file=file_path).model_extra or {}).items() if v is not None}
    logger.debug(f"Read {len(values)} settings from {path}")
    return values


def parse_param_overrides(pairs: Optional[Iterable[str]]) -> Dict[str, str]:
    """['KEY=VALUE', ...] -> {KEY: VALUE}."""
    result: Dict[str, str] = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"expected KEY=VALUE, got {pair!r}")
        result[key.strip()] = value.strip()
    return result


def _is_sequence_field(annotation: Any) -> bool:
    origin = typing.get_origin(annotation)
    if origin is typing.Union:
        return any(_is_sequence_field(arg) for arg in typing.get_args(annotation) if arg is not type(None))
    return origin in (tuple, list) or annotation in (tuple, list)


def _coerce(annotation: Any, value: Any) -> Any:
    if not isinstance(value, str):
        return value
    text = value.strip()
    if text[:1] in ("{", "["):
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON value {text!r}: {e}")
    if _is_sequence_field(annotation):
        return [item.strip() for item in text.split(",") if item.strip()]
    if text.lower() in ("none", "null") and typing.get_origin(annotation) is typing.Union:
        return None
    return text


def select_fields(model_cls: Type[BaseModel], values: Mapping[str, Any], strict: bool = True) -> Dict[str, Any]:
    """
    Map loosely cased keys onto model_cls field names.
    :param strict: raise ConfigError on keys that match no field; otherwise skip them.
    """
    fields = {name.lower(): name for name in model_cls.model_fields}
    selected: Dict[str, Any] = {}
    for key, value in values.items():
        name = fields.get(key.lower().replace("-", "_"))
        if name is None:
            if strict:
                raise ConfigError(f"unknown {model_cls.__name__} setting {key!r}")
            continue
        selected[name] = _coerce(model_cls.model_fields[name].annotation, value)
    return selected


def resolve(model_cls: Type[M], file_values: Optional[Mapping[str, Any]] = None,
            overrides: Optional[Mapping[str, Any]] = None, strict: bool = True) -> M:
    """
    Build model_cls from file values and overrides (overrides win).
    :raises ConfigError: on unknown keys (strict mode).
    :raises pydantic.ValidationError: on invalid values.
    """
    merged = select_fields(model_cls, file_values or {}, strict)
    merged.update(select_fields(model_cls, {k: v for k, v in (overrides or {}).items() if v is not None}, strict))
    model = model_cls(**merged)
    logger.info(f"Resolved {model_cls.__name__}: {model.model_dump(mode='json')}")
    return model


def provenance(config: Mapping[str, Any], seed: int) -> Dict[str, Any]:
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "config": _jsonable(dict(config)),
        "seed": int(seed),
    }


def provenance_header(prov: Mapping[str, Any]) -> Dict[str, str]:
    """key -> compact JSON value, written as "# key=value" header lines in TSV/CSV outputs."""
    return {key: json.dumps(_jsonable(prov[key]), sort_keys=True) for key in sorted(prov)}


def _jsonable(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return value.model_dump(mode="json")
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(_jsonable(k)): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_json(payload: Mapping[str, Any], path: Path) -> Path:
    """Stable JSON: sorted keys, fixed indentation, trailing newline."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(dict(payload)), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path
