from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigurationError
from .schemas import (
    AblationSettings, DataConfig, ModelConfig, TrainConfig, TrainSettings,
)

OUTPUT_DIR_ENV = "PFPN_OUTPUT_DIR"
TRAIN_LOG_NAME = os.getenv("PFPN_TRAIN_LOG", "train_log.jsonl")
TRACE_LOG_NAME = os.getenv("PFPN_TRACE_LOG", "trace.jsonl")
NUM_WORKERS = int(os.getenv("PFPN_NUM_WORKERS", "1"))

CHECKPOINT_NAME = "model.pt"
RESOLVED_CONFIG_NAME = "config.cfg"


class RunConfig(BaseModel):
    """Everything a subcommand can be configured with; every field has a default."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    output_dir: Path = Path("runs/default")
    model: ModelConfig = Field(default_factory=ModelConfig)
    data: DataConfig = Field(default_factory=DataConfig)
    train: TrainSettings = Field(default_factory=TrainSettings)
    ablation: AblationSettings = Field(default_factory=AblationSettings)

    def train_config(self) -> TrainConfig:
        return TrainConfig.model_validate({
            **self.train.model_dump(),
            "model": self.model.model_dump(),
            "data": self.data.model_dump(),
        })


# -----------------------------
# Flat "dotted.key = value" text
# -----------------------------

# dotted key -> where it was set ("file:line" or "--key")
Origins = Dict[str, str]


def _strip_comment(line: str) -> str:
    """Drop a trailing comment: a '#' at line start or after whitespace, outside a JSON string."""
    in_string = escaped = False
    for i, ch in enumerate(line):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
        elif ch == '"':
            in_string = True
        elif ch == "#" and (i == 0 or line[i - 1].isspace()):
            return line[:i]
    return line


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except ValueError:
        return text


def parse_config_text(text: str, source: str = "<config>") -> Tuple[Dict[str, Any], Origins]:
    flat: Dict[str, Any] = {}
    origins: Origins = {}
    section = ""

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        where = f"{source}:{lineno}"

        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if not section:
                raise ConfigurationError(f"{where}: empty section header")
            continue

        if "=" not in line:
            raise ConfigurationError(f"{where}: expected 'key = value', got {line!r}")

        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{where}: missing key before '='")
        full = f"{section}.{key}" if section else key
        if full in flat:
            raise ConfigurationError(f"{where}: {full}: duplicate key (first set at {origins[full]})")
        flat[full] = _parse_value(value)
        origins[full] = where

    return flat, origins


def parse_overrides(args: Iterable[str]) -> Tuple[Dict[str, Any], Origins]:
    """Accepts '--a.b=value' items, the form click leaves in ctx.args."""
    flat: Dict[str, Any] = {}
    origins: Origins = {}
    for arg in args:
        if not arg.startswith("--") or "=" not in arg:
            raise ConfigurationError(f"{arg}: overrides must look like --section.key=value")
        key, value = arg[2:].split("=", 1)
        key = key.strip()
        if not key:
            raise ConfigurationError(f"{arg}: missing key")
        flat[key] = _parse_value(value.strip())
        origins[key] = f"--{key}"
    return flat, origins


def _nest(flat: Dict[str, Any], origins: Origins) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key in sorted(flat):
        node = nested
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigurationError(f"{origins[key]}: {key}: '{part}' is a value, not a section")
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigurationError(f"{origins[key]}: {key}: is a section, not a value")
        node[parts[-1]] = flat[key]
    return nested


def _origin_of(loc: Tuple[Any, ...], origins: Origins, default: str) -> Tuple[str, str]:
    parts = [str(p) for p in loc]
    dotted = ".".join(parts)
    # walk up to the closest key that was actually written
    while parts:
        key = ".".join(parts)
        if key in origins:
            return origins[key], dotted
        below = [k for k in origins if k.startswith(key + ".")]
        if below:
            return origins[below[0]], dotted
        parts.pop()
    return default, dotted


def _format_validation_error(err: ValidationError, origins: Origins, default: str) -> str:
    lines = []
    for e in err.errors():
        where, dotted = _origin_of(tuple(e["loc"]), origins, default)
        lines.append(f"{where}: {dotted or '<root>'}: {e['msg']}")
    return "\n".join(lines)


def output_dir_override() -> Optional[Path]:
    value = os.getenv(OUTPUT_DIR_ENV)
    return Path(value) if value else None


def load_run_config(path: Optional[Path | str] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """
    Read a config file (optional), apply --key=value overrides, then the
    PFPN_OUTPUT_DIR environment override. Errors name the file line or flag.
    """
    flat: Dict[str, Any] = {}
    origins: Origins = {}
    source = "<defaults>"

    if path is not None:
        path = Path(path)
        source = str(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"{path}: cannot read config: {e.strerror}") from e
        flat, origins = parse_config_text(text, source)

    o_flat, o_origins = parse_overrides(overrides)
    flat.update(o_flat)
    origins.update(o_origins)

    nested = _nest(flat, origins)
    env_dir = output_dir_override()
    if env_dir is not None:
        nested["output_dir"] = str(env_dir)
        origins["output_dir"] = f"${OUTPUT_DIR_ENV}"

    try:
        return RunConfig.model_validate(nested)
    except ValidationError as e:
        raise ConfigurationError(_format_validation_error(e, origins, source)) from e


def _flatten(prefix: str, value: Any, out: Dict[str, Any]) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            _flatten(f"{prefix}.{k}" if prefix else k, v, out)
    else:
        out[prefix] = value


def dump_run_config(config: RunConfig) -> str:
    """Inverse of parse_config_text for a validated config (dotted keys, JSON values)."""
    flat: Dict[str, Any] = {}
    _flatten("", config.model_dump(mode="json"), flat)
    return "".join(f"{k} = {json.dumps(v)}\n" for k, v in flat.items() if v is not None)


def config_reference() -> str:
    """Every accepted key with its default, one per line; unset optionals shown as null."""
    flat: Dict[str, Any] = {}
    _flatten("", RunConfig().model_dump(mode="json"), flat)
    width = max(len(k) for k in flat)
    return "\n".join(f"{k.ljust(width)} = {json.dumps(v)}" for k, v in flat.items())
