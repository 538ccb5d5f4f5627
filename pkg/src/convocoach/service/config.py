"""Service configuration: YAML file with environment overrides.

Credentials come only from the environment and are never logged or echoed
back through any endpoint.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields

import yaml


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    storage_path: str = "./convocoach-data"
    stub_mode: bool = True
    stub_script_path: str | None = None
    seed_override: int | None = None
    banned_terms_path: str | None = None
    primary_base_url: str = ""
    primary_model: str = ""
    emoji_base_url: str = ""
    emoji_model: str = ""
    heartbeat_seconds: float = 20.0
    idle_timeout_seconds: float = 600.0
    free_turns: int = 2  # test override; sessions default to the study shape
    rounds_per_kind: int = 2
    primary_api_key: str = field(default="", repr=False)
    emoji_api_key: str = field(default="", repr=False)


_ENV_PREFIX = "CONVOCOACH_"
_BOOL_TRUE = {"1", "true", "yes", "on"}


def _coerce(raw: str, target_type: type):
    if target_type is bool:
        return raw.lower() in _BOOL_TRUE
    if target_type is int:
        return int(raw)
    if target_type is float:
        return float(raw)
    return raw


def load_config(path: str | None = None, env: dict[str, str] | None = None) -> ServiceConfig:
    env = env if env is not None else dict(os.environ)
    values: dict = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            loaded = yaml.safe_load(fh) or {}
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {path} must hold a mapping")
        values.update(loaded)
    for spec in fields(ServiceConfig):
        env_key = _ENV_PREFIX + spec.name.upper()
        if env_key in env:
            base_type = spec.type
            if spec.name in ("stub_script_path", "seed_override", "banned_terms_path"):
                values[spec.name] = _coerce(env[env_key], int if spec.name == "seed_override" else str)
            else:
                type_map = {"str": str, "int": int, "float": float, "bool": bool}
                first = str(base_type).split("|")[0].strip()
                values[spec.name] = _coerce(env[env_key], type_map.get(first, str))
    known = {spec.name for spec in fields(ServiceConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ServiceConfig(**values)
