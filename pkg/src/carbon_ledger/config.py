"""JSON configuration file.

Precedence when the CLI resolves a setting: command-line flag, then
environment (``CARBON_LEDGER_CI_URL``, ``CARBON_LEDGER_CI_ZONE``), then the
config file, then builtin defaults. Example ``carbon-ledger.json``::

    {
      "preset": "intel-blog-2023",
      "presets": {"my-gpu": {"p_cpu_w": 700, "p_mem_w_per_gb": 0.1,
                             "memory_gb": 80, "token_latency_s": 0.03}},
      "rates": {"input": 0.4, "output": 1.2},
      "intensity": {"zone": "DE-CASE-STUDY", "file": "zones.csv", "url": null, "retries": 2,
                    "value": null},
      "energy_log": {"columns": {"TotalEnergyConsumption": "Energy (uJ)"}, "energy_unit": "uJ"},
      "rounding": "truncate",
      "ledger": "carbon-ledger.jsonl"
    }
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .embodied import DEFAULT_PRESET, PRESETS, Preset, ServerPowerModel
from .intensity import ENV_URL, ENV_ZONE
from .operational import ColumnMapping
from .quantities import PowerQuantity, ROUNDING_MODES
from .tokens import ConsumptionRateModel

DEFAULT_CONFIG_NAME = "carbon-ledger.json"
_KNOWN_KEYS = {"preset", "presets", "rates", "intensity", "energy_log", "rounding", "ledger"}


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    preset: str = DEFAULT_PRESET
    presets: dict = field(default_factory=dict)
    rates: ConsumptionRateModel = field(default_factory=ConsumptionRateModel)
    ci_zone: str | None = None
    ci_file: str | None = None
    ci_url: str | None = None
    ci_retries: int = 2
    ci_value: str | None = None
    column_mapping: ColumnMapping = field(default_factory=ColumnMapping)
    rounding: str = "truncate"
    ledger: str | None = None
    source: str | None = None

    def all_presets(self) -> dict[str, Preset]:
        out = dict(PRESETS)
        out.update(self.presets)
        return out

    def get_preset(self, name: str | None = None) -> Preset:
        name = name or self.preset
        presets = self.all_presets()
        if name not in presets:
            raise ConfigError(f"unknown preset {name!r}; known presets: {', '.join(sorted(presets))}")
        return presets[name]


def _preset_from_dict(name: str, data: dict) -> Preset:
    try:
        return Preset(
            ServerPowerModel(PowerQuantity(data["p_cpu_w"]), data["p_mem_w_per_gb"], data["memory_gb"]),
            token_latency_s=float(data["token_latency_s"]),
            description=data.get("description", ""),
        )
    except KeyError as exc:
        raise ConfigError(f"preset {name!r} is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"preset {name!r}: {exc}") from None


def load_config(path=None, env=None) -> Config:
    """Load ``path`` (or ``./carbon-ledger.json`` if present) and overlay the environment."""
    env = os.environ if env is None else env
    explicit = path is not None
    path = Path(path) if explicit else Path(DEFAULT_CONFIG_NAME)
    data: dict = {}
    if path.exists():
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
    elif explicit:
        raise ConfigError(f"config file not found: {path}")

    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")

    cfg = Config(source=str(path) if data else None)
    cfg.preset = data.get("preset", cfg.preset)
    cfg.presets = {name: _preset_from_dict(name, p) for name, p in data.get("presets", {}).items()}
    rates = data.get("rates", {})
    try:
        cfg.rates = ConsumptionRateModel(rates.get("input", "0.4"), rates.get("output", "1.2"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"rates: {exc}") from None
    ci = data.get("intensity", {})
    cfg.ci_zone = ci.get("zone")
    cfg.ci_file = ci.get("file")
    cfg.ci_url = ci.get("url")
    cfg.ci_retries = int(ci.get("retries", cfg.ci_retries))
    cfg.ci_value = None if ci.get("value") is None else str(ci["value"])
    try:
        cfg.column_mapping = ColumnMapping.from_dict(data.get("energy_log"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.rounding = data.get("rounding", cfg.rounding)
    if cfg.rounding not in ROUNDING_MODES:
        raise ConfigError(f"rounding must be one of {sorted(ROUNDING_MODES)}, got {cfg.rounding!r}")
    cfg.ledger = data.get("ledger")

    if env.get(ENV_URL):
        cfg.ci_url = env[ENV_URL]
    if env.get(ENV_ZONE):
        # a zone from the environment outranks a fixed value from the file
        cfg.ci_zone = env[ENV_ZONE]
        cfg.ci_value = None
    return cfg
