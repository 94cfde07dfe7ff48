"""Embodied inference energy and carbon from a simple server power model.

energy = (P_cpu + P_mem_per_gb * memory_gb) * token_latency * token_count
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable

from .quantities import (
    CarbonIntensityValue,
    CarbonQuantity,
    EnergyQuantity,
    PowerQuantity,
    carbon_from_energy,
)


@dataclass(frozen=True)
class ServerPowerModel:
    p_cpu: PowerQuantity
    p_mem_per_gb: float
    memory_gb: float

    def __post_init__(self):
        if not isinstance(self.p_cpu, PowerQuantity):
            object.__setattr__(self, "p_cpu", PowerQuantity(self.p_cpu))
        for name in ("p_mem_per_gb", "memory_gb"):
            value = float(getattr(self, name))
            if not value >= 0:
                raise ValueError(f"{name} must be non-negative, got {value!r}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class InferenceProfile:
    token_latency_s: float
    token_count: int

    def __post_init__(self):
        if not float(self.token_latency_s) > 0:
            raise ValueError(f"token_latency_s must be positive, got {self.token_latency_s!r}")
        if int(self.token_count) != self.token_count or self.token_count < 0:
            raise ValueError(f"token_count must be a non-negative integer, got {self.token_count!r}")
        object.__setattr__(self, "token_latency_s", float(self.token_latency_s))
        object.__setattr__(self, "token_count", int(self.token_count))


@dataclass(frozen=True)
class Preset:
    model: ServerPowerModel
    token_latency_s: float
    description: str = ""


# Rough per-token server estimate published by Intel (2023) for a CPU host.
PRESETS = {
    "intel-blog-2023": Preset(
        ServerPowerModel(PowerQuantity(350.0), 0.1, 60.0),
        token_latency_s=0.47,
        description="350 W CPU + 0.1 W/GB x 60 GB memory, 0.47 s/token",
    ),
}
DEFAULT_PRESET = "intel-blog-2023"


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known presets: {', '.join(sorted(PRESETS))}") from None


def server_power(m: ServerPowerModel) -> PowerQuantity:
    return PowerQuantity(m.p_cpu.watts + m.p_mem_per_gb * m.memory_gb)


def embodied_energy(m: ServerPowerModel, p: InferenceProfile) -> EnergyQuantity:
    return EnergyQuantity(server_power(m).watts * p.token_latency_s * p.token_count)


def embodied_carbon(e: EnergyQuantity, ci: CarbonIntensityValue) -> CarbonQuantity:
    return carbon_from_energy(e, ci)


@dataclass(frozen=True)
class EmbodiedSession:
    """One code-generation session's embodied footprint.

    ``energy`` and ``carbon`` are derived from ``model``, ``profile`` and
    ``intensity`` by :meth:`compute`; constructing one by hand with
    inconsistent numbers raises.
    """

    timestamp: datetime
    profile: InferenceProfile
    energy: EnergyQuantity
    carbon: CarbonQuantity
    label: str = ""
    model: ServerPowerModel | None = field(default=None, compare=False)
    intensity: CarbonIntensityValue | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.model is not None:
            expected = embodied_energy(self.model, self.profile).joules
            if abs(expected - self.energy.joules) > 1e-9 * max(1.0, expected):
                raise ValueError("session energy is inconsistent with its power model and profile")
            if self.intensity is not None:
                grams = embodied_carbon(self.energy, self.intensity).grams_co2eq
                if abs(grams - self.carbon.grams_co2eq) > 1e-9 * max(1.0, grams):
                    raise ValueError("session carbon is inconsistent with its energy and intensity")

    @classmethod
    def compute(cls, model: ServerPowerModel, profile: InferenceProfile, ci: CarbonIntensityValue,
                label: str = "", timestamp: datetime | None = None) -> EmbodiedSession:
        energy = embodied_energy(model, profile)
        return cls(
            timestamp=timestamp or datetime.now(timezone.utc),
            profile=profile,
            energy=energy,
            carbon=embodied_carbon(energy, ci),
            label=label,
            model=model,
            intensity=ci,
        )


def accumulate_dynamic(sessions: Iterable[EmbodiedSession]) -> tuple[EnergyQuantity, CarbonQuantity]:
    """Dynamic embodied footprint: the plain sum over all recorded sessions."""
    sessions = list(sessions)
    # fsum is correctly rounded, so the total does not depend on session order
    joules = math.fsum(s.energy.joules for s in sessions)
    grams = math.fsum(s.carbon.grams_co2eq for s in sessions)
    return EnergyQuantity(joules), CarbonQuantity(grams)
