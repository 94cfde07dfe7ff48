"""Unit-carrying scalar quantities for energy, power and carbon.

Everything is stored in canonical SI-ish units (joules, watts, grams CO2eq,
grams per kWh). kWh and kg only appear at the I/O boundary, and rounding is
applied only when a value is displayed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_DOWN, ROUND_HALF_EVEN, ROUND_HALF_UP, Decimal, localcontext

JOULES_PER_KWH = 3_600_000.0
JOULES_PER_KJ = 1_000.0
GRAMS_PER_KG = 1_000.0


def _check(name: str, value: float) -> float:
    value = float(value)
    if math.isnan(value) or math.isinf(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if value < 0:
        raise ValueError(f"{name} must be non-negative, got {value!r}")
    return value


@dataclass(frozen=True, order=True)
class EnergyQuantity:
    joules: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "joules", _check("energy", self.joules))

    @classmethod
    def from_kwh(cls, kwh: float) -> EnergyQuantity:
        return cls(kwh_to_joules(kwh))

    @classmethod
    def from_kj(cls, kj: float) -> EnergyQuantity:
        return cls(_check("energy", kj) * JOULES_PER_KJ)

    @classmethod
    def from_millijoules(cls, mj: float) -> EnergyQuantity:
        return cls(_check("energy", mj) / 1000.0)

    @property
    def kwh(self) -> float:
        return joules_to_kwh(self)

    @property
    def kj(self) -> float:
        return self.joules / JOULES_PER_KJ

    def __add__(self, other: EnergyQuantity) -> EnergyQuantity:
        if not isinstance(other, EnergyQuantity):
            return NotImplemented
        return EnergyQuantity(self.joules + other.joules)


@dataclass(frozen=True, order=True)
class PowerQuantity:
    watts: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "watts", _check("power", self.watts))


@dataclass(frozen=True, order=True)
class CarbonQuantity:
    grams_co2eq: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "grams_co2eq", _check("carbon", self.grams_co2eq))

    @classmethod
    def from_kg(cls, kg: float) -> CarbonQuantity:
        return cls(_check("carbon", kg) * GRAMS_PER_KG)

    @property
    def kg(self) -> float:
        return self.grams_co2eq / GRAMS_PER_KG

    def __add__(self, other: CarbonQuantity) -> CarbonQuantity:
        if not isinstance(other, CarbonQuantity):
            return NotImplemented
        return add_carbon(self, other)


@dataclass(frozen=True, order=True)
class CarbonIntensityValue:
    """Grid carbon intensity in grams CO2eq per kWh."""

    grams_per_kwh: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "grams_per_kwh", _check("carbon intensity", self.grams_per_kwh))

    @classmethod
    def from_kg_per_kwh(cls, kg: float) -> CarbonIntensityValue:
        return cls(_check("carbon intensity", kg) * GRAMS_PER_KG)

    @property
    def kg_per_kwh(self) -> float:
        return self.grams_per_kwh / GRAMS_PER_KG


def joules_to_kwh(e: EnergyQuantity) -> float:
    return e.joules / JOULES_PER_KWH


def kwh_to_joules(kwh: float) -> float:
    return _check("energy", kwh) * JOULES_PER_KWH


def carbon_from_energy(e: EnergyQuantity, ci: CarbonIntensityValue) -> CarbonQuantity:
    """Footprint of ``e`` on a grid of intensity ``ci`` (energy in kWh times g/kWh)."""
    return CarbonQuantity(joules_to_kwh(e) * ci.grams_per_kwh)


def add_carbon(a: CarbonQuantity, b: CarbonQuantity) -> CarbonQuantity:
    return CarbonQuantity(a.grams_co2eq + b.grams_co2eq)


# Display rounding. "truncate" is what the published summary table does
# (1.582916 kg is shown as 1.582); "half-up" is the conventional alternative.
ROUNDING_MODES = {"truncate": ROUND_DOWN, "half-up": ROUND_HALF_UP}


def display_round(value: float, places: int = 3, mode: str = "truncate") -> Decimal:
    """Round ``value`` for display only; never feed the result back into arithmetic."""
    try:
        rounding = ROUNDING_MODES[mode]
    except KeyError:
        raise ValueError(f"unknown rounding mode {mode!r}; expected one of {sorted(ROUNDING_MODES)}") from None
    # absorb binary representation error first so 0.194 stored as
    # 0.19399999999 does not truncate to 0.193
    with localcontext() as ctx:
        ctx.prec = 80
        d = Decimal(repr(float(value))).quantize(Decimal("1e-9"), rounding=ROUND_HALF_EVEN)
        return d.quantize(Decimal(1).scaleb(-places), rounding=rounding)


def format_display(value: float, places: int = 3, mode: str = "truncate") -> str:
    return f"{display_round(value, places, mode):f}"
