"""Embodied energy of LLM inference: power x seconds-per-token x tokens.

Run: python demos/02_embodied.py
"""
# %%
from datetime import datetime, timezone

from carbon_ledger import (
    PRESETS,
    CarbonIntensityValue,
    EmbodiedSession,
    InferenceProfile,
    PowerQuantity,
    ServerPowerModel,
    accumulate_dynamic,
    embodied_carbon,
    embodied_energy,
    server_power,
)
from carbon_ledger.quantities import format_display

# %% [markdown]
# The bundled preset describes a 350 W CPU server with 60 GB of memory at
# 0.1 W/GB, answering at 0.47 s per token.

# %%
preset = PRESETS["intel-blog-2023"]
print(preset.description)
print("server power:", server_power(preset.model).watts, "W")

# %%
profile = InferenceProfile(preset.token_latency_s, 203_717)
energy = embodied_energy(preset.model, profile)
ci = CarbonIntensityValue(172)
print(f"energy {format_display(energy.kwh, 4, 'half-up')} kWh")
print(f"carbon {format_display(embodied_carbon(energy, ci).kg, 3, 'half-up')} kgCO2e at {ci.grams_per_kwh:g} g/kWh")

# %% [markdown]
# Everything is linear: doubling the tokens, the latency or the power doubles
# the energy. A GPU-class box with a faster token rate looks like this.

# %%
gpu = ServerPowerModel(PowerQuantity(700), 0.1, 80)
fast = InferenceProfile(0.03, 203_717)
print(f"gpu server: {format_display(embodied_energy(gpu, fast).kwh, 4, 'half-up')} kWh")

# %% [markdown]
# Dynamic accounting: record one session per prompt and sum them up later.

# %%
t0 = datetime(2024, 3, 12, 9, tzinfo=timezone.utc)
sessions = [EmbodiedSession.compute(preset.model, InferenceProfile(0.47, n), ci, f"prompt-{i}", t0)
            for i, n in enumerate((1200, 800, 3500), 1)]
total_e, total_c = accumulate_dynamic(sessions)
print(f"{len(sessions)} sessions: {total_e.kwh:.4f} kWh, {total_c.grams_co2eq:.1f} gCO2e")
