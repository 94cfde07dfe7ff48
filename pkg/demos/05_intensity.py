"""Grid carbon intensity: builtin zones, a CSV table, or a remote service.

Run: python demos/05_intensity.py
"""
# %%
import tempfile
from pathlib import Path

from carbon_ledger import BuiltinTable, FileTable, lookup_intensity
from carbon_ledger.intensity import UnknownZoneError, parse_intensity

# %% [markdown]
# Three zones ship with the package. Zone ids are case-insensitive.

# %%
for zone, entry in BuiltinTable().entries().items():
    print(f"{zone:<14} {entry.intensity.grams_per_kwh:>5g} g/kWh  {entry.zone.description}")
print(lookup_intensity("eu-dc").grams_per_kwh)

# %% [markdown]
# A CSV table sits in front of the builtin zones and may shadow them.

# %%
table = Path(tempfile.mkdtemp()) / "zones.csv"
table.write_text("zone_id,g_per_kwh,description\nFR,56,France 2023\nEU-DC,110,our provider\n")
chain = [FileTable(table), BuiltinTable()]
for z in ("FR", "EU-DC", "EAST-ASIA-DC"):
    print(z, lookup_intensity(z, chain).grams_per_kwh)

try:
    lookup_intensity("MARS", chain)
except UnknownZoneError as exc:
    print(exc)

# %% [markdown]
# Explicit values accept g/kWh or kg/kWh.

# %%
print(parse_intensity("0.172 kg/kWh").grams_per_kwh, parse_intensity("172 g/kWh").grams_per_kwh)

# %% [markdown]
# A live service is only contacted when a RemoteEndpoint is passed in (or
# when the CLI is given --ci-url / CARBON_LEDGER_CI_URL). It is queried as
# GET {base}/carbon-intensity?zone=ID and answers are cached per zone and hour:
#
#     from carbon_ledger import RemoteEndpoint
#     lookup_intensity("DE", RemoteEndpoint("https://api.example.org/v3", token="..."))
