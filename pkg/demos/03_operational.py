"""Operational energy from a per-process energy-monitor CSV.

Run: python demos/03_operational.py
"""
# %%
import tempfile
from datetime import datetime
from pathlib import Path

from carbon_ledger import (
    CarbonIntensityValue,
    EnergyLog,
    ProcessFilter,
    operational_carbon,
    parse_energy_log,
    sum_process_energy,
)
from carbon_ledger.operational import ColumnMapping, NoMatchError, records_for, write_energy_log
from carbon_ledger.replication import backend_log_path

# %% [markdown]
# The monitor writes one row per process per minute with the energy in
# millijoules. The bundled backend log covers a 72-minute test run of a Java
# service with some unrelated processes mixed in.

# %%
log = parse_energy_log(backend_log_path())
print("processes:", ", ".join(log.process_names()))
java = sum_process_energy(log, ProcessFilter("java.exe"))
print(f"java.exe: {java.kj:.1f} kJ = {java.kwh:.4f} kWh")
print(f"carbon: {operational_carbon(java, CarbonIntensityValue(172)).kg:.4f} kgCO2e")

# %% [markdown]
# Process names match case-insensitively, and a pattern with * or ? is a glob.
# Asking for a process that never ran is an error, not a zero.

# %%
print("glob java*:", sum_process_energy(log, ProcessFilter("JAVA*")).kj, "kJ")
try:
    sum_process_energy(log, ProcessFilter("python.exe"))
except NoMatchError as exc:
    print("no match:", exc)

# %% [markdown]
# Logs from other tools usually differ in column names or units. A column
# mapping handles both; bad rows can be skipped instead of failing the parse.

# %%
tmp = Path(tempfile.mkdtemp())
other = tmp / "other.csv"
other.write_text("Name,When,Energy (J)\n"
                 "node,2024-03-12T10:00:00,0.4014\n"
                 "node,2024-03-12T10:01:00,oops\n"
                 "node,2024-03-12T10:02:00,0.0446\n")
mapping = ColumnMapping({"ProcessName": "Name", "TimeStamp": "When", "TotalEnergyConsumption": "Energy (J)"}, "J")
lenient = parse_energy_log(other, strict=False, mapping=mapping)
print("skipped rows:", lenient.skipped)
print("node:", sum_process_energy(lenient, ProcessFilter("node")).kj, "kJ")

# %% [markdown]
# Logs can be written back in the canonical layout.

# %%
synthetic = EnergyLog(tuple(records_for("worker", [1000, 2000, 3000], datetime(2024, 1, 1))))
write_energy_log(synthetic, tmp / "canonical.csv")
print((tmp / "canonical.csv").read_text())
