"""Putting it together: a footprint report and an append-only session ledger.

Run: python demos/06_report_and_ledger.py
"""
# %%
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from carbon_ledger import (
    PRESETS,
    CarbonIntensityValue,
    EmbodiedSession,
    EnergyQuantity,
    InferenceProfile,
    LedgerEntry,
    append_ledger,
    build_report,
    read_ledger,
    render_report,
)
from carbon_ledger.report import embodied_sessions, operational_energy_total
from carbon_ledger.embodied import accumulate_dynamic

# %% [markdown]
# The report prices both energies on one grid. Displayed values are cut to
# three decimals; the total is computed from the unrounded parts.

# %%
ci = CarbonIntensityValue(172)
report = build_report(EnergyQuantity.from_kwh(9.203), EnergyQuantity.from_kwh(1.131), ci)
print(render_report(report, "table"))
print(render_report(report, "markdown", rounding="half-up"))

# %% [markdown]
# JSON output has a fixed schema and re-renders to the same bytes.

# %%
print(render_report(report, "json"))

# %% [markdown]
# For day-to-day use, append one ledger line per inference session or test
# run, then build the report from the ledger.

# %%
ledger = Path(tempfile.mkdtemp()) / "carbon-ledger.jsonl"
model = PRESETS["intel-blog-2023"].model
t0 = datetime(2024, 3, 12, 9, tzinfo=timezone.utc)
for i, tokens in enumerate((5000, 12000, 800)):
    s = EmbodiedSession.compute(model, InferenceProfile(0.47, tokens), ci, f"prompt-{i}", t0)
    append_ledger(ledger, LedgerEntry.from_session(s))
append_ledger(ledger, LedgerEntry(t0.isoformat(), "operational", {"energy_j": 250_000.0}, "test run"))

contents = read_ledger(ledger)
emb, _ = accumulate_dynamic(embodied_sessions(contents))
op = operational_energy_total(contents)
print(render_report(build_report(emb, op, ci), "csv"))
