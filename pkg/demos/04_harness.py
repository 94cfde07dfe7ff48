"""Measuring a command: correctness, runtime, peak memory, optional energy.

Run: python demos/04_harness.py
"""
# %%
import sys

from carbon_ledger import EnergyQuantity, MetricSelection, attach_energy, run_measured
from carbon_ledger.metrics import Correctness

# %% [markdown]
# Exit status 0 counts as one passing test out of one. Peak memory covers the
# whole process tree.

# %%
m = run_measured([sys.executable, "-c", "buf = bytearray(50_000_000); import time; time.sleep(0.2)"], ".", 30)
print(f"runtime {m.runtime_s:.2f} s, peak {m.peak_memory_bytes / 1e6:.0f} MB, correctness {m.correctness.rate}")

# %% [markdown]
# A test runner usually knows better than the exit code; pass its counts in.
# Metrics that were not selected stay None rather than zero.

# %%
m = run_measured([sys.executable, "-c", "raise SystemExit(1)"], ".", 30,
                 MetricSelection.only("correctness", "runtime"), report=Correctness(25, 50))
print(m.to_dict())

# %% [markdown]
# A command that outlives its timeout is killed together with its children.

# %%
m = run_measured([sys.executable, "-c", "import time; time.sleep(60)"], ".", 0.5)
print("timed out:", m.timed_out, "correctness:", m.correctness)

# %% [markdown]
# Energy comes from an external monitor and is attached afterwards.

# %%
print(attach_energy(m, EnergyQuantity.from_kj(0.446), source="e3.csv").energy)
