"""Acceptance criteria 1-9.

Each test carries a ``criterion`` mark; conftest prints one PASS/FAIL line
per criterion at the end of the run.
"""

import io
import math
import subprocess
import sys
import time
import uuid
from datetime import datetime, timedelta
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from carbon_ledger.embodied import InferenceProfile, ServerPowerModel, embodied_energy, server_power
from carbon_ledger.metrics import Correctness, pass_rate, run_measured
from carbon_ledger.operational import (
    EnergyLog,
    EnergyRecord,
    NoMatchError,
    ProcessFilter,
    parse_energy_log,
    read_energy_log,
    serialize_energy_log,
    sum_process_energy,
    sum_process_millijoules,
)
from carbon_ledger.quantities import (
    CarbonIntensityValue,
    CarbonQuantity,
    EnergyQuantity,
    PowerQuantity,
    carbon_from_energy,
    format_display,
    joules_to_kwh,
    kwh_to_joules,
)
from carbon_ledger.replication import backend_log_path, frontend_log_path, run_checks
from carbon_ledger.report import build_report, render_report, report_from_json, table_rows
from carbon_ledger.tokens import Direction, consumption_seconds, words_to_tokens

criterion = pytest.mark.criterion
PY = sys.executable


def checks_by_name():
    return {c.name: c for c in run_checks()}


# ---------------------------------------------------------------- 1


@criterion(1, "consumption-rate replication (94, 240, 18073)")
def test_rates():
    t = time.perf_counter()
    assert consumption_seconds(235, Direction.INPUT) == 94
    assert consumption_seconds(200, Direction.OUTPUT) == 240
    cu = consumption_seconds(45184, Direction.INPUT)
    assert cu == Fraction(180736, 10)  # 18073.6 exactly
    assert math.floor(cu) == 18073
    assert time.perf_counter() - t < 1


# ---------------------------------------------------------------- 2


@criterion(2, "word-to-token ratio")
@pytest.mark.parametrize("words, published", [(177, 235), (80, 107), (300, 400), (150, 200)])
def test_token_ratio(words, published):
    assert words_to_tokens(750) == 1000
    assert abs(words_to_tokens(words) - published) <= 1


# ---------------------------------------------------------------- 3


@criterion(3, "embodied pipeline (356 W, 9.4683 kWh, WARN vs 9.203)")
def test_embodied_pipeline():
    t = time.perf_counter()
    model = ServerPowerModel(PowerQuantity(350), 0.1, 60)
    assert server_power(model).watts == 356
    e = embodied_energy(model, InferenceProfile(0.47, 203717))
    oracle_kwh = Fraction(356) * Fraction("0.47") * 203717 / 3_600_000
    assert e.kwh == pytest.approx(float(oracle_kwh), rel=1e-6)
    assert format_display(e.kwh, 4, "half-up") == "9.4683"
    assert abs(e.kwh - 9.203) / 9.203 < 0.05
    warn = checks_by_name()["embodied.energy-vs-published"]
    assert warn.status == "WARN" and "+2.88%" in warn.detail
    assert time.perf_counter() - t < 1


# ---------------------------------------------------------------- 4


@criterion(4, "summary-table replication (1.582, 0.194, 1.777)")
def test_summary_table():
    ci = CarbonIntensityValue(172)
    r = build_report(EnergyQuantity.from_kwh(9.203), EnergyQuantity.from_kwh(1.131), ci)
    rows = dict(table_rows(r))
    assert rows["Embodied Carbon Emissions"] == "1.582 kgCO2e"
    assert rows["Operational Carbon Emissions"] == "0.194 kgCO2e"
    assert rows["Total Carbon Emissions (LLMaaS CO2eq)"] == "1.777 kgCO2e"
    # the total comes from unrounded parts, not from the displayed ones
    assert r.total_carbon.grams_co2eq == r.embodied_carbon.grams_co2eq + r.operational_carbon.grams_co2eq


# ---------------------------------------------------------------- 5


@criterion(5, "operational energy logs (0.446 kJ, 0.000124 kWh, 4190.5 kJ, WARN vs 1.1314)")
def test_energy_logs():
    front = sum_process_energy(parse_energy_log(frontend_log_path()), ProcessFilter("node.exe"))
    assert front.kj == pytest.approx(0.446, rel=1e-12)
    assert format_display(front.kwh, 6, "half-up") == "0.000124"
    assert format_display(front.kwh, 4, "half-up") == "0.0001"
    back = sum_process_energy(parse_energy_log(backend_log_path()), ProcessFilter("java.exe"))
    assert back.kj == pytest.approx(4190.5, rel=1e-12)
    assert format_display(back.kwh, 3, "half-up") == "1.164"
    warn = checks_by_name()["operational.backend-kwh-vs-published"]
    assert warn.status == "WARN" and "1.1314" in warn.detail


# ---------------------------------------------------------------- 6


@criterion(6, "correctness metric (25/50 = 0.5, 149/149 = 1.0)")
def test_pass_rate():
    assert pass_rate(25, 50) == Fraction(1, 2) and float(pass_rate(25, 50)) == 0.5
    assert pass_rate(149, 149) == 1 and float(pass_rate(149, 149)) == 1.0


# ---------------------------------------------------------------- 7

N = 1000
prop = settings(max_examples=N, deadline=None, database=None,
                suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
amount = st.one_of(st.just(0.0), st.floats(1e-6, 1e9))
grid = st.one_of(st.just(0.0), st.floats(1e-3, 2000))
scale = st.floats(1e-3, 1e3)
names = st.sampled_from(["java.exe", "node.exe", "explorer.exe", "Code.exe", "svc,host", 'q"t'])
records = st.builds(
    EnergyRecord,
    process_name=names,
    # offset from a base instant is much cheaper to generate than st.datetimes
    timestamp=st.integers(0, 10 * 365 * 86400 * 10**6).map(lambda us: datetime(2020, 1, 1) + timedelta(microseconds=us)),
    energy_mj=st.integers(0, 10**12),
    interval_s=st.one_of(st.just(60.0), st.floats(0.001, 60)),
    app_id=st.sampled_from(["", "app"]),
)
# the partition property only looks at names and energies
slim_records = st.builds(EnergyRecord, process_name=names,
                         timestamp=st.integers(0, 3600).map(lambda sec: datetime(2024, 1, 1) + timedelta(seconds=sec)),
                         energy_mj=st.integers(0, 10**12))
partitions = st.lists(st.integers(0, 10**6), min_size=1, max_size=8)


def suite_bilinearity(counter):
    @prop
    @given(amount, amount, grid, scale)
    def run(e1, e2, ci, k):
        counter.append(1)
        c = CarbonIntensityValue(ci)
        a, b = EnergyQuantity(e1), EnergyQuantity(e2)
        assert carbon_from_energy(a + b, c).grams_co2eq == pytest.approx(
            carbon_from_energy(a, c).grams_co2eq + carbon_from_energy(b, c).grams_co2eq, rel=1e-12, abs=0)
        assert carbon_from_energy(EnergyQuantity(e1 * k), c).grams_co2eq == pytest.approx(
            k * carbon_from_energy(a, c).grams_co2eq, rel=1e-12, abs=0)
        assert carbon_from_energy(a, CarbonIntensityValue(ci * k)).grams_co2eq == pytest.approx(
            k * carbon_from_energy(a, c).grams_co2eq, rel=1e-12, abs=0)
    run()


def suite_token_partitions(counter):
    model = ServerPowerModel(PowerQuantity(350), 0.1, 60)

    @prop
    @given(partitions, st.sampled_from(list(Direction)), st.floats(1e-3, 10))
    def run(parts, d, latency):
        counter.append(1)
        assert consumption_seconds(sum(parts), d) == sum(consumption_seconds(p, d) for p in parts)
        whole = embodied_energy(model, InferenceProfile(latency, sum(parts))).joules
        pieces = math.fsum(embodied_energy(model, InferenceProfile(latency, p)).joules for p in parts)
        assert pieces == pytest.approx(whole, rel=1e-12, abs=0)
    run()


def suite_log_partition(counter):
    @prop
    @given(st.lists(slim_records, min_size=1, max_size=8))
    def run(recs):
        counter.append(1)
        log = EnergyLog(tuple(recs))
        total = 0
        for f in (ProcessFilter("java.exe"), ProcessFilter("[!j]*")):
            try:
                total += sum_process_millijoules(log, f)
            except NoMatchError:
                pass
        assert total == sum(r.energy_mj for r in recs)
    run()


def suite_log_roundtrip(counter):
    @prop
    @given(st.lists(records, max_size=8))
    def run(recs):
        counter.append(1)
        text = serialize_energy_log(EnergyLog(tuple(recs)))
        assert serialize_energy_log(read_energy_log(io.StringIO(text, newline=""))) == text
    run()


def suite_report_roundtrip(counter):
    @prop
    @given(amount, amount, grid)
    def run(e, o, ci):
        counter.append(1)
        r = build_report(EnergyQuantity.from_kwh(e / 1e3), EnergyQuantity.from_kwh(o / 1e3), CarbonIntensityValue(ci))
        text = render_report(r, "json")
        assert render_report(report_from_json(text), "json") == text
    run()


def suite_units(counter):
    @prop
    @given(amount)
    def run(x):
        counter.append(1)
        assert kwh_to_joules(joules_to_kwh(EnergyQuantity(x))) == pytest.approx(x, rel=1e-9, abs=0)
        assert EnergyQuantity.from_kj(EnergyQuantity(x).kj).joules == pytest.approx(x, rel=1e-9, abs=0)
        assert EnergyQuantity.from_millijoules(x * 1e3).joules == pytest.approx(x, rel=1e-9, abs=0)
        assert CarbonQuantity.from_kg(CarbonQuantity(x).kg).grams_co2eq == pytest.approx(x, rel=1e-9, abs=0)
        assert CarbonIntensityValue.from_kg_per_kwh(x / 1e3).grams_per_kwh == pytest.approx(x, rel=1e-9, abs=0)
    run()


SUITES = [suite_bilinearity, suite_token_partitions, suite_log_partition,
          suite_log_roundtrip, suite_report_roundtrip, suite_units]


@criterion(7, f"property suites, >= {N} cases each, < 30 s total")
def test_property_suites():
    t = time.perf_counter()
    for suite in SUITES:
        counter = []
        suite(counter)
        assert len(counter) >= N, f"{suite.__name__} ran {len(counter)} cases"
    elapsed = time.perf_counter() - t
    print(f"property suites: {len(SUITES)} x >= {N} cases in {elapsed:.1f} s")
    assert elapsed < 30


# ---------------------------------------------------------------- 8


def _alive(marker):
    import psutil
    out = []
    for p in psutil.process_iter(["cmdline", "status"]):
        try:
            if marker in (p.info["cmdline"] or []) and p.info["status"] != psutil.STATUS_ZOMBIE:
                out.append(p.pid)
        except psutil.Error:
            pass
    return out


@criterion(8, "harness smoke (sleep, nonzero exit, no orphan after timeout)")
def test_harness_smoke():
    m = run_measured([PY, "-c", "import time; time.sleep(0.2)"], ".", 30)
    assert 0.2 <= m.runtime_s <= 5.2
    assert m.correctness == Correctness(1, 1)
    assert run_measured([PY, "-c", "raise SystemExit(1)"], ".", 30).correctness == Correctness(0, 1)
    marker = f"acceptance-{uuid.uuid4()}"
    child = "import time; time.sleep(60)"
    parent = f"import subprocess, sys, time; subprocess.Popen([sys.executable, '-c', {child!r}, {marker!r}]); time.sleep(60)"
    m = run_measured([PY, "-c", parent, marker], ".", 1.0)
    assert m.timed_out and m.correctness == Correctness(0, 1)
    assert _alive(marker) == []


# ---------------------------------------------------------------- 9


@criterion(9, "replicate-paper deterministic, exit 0, exactly two WARN lines")
def test_replicate_deterministic():
    cmd = [PY, "-m", "carbon_ledger", "replicate-paper"]
    a = subprocess.run(cmd, capture_output=True)
    b = subprocess.run(cmd, capture_output=True)
    assert a.returncode == 0 and b.returncode == 0, a.stderr
    assert a.stdout == b.stdout
    lines = a.stdout.decode().splitlines()
    warns = [line for line in lines if line.startswith("WARN")]
    assert len(warns) == 2
    assert {w.split()[1] for w in warns} == {"embodied.energy-vs-published", "operational.backend-kwh-vs-published"}
