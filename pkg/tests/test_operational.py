import io
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import given, strategies as st

from carbon_ledger.operational import (
    ColumnMapping,
    EnergyLog,
    EnergyRecord,
    LogFormatError,
    NoMatchError,
    ProcessFilter,
    RowError,
    operational_carbon,
    parse_energy_log,
    read_energy_log,
    records_for,
    serialize_energy_log,
    sum_process_energy,
    sum_process_millijoules,
)
from carbon_ledger.quantities import CarbonIntensityValue, EnergyQuantity
from carbon_ledger.replication import backend_log_path, frontend_log_path

HEADER = "ProcessName,TimeStamp,TotalEnergyConsumption\n"
T0 = datetime(2024, 3, 12, 10, 0)


def write(tmp_path, text, name="e3.csv"):
    p = tmp_path / name
    p.write_bytes(text.encode("utf-8"))
    return p


def test_header_only(tmp_path):
    log = parse_energy_log(write(tmp_path, HEADER))
    assert log.records == ()


def test_three_rows(tmp_path):
    p = write(tmp_path, HEADER + "suite.exe,2024-03-12T10:02:00,300\n"
                               "suite.exe,2024-03-12T10:00:00,100\n"
                               "suite.exe,2024-03-12T10:01:00,200\n")
    log = parse_energy_log(p)
    assert len(log.records) == 3
    assert [r.energy_mj for r in log.records] == [100, 200, 300]  # sorted by time
    assert sum_process_millijoules(log, ProcessFilter("suite.exe")) == 600
    assert log.records[0].interval_s == 60


def test_crlf_and_bom(tmp_path):
    p = write(tmp_path, "﻿" + HEADER.replace("\n", "\r\n") + "a.exe,2024-03-12T10:00:00Z,5\r\n")
    log = parse_energy_log(p)
    assert log.records[0].timestamp.tzinfo is not None
    assert log.records[0].energy_mj == 5


def test_negative_energy_strict(tmp_path):
    p = write(tmp_path, HEADER + "a.exe,2024-03-12T10:00:00,10\na.exe,2024-03-12T10:01:00,-5\n")
    with pytest.raises(RowError, match="negative energy at line 3") as exc:
        parse_energy_log(p)
    assert exc.value.line == 3


def test_lenient_skips_and_counts(tmp_path):
    text = (HEADER + "a.exe,2024-03-12T10:00:00,10\n"
            "a.exe,not-a-time,10\n"
            "a.exe,2024-03-12T10:02:00,ten\n"
            "a.exe,2024-03-12T10:03:00,-1\n"
            "a.exe,2024-03-12T10:04:00,7\n")
    p = write(tmp_path, text)
    log = parse_energy_log(p, strict=False)
    assert [r.energy_mj for r in log.records] == [10, 7]
    assert [line for line, _ in log.skipped] == [3, 4, 5]
    assert "timestamp" in log.skipped[0][1]
    with pytest.raises(RowError, match="line 3"):
        parse_energy_log(p, strict=True)


def test_missing_column_named(tmp_path):
    p = write(tmp_path, "ProcessName,TimeStamp,Energy\na,2024-01-01T00:00:00,1\n")
    with pytest.raises(LogFormatError, match="TotalEnergyConsumption"):
        parse_energy_log(p)


def test_empty_file(tmp_path):
    with pytest.raises(LogFormatError, match="header"):
        parse_energy_log(write(tmp_path, ""))


def test_optional_columns(tmp_path):
    p = write(tmp_path, "ProcessName,AppId,TimeStamp,IntervalSeconds,TotalEnergyConsumption\n"
                        "java.exe,gradle,2024-03-12T10:00:00,30.5,99\n")
    r = parse_energy_log(p).records[0]
    assert (r.app_id, r.interval_s, r.energy_mj) == ("gradle", 30.5, 99)


def test_interval_bounds(tmp_path):
    p = write(tmp_path, "ProcessName,TimeStamp,IntervalSeconds,TotalEnergyConsumption\n"
                        "a,2024-03-12T10:00:00,61,1\n")
    with pytest.raises(RowError, match="interval"):
        parse_energy_log(p)
    with pytest.raises(ValueError):
        EnergyRecord("a", T0, 1, 0)


def test_column_mapping_and_units(tmp_path):
    p = write(tmp_path, "Name,Time,Energy (uJ)\nnode.exe,2024-03-12T10:00:00,446000000\n")
    mapping = ColumnMapping({"ProcessName": "Name", "TimeStamp": "Time",
                             "TotalEnergyConsumption": "Energy (uJ)"}, "uJ")
    log = parse_energy_log(p, mapping=mapping)
    assert log.records[0].energy_mj == 446_000
    with pytest.raises(LogFormatError, match="'Energy \\(uJ\\)'"):
        parse_energy_log(write(tmp_path, "Name,Time\n", "x.csv"), mapping=mapping)
    with pytest.raises(LogFormatError, match="unit"):
        ColumnMapping(energy_unit="kWh")
    j = ColumnMapping.from_dict({"energy_unit": "J"})
    assert parse_energy_log(write(tmp_path, HEADER + "a,2024-01-01T00:00:00,0.446\n", "j.csv"),
                            mapping=j).records[0].energy_mj == 446


def test_filter_matching():
    assert ProcessFilter("Java.EXE").matches("java.exe")
    assert not ProcessFilter("java").matches("java.exe")
    assert ProcessFilter("java*").matches("JAVA.exe")
    assert ProcessFilter("node.ex?").matches("node.exe")
    with pytest.raises(ValueError):
        ProcessFilter("")


def test_duplicate_rows_summed():
    log = EnergyLog(tuple(records_for("node.exe", [401_400], T0) + records_for("node.exe", [44_600], T0)))
    assert sum_process_energy(log, ProcessFilter("node.exe")).kj == pytest.approx(0.446)


def test_no_match_is_distinct():
    log = EnergyLog(tuple(records_for("a.exe", [1, 2], T0)))
    with pytest.raises(NoMatchError, match="a.exe"):
        sum_process_energy(log, ProcessFilter("b.exe"))
    # zero energy that does match is a real zero
    zero = EnergyLog(tuple(records_for("z.exe", [0], T0)))
    assert sum_process_energy(zero, ProcessFilter("z.exe")) == EnergyQuantity(0)


def test_time_window():
    log = EnergyLog(tuple(records_for("a", [1, 10, 100, 1000], T0)))
    f = ProcessFilter("a")
    assert sum_process_millijoules(log, f, T0 + timedelta(minutes=1), T0 + timedelta(minutes=2)) == 110
    with pytest.raises(NoMatchError):
        sum_process_millijoules(log, f, T0 + timedelta(hours=1))


def test_replication_fixtures():
    front = sum_process_energy(parse_energy_log(frontend_log_path()), ProcessFilter("node.exe"))
    back = sum_process_energy(parse_energy_log(backend_log_path()), ProcessFilter("java.exe"))
    assert sum_process_millijoules(parse_energy_log(frontend_log_path()), ProcessFilter("node.exe")) == 446_000
    assert sum_process_millijoules(parse_energy_log(backend_log_path()), ProcessFilter("java.exe")) == 4_190_500_000
    assert front.kj == pytest.approx(0.446, rel=1e-12)
    assert back.kj == pytest.approx(4190.5, rel=1e-12)


def test_operational_carbon():
    ci = CarbonIntensityValue(172)
    assert f"{operational_carbon(EnergyQuantity.from_kwh(1.131), ci).kg:.3f}".startswith("0.19")
    assert operational_carbon(EnergyQuantity(0), ci).grams_co2eq == 0
    # 446 J / 3.6e6 J/kWh * 172 g/kWh = 0.021309 g
    assert operational_carbon(EnergyQuantity(446), ci).grams_co2eq == pytest.approx(446 / 3.6e6 * 172, rel=1e-12)
    assert operational_carbon(EnergyQuantity(446), ci).grams_co2eq == pytest.approx(0.0213, abs=5e-5)


def test_mixed_timezones_rejected():
    with pytest.raises(LogFormatError, match="timezone"):
        EnergyLog((EnergyRecord("a", T0, 1), EnergyRecord("a", T0.replace(tzinfo=timezone.utc), 1)))


# ---------------------------------------------------------------- properties

names = st.sampled_from(["java.exe", "node.exe", "explorer.exe", "Code.exe", "svc host,x", 'q"uote'])
records = st.builds(
    EnergyRecord,
    process_name=names,
    timestamp=st.datetimes(datetime(2020, 1, 1), datetime(2030, 1, 1)),
    energy_mj=st.integers(0, 10**12),
    interval_s=st.one_of(st.just(60.0), st.floats(0.001, 60)),
    app_id=st.sampled_from(["", "app", "Microsoft.Windows"]),
)


@given(st.lists(records, max_size=30))
def test_serialize_parse_roundtrip(recs):
    log = EnergyLog(tuple(recs))
    text = serialize_energy_log(log)
    again = read_energy_log(io.StringIO(text, newline=""))
    assert serialize_energy_log(again) == text
    assert again.records == log.records


@given(st.lists(records, min_size=1, max_size=30), st.randoms())
def test_sum_invariant_under_reordering(recs, rnd):
    f = ProcessFilter("*")
    shuffled = recs[:]
    rnd.shuffle(shuffled)
    assert sum_process_millijoules(EnergyLog(tuple(recs)), f) == sum_process_millijoules(EnergyLog(tuple(shuffled)), f)


@given(st.lists(records, min_size=1, max_size=30))
def test_partition_property(recs):
    log = EnergyLog(tuple(recs))
    total = sum(r.energy_mj for r in recs)
    java, rest = ProcessFilter("java.exe"), ProcessFilter("[!j]*")
    parts = 0
    for f in (java, rest):
        try:
            parts += sum_process_millijoules(log, f)
        except NoMatchError:
            pass
    assert parts == total
