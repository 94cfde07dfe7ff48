import threading
from datetime import datetime, timedelta, timezone

import pytest

from carbon_ledger.intensity import (
    BuiltinTable,
    FileTable,
    GridZone,
    IntensityFormatError,
    RemoteEndpoint,
    RemoteFormatError,
    TransportError,
    UnknownZoneError,
    fetch_remote_intensity,
    lookup_intensity,
    parse_intensity,
)


@pytest.mark.parametrize("zone, g", [("EU-DC", 127), ("EAST-ASIA-DC", 360), ("DE-CASE-STUDY", 172), ("de-case-study", 172)])
def test_builtin_zones(zone, g):
    assert lookup_intensity(GridZone(zone), BuiltinTable()).grams_per_kwh == g


def test_builtin_has_only_published_zones():
    assert set(BuiltinTable().entries()) == {"EU-DC", "EAST-ASIA-DC", "DE-CASE-STUDY"}


def test_unknown_zone_lists_known():
    with pytest.raises(UnknownZoneError, match="EU-DC") as exc:
        lookup_intensity("XX")
    assert exc.value.zone_id == "XX"


def test_file_table_shadows_builtin(tmp_path):
    p = tmp_path / "zones.csv"
    p.write_text("zone_id,g_per_kwh,description\nEU-DC,99,custom\nfr,0.056 kg/kWh,France\n")
    chain = [FileTable(p), BuiltinTable()]
    assert lookup_intensity("eu-dc", chain).grams_per_kwh == 99
    assert lookup_intensity("FR", chain).grams_per_kwh == pytest.approx(56)
    assert lookup_intensity("EAST-ASIA-DC", chain).grams_per_kwh == 360
    with pytest.raises(UnknownZoneError, match="FR"):
        lookup_intensity("nowhere", chain)


def test_file_table_deterministic(tmp_path):
    p = tmp_path / "zones.csv"
    p.write_text("zone_id,g_per_kwh,description\nZ,123.456789,z\n")
    values = {lookup_intensity("Z", FileTable(p)).grams_per_kwh for _ in range(20)}
    assert values == {123.456789}


def test_file_table_errors(tmp_path):
    p = tmp_path / "zones.csv"
    p.write_text("zone,value\n")
    with pytest.raises(IntensityFormatError, match="g_per_kwh"):
        lookup_intensity("A", FileTable(p))
    p.write_text("zone_id,g_per_kwh\nA,1\na,2\n")
    with pytest.raises(IntensityFormatError, match="duplicate"):
        lookup_intensity("A", FileTable(p))
    p.write_text("zone_id,g_per_kwh\nA,-3\n")
    with pytest.raises(IntensityFormatError, match="line 2"):
        lookup_intensity("A", FileTable(p))


def test_parse_intensity_units():
    assert parse_intensity("172").grams_per_kwh == 172
    assert parse_intensity("172 g/kWh").grams_per_kwh == 172
    assert parse_intensity("0.172 kg/kWh").grams_per_kwh == pytest.approx(172)
    assert parse_intensity("0.172 kgCO2e/kWh").grams_per_kwh == pytest.approx(172)
    with pytest.raises(ValueError):
        parse_intensity("-1")


def test_remote_ok(ci_server):
    ci_server.responses["DE"] = (200, {"zone": "DE", "carbonIntensity": 172, "unit": "gCO2eq/kWh"})
    assert fetch_remote_intensity(ci_server.url, "DE").grams_per_kwh == 172
    path, zone, _ = ci_server.hits[0]
    assert (path, zone) == ("/carbon-intensity", "DE")


def test_remote_token_header(ci_server):
    ci_server.responses["DE"] = (200, {"carbonIntensity": 1})
    fetch_remote_intensity(ci_server.url + "/", "DE", token="s3cret")
    headers = {k.lower(): v for k, v in ci_server.hits[0][2].items()}
    assert headers["auth-token"] == "s3cret"


@pytest.mark.parametrize("body", [{"carbonIntensity": -1}, {"zone": "DE"}, {"carbonIntensity": "172"},
                                  {"carbonIntensity": True}, b"not json", [1, 2],
                                  {"carbonIntensity": 0.172, "unit": "kgCO2eq/kWh"}])
def test_remote_format_errors(ci_server, body):
    ci_server.responses["DE"] = (200, body)
    with pytest.raises(RemoteFormatError):
        fetch_remote_intensity(ci_server.url, "DE")


def test_remote_503_retries(ci_server):
    ci_server.responses["DE"] = (503, {"error": "busy"})
    with pytest.raises(TransportError, match="503") as exc:
        fetch_remote_intensity(ci_server.url, "DE", retries=2, backoff_s=0)
    assert exc.value.attempts == 3
    assert len(ci_server.hits) == 3


def test_remote_connection_refused():
    with pytest.raises(TransportError):
        fetch_remote_intensity("http://127.0.0.1:9", "DE", retries=0, timeout_s=2)


def test_remote_requires_absolute_url():
    with pytest.raises(ValueError):
        fetch_remote_intensity("example.org/api", "DE")
    with pytest.raises(ValueError):
        RemoteEndpoint("/relative")


def test_remote_cache_per_hour(ci_server):
    ci_server.responses["DE"] = (200, {"carbonIntensity": 172})
    now = [datetime(2024, 3, 12, 10, 5, tzinfo=timezone.utc)]
    ep = RemoteEndpoint(ci_server.url, clock=lambda: now[0])
    assert lookup_intensity("DE", ep).grams_per_kwh == 172
    ci_server.responses["DE"] = (200, {"carbonIntensity": 180})
    now[0] += timedelta(minutes=30)
    assert lookup_intensity("de", ep).grams_per_kwh == 172  # same hour, cached
    now[0] += timedelta(minutes=30)
    assert lookup_intensity("DE", ep).grams_per_kwh == 180
    assert len(ci_server.hits) == 2


def test_remote_cache_shared_across_threads(ci_server):
    ci_server.responses["DE"] = (200, {"carbonIntensity": 172})
    ep = RemoteEndpoint(ci_server.url)
    results = []
    threads = [threading.Thread(target=lambda: results.append(ep.lookup("DE").grams_per_kwh)) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == [172] * 8
    assert len(ep._cache) == 1


def test_remote_only_when_selected(ci_server):
    ci_server.responses["EU-DC"] = (200, {"carbonIntensity": 1})
    assert lookup_intensity("EU-DC", BuiltinTable()).grams_per_kwh == 127
    assert ci_server.hits == []
