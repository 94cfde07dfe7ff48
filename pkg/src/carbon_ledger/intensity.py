"""Grid carbon intensity lookup: builtin table, CSV file table, or a remote service."""

from __future__ import annotations

import csv
import json
import logging
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Sequence, Union

from .quantities import CarbonIntensityValue

log = logging.getLogger(__name__)

ENV_URL = "CARBON_LEDGER_CI_URL"
ENV_ZONE = "CARBON_LEDGER_CI_ZONE"


class UnknownZoneError(LookupError):
    def __init__(self, zone_id: str, known: Sequence[str]):
        self.zone_id = zone_id
        self.known = sorted(known)
        super().__init__(f"unknown grid zone {zone_id!r}; known zones: {', '.join(self.known) or 'none'}")


class TransportError(ConnectionError):
    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempt{'s' if attempts != 1 else ''})")
        self.attempts = attempts


class IntensityFormatError(ValueError):
    pass


class RemoteFormatError(IntensityFormatError):
    """The remote service answered, but not with a usable intensity."""


@dataclass(frozen=True)
class GridZone:
    zone_id: str
    description: str = ""

    def __post_init__(self):
        if not self.zone_id or not self.zone_id.strip():
            raise ValueError("zone_id must be nonempty")

    @property
    def key(self) -> str:
        return self.zone_id.strip().upper()


@dataclass(frozen=True)
class ZoneEntry:
    zone: GridZone
    intensity: CarbonIntensityValue


def _index(entries) -> dict[str, ZoneEntry]:
    out = {}
    for e in entries:
        if e.zone.key in out:
            raise ValueError(f"duplicate zone {e.zone.zone_id!r}")
        out[e.zone.key] = e
    return out


BUILTIN_ZONES = _index([
    ZoneEntry(GridZone("EU-DC", "Europe-based data center, 91% carbon-free energy"),
              CarbonIntensityValue(127.0)),
    ZoneEntry(GridZone("EAST-ASIA-DC", "East Asia-based data center, 28% carbon-free energy"),
              CarbonIntensityValue(360.0)),
    # capture hour not published, so not labelled as a current national value
    ZoneEntry(GridZone("DE-CASE-STUDY", "German grid as used in the LLMaaS testing case study"),
              CarbonIntensityValue(172.0)),
])


def parse_intensity(text: str) -> CarbonIntensityValue:
    """Parse ``"172"``, ``"172 g/kWh"`` or ``"0.172 kg/kWh"``; bare numbers are g/kWh."""
    s = text.strip().replace("CO2eq", "").replace("CO2e", "").replace(" ", "")
    lower = s.lower()
    for suffix, factor in (("kg/kwh", 1000.0), ("g/kwh", 1.0)):
        if lower.endswith(suffix):
            return CarbonIntensityValue(float(s[: -len(suffix)]) * factor)
    return CarbonIntensityValue(float(s))


@dataclass(frozen=True)
class BuiltinTable:
    def entries(self) -> dict[str, ZoneEntry]:
        return BUILTIN_ZONES


@dataclass(frozen=True)
class FileTable:
    """CSV with header ``zone_id,g_per_kwh,description``."""

    path: Path

    def entries(self) -> dict[str, ZoneEntry]:
        path = Path(self.path)
        with path.open("r", encoding="utf-8-sig", newline="") as fh:
            reader = csv.DictReader(fh)
            missing = {"zone_id", "g_per_kwh"} - set(reader.fieldnames or ())
            if missing:
                raise IntensityFormatError(f"{path}: missing column(s) {sorted(missing)}")
            rows = []
            for row in reader:
                try:
                    ci = parse_intensity(row["g_per_kwh"] or "")
                except ValueError as exc:
                    raise IntensityFormatError(f"{path} line {reader.line_num}: {exc}") from None
                rows.append(ZoneEntry(GridZone(row["zone_id"].strip(), (row.get("description") or "").strip()), ci))
        try:
            return _index(rows)
        except ValueError as exc:
            raise IntensityFormatError(f"{path}: {exc}") from None


def _default_opener(req, timeout):
    return urllib.request.urlopen(req, timeout=timeout)


@dataclass(eq=False)
class RemoteEndpoint:
    """electricity-maps-style service: ``GET {base}/carbon-intensity?zone=ID``.

    Responses are cached in memory per (zone, UTC hour). The cache is shared
    by threads using the same endpoint object.
    """

    base_url: str
    retries: int = 2
    timeout_s: float = 10.0
    backoff_s: float = 0.2
    token: str | None = None
    clock: Callable[[], datetime] = field(default=lambda: datetime.now(timezone.utc))
    _cache: dict = field(default_factory=dict, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        parsed = urllib.parse.urlsplit(self.base_url)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ValueError(f"base URL must be absolute http(s), got {self.base_url!r}")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")

    def lookup(self, zone_id: str) -> CarbonIntensityValue:
        hour = self.clock().replace(minute=0, second=0, microsecond=0)
        key = (zone_id.strip().upper(), hour)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = fetch_remote_intensity(self.base_url, zone_id.strip(), retries=self.retries,
                                       timeout_s=self.timeout_s, backoff_s=self.backoff_s, token=self.token)
        with self._lock:
            self._cache.setdefault(key, value)
            return self._cache[key]


IntensityProvider = Union[BuiltinTable, FileTable, RemoteEndpoint]


def fetch_remote_intensity(base: str, zone_id: str, *, retries: int = 2, timeout_s: float = 10.0,
                           backoff_s: float = 0.2, token: str | None = None,
                           opener=_default_opener) -> CarbonIntensityValue:
    """Fetch the current intensity for ``zone_id``; the JSON ``carbonIntensity`` is g/kWh."""
    if not urllib.parse.urlsplit(base).scheme:
        raise ValueError(f"base URL must be absolute, got {base!r}")
    url = f"{base.rstrip('/')}/carbon-intensity?{urllib.parse.urlencode({'zone': zone_id})}"
    headers = {"Accept": "application/json"}
    if token:
        headers["auth-token"] = token
    attempts = 0
    last = "no attempt made"
    body = None
    while attempts <= retries:
        attempts += 1
        try:
            with opener(urllib.request.Request(url, headers=headers), timeout_s) as resp:
                body = resp.read()
            break
        except urllib.error.HTTPError as exc:
            last = f"HTTP {exc.code} from {url}"
        except (urllib.error.URLError, OSError) as exc:
            last = f"request to {url} failed: {exc}"
        log.debug("attempt %d: %s", attempts, last)
        if attempts <= retries:
            time.sleep(backoff_s * attempts)
    if body is None:
        raise TransportError(last, attempts)

    try:
        payload = json.loads(body)
    except (ValueError, UnicodeDecodeError):
        raise RemoteFormatError(f"{url}: response is not JSON") from None
    value = payload.get("carbonIntensity") if isinstance(payload, dict) else None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise RemoteFormatError(f"{url}: response has no numeric 'carbonIntensity'")
    if value < 0:
        raise RemoteFormatError(f"{url}: negative carbonIntensity {value}")
    unit = payload.get("unit")
    if unit not in (None, "gCO2eq/kWh", "gCO2/kWh", "g/kWh"):
        raise RemoteFormatError(f"{url}: unsupported unit {unit!r}")
    return CarbonIntensityValue(float(value))


def lookup_intensity(zone, p: IntensityProvider | Sequence[IntensityProvider] = BuiltinTable()
                     ) -> CarbonIntensityValue:
    """Resolve ``zone`` against one provider, or against several in the given order.

    Zone ids are case-insensitive. Typical chain: ``[FileTable(path), BuiltinTable()]``,
    so file entries shadow builtin ones.
    """
    zone = zone if isinstance(zone, GridZone) else GridZone(str(zone))
    chain = list(p) if isinstance(p, (list, tuple)) else [p]
    known: set[str] = set()
    for provider in chain:
        if isinstance(provider, RemoteEndpoint):
            return provider.lookup(zone.zone_id)
        entries = provider.entries()
        if zone.key in entries:
            return entries[zone.key].intensity
        known.update(entries)
    raise UnknownZoneError(zone.zone_id, known)
