"""Per-process energy logs (E3-style CSV) and operational carbon.

Canonical CSV schema, one row per process per monitoring interval::

    ProcessName,AppId,TimeStamp,IntervalSeconds,TotalEnergyConsumption

``ProcessName``, ``TimeStamp`` and ``TotalEnergyConsumption`` (millijoules)
are required; ``AppId`` and ``IntervalSeconds`` (default 60) are optional.
Logs from other monitors are adapted with a :class:`ColumnMapping`.
"""

from __future__ import annotations

import csv
import fnmatch
import io
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation
from pathlib import Path
from typing import Iterable

from .quantities import CarbonIntensityValue, CarbonQuantity, EnergyQuantity, carbon_from_energy

REQUIRED_COLUMNS = ("ProcessName", "TimeStamp", "TotalEnergyConsumption")
OPTIONAL_COLUMNS = ("AppId", "IntervalSeconds")
CANONICAL_HEADER = ("ProcessName", "AppId", "TimeStamp", "IntervalSeconds", "TotalEnergyConsumption")
DEFAULT_INTERVAL_S = 60.0
MAX_INTERVAL_S = 60.0

# millijoules per unit
ENERGY_UNITS = {"uJ": Decimal("0.001"), "µJ": Decimal("0.001"), "mJ": Decimal(1), "J": Decimal(1000)}


class LogFormatError(ValueError):
    """The log as a whole cannot be read (bad header, unknown unit...)."""


class RowError(LogFormatError):
    def __init__(self, line: int, message: str):
        super().__init__(f"{message} at line {line}")
        self.line = line
        self.reason = message


class NoMatchError(LookupError):
    """A process filter matched no records; usually a wrong filter, not zero energy."""


@dataclass(frozen=True)
class ColumnMapping:
    """Maps a vendor log layout onto the canonical schema.

    ``columns`` goes canonical name -> vendor header name; anything not listed
    keeps its canonical name. Energies in other units are converted to whole
    millijoules (half-even), so resolution below 1 mJ is dropped.
    """

    columns: dict = field(default_factory=dict)
    energy_unit: str = "mJ"

    def __post_init__(self):
        unknown = set(self.columns) - set(CANONICAL_HEADER)
        if unknown:
            raise LogFormatError(f"column mapping names unknown canonical columns: {sorted(unknown)}")
        if self.energy_unit not in ENERGY_UNITS:
            raise LogFormatError(f"unknown energy unit {self.energy_unit!r}; expected one of {sorted(ENERGY_UNITS)}")

    def source(self, canonical: str) -> str:
        return self.columns.get(canonical, canonical)

    @classmethod
    def from_dict(cls, data: dict | None) -> ColumnMapping:
        data = data or {}
        return cls(columns=dict(data.get("columns", {})), energy_unit=data.get("energy_unit", "mJ"))


@dataclass(frozen=True)
class EnergyRecord:
    process_name: str
    timestamp: datetime
    energy_mj: int
    interval_s: float = DEFAULT_INTERVAL_S
    app_id: str = ""

    def __post_init__(self):
        if not 0 < self.interval_s <= MAX_INTERVAL_S:
            raise ValueError(f"interval must be in (0, {MAX_INTERVAL_S:g}] seconds, got {self.interval_s}")
        if int(self.energy_mj) != self.energy_mj or self.energy_mj < 0:
            raise ValueError(f"energy must be a non-negative integer of millijoules, got {self.energy_mj!r}")


def _sort_key(ts: datetime):
    if ts.tzinfo is None:
        return ts
    return ts.astimezone(timezone.utc).replace(tzinfo=None)


@dataclass(frozen=True)
class EnergyLog:
    records: tuple[EnergyRecord, ...] = ()
    source_path: str = ""
    skipped: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        aware = {r.timestamp.tzinfo is not None for r in self.records}
        if len(aware) > 1:
            raise LogFormatError("log mixes timezone-aware and naive timestamps")
        # stable: rows sharing a timestamp keep file order
        object.__setattr__(self, "records", tuple(sorted(self.records, key=lambda r: _sort_key(r.timestamp))))

    @property
    def skip_count(self) -> int:
        return len(self.skipped)

    def process_names(self) -> list[str]:
        return sorted({r.process_name for r in self.records})


@dataclass(frozen=True)
class ProcessFilter:
    """Case-insensitive exact process name, or a glob when it contains ``*`` or ``?``."""

    pattern: str

    def __post_init__(self):
        if not self.pattern:
            raise ValueError("process filter pattern must be nonempty")

    @property
    def is_glob(self) -> bool:
        return any(c in self.pattern for c in "*?")

    def matches(self, process_name: str) -> bool:
        name = process_name.casefold()
        pattern = self.pattern.casefold()
        if self.is_glob:
            return fnmatch.fnmatchcase(name, pattern)
        return name == pattern


def parse_timestamp(text: str) -> datetime:
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text)


def _parse_energy(text: str, unit: str) -> int:
    try:
        value = Decimal(text.strip())
    except InvalidOperation:
        raise ValueError(f"unparseable energy {text!r}") from None
    if not value.is_finite():
        raise ValueError(f"unparseable energy {text!r}")
    if value < 0:
        raise ValueError("negative energy")
    # sub-millijoule resolution is dropped
    return int((value * ENERGY_UNITS[unit]).to_integral_value(rounding=ROUND_HALF_EVEN))


def _parse_row(row: dict, mapping: ColumnMapping) -> EnergyRecord:
    name = (row.get(mapping.source("ProcessName")) or "").strip()
    if not name:
        raise ValueError("empty process name")
    ts_text = row.get(mapping.source("TimeStamp")) or ""
    try:
        ts = parse_timestamp(ts_text)
    except ValueError:
        raise ValueError(f"unparseable timestamp {ts_text!r}") from None
    energy = _parse_energy(row.get(mapping.source("TotalEnergyConsumption")) or "", mapping.energy_unit)
    interval_text = (row.get(mapping.source("IntervalSeconds")) or "").strip()
    if interval_text:
        try:
            interval = float(interval_text)
        except ValueError:
            raise ValueError(f"unparseable interval {interval_text!r}") from None
    else:
        interval = DEFAULT_INTERVAL_S
    if not 0 < interval <= MAX_INTERVAL_S:
        raise ValueError(f"interval {interval_text} outside (0, 60] seconds")
    app_id = (row.get(mapping.source("AppId")) or "").strip()
    return EnergyRecord(name, ts, energy, interval, app_id)


def read_energy_log(stream, *, strict: bool = True, mapping: ColumnMapping | None = None,
                    source_path: str = "") -> EnergyLog:
    """Parse an energy log from an open text stream.

    In strict mode the first bad row raises :class:`RowError`; in lenient mode
    bad rows are skipped and recorded in ``EnergyLog.skipped`` as
    ``(line, reason)`` pairs.
    """
    mapping = mapping or ColumnMapping()
    reader = csv.DictReader(stream)
    header = reader.fieldnames
    if header is None:
        raise LogFormatError(f"{source_path or 'energy log'}: empty file, expected a header row")
    header = [h.strip() for h in header]
    reader.fieldnames = header
    for col in REQUIRED_COLUMNS:
        if mapping.source(col) not in header:
            raise LogFormatError(f"missing required column {mapping.source(col)!r}"
                                 + (f" (canonical {col!r})" if mapping.source(col) != col else ""))

    records = []
    skipped = []
    for row in reader:
        line = reader.line_num
        if not any((v or "").strip() for v in row.values() if isinstance(v, str)):
            continue
        try:
            if None in row:
                raise ValueError("too many fields")
            records.append(_parse_row(row, mapping))
        except ValueError as exc:
            if strict:
                raise RowError(line, str(exc)) from None
            skipped.append((line, str(exc)))
    return EnergyLog(tuple(records), source_path, tuple(skipped))


def parse_energy_log(path, *, strict: bool = True, mapping: ColumnMapping | None = None) -> EnergyLog:
    path = Path(path)
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        return read_energy_log(fh, strict=strict, mapping=mapping, source_path=str(path))


def _format_interval(seconds: float) -> str:
    return str(int(seconds)) if float(seconds).is_integer() else repr(float(seconds))


def serialize_energy_log(log: EnergyLog) -> str:
    """Canonical CSV text (LF line endings, canonical header, mJ)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CANONICAL_HEADER)
    for r in log.records:
        writer.writerow([r.process_name, r.app_id, r.timestamp.isoformat(),
                         _format_interval(r.interval_s), str(int(r.energy_mj))])
    return buf.getvalue()


def write_energy_log(log: EnergyLog, path) -> None:
    Path(path).write_text(serialize_energy_log(log), encoding="utf-8", newline="")


def select_records(log: EnergyLog, f: ProcessFilter, start: datetime | None = None,
                   end: datetime | None = None) -> list[EnergyRecord]:
    """Records of processes matching ``f`` whose timestamp lies in ``[start, end]``."""
    out = []
    for r in log.records:
        if not f.matches(r.process_name):
            continue
        if start is not None and _sort_key(r.timestamp) < _sort_key(start):
            continue
        if end is not None and _sort_key(r.timestamp) > _sort_key(end):
            continue
        out.append(r)
    return out


def sum_process_millijoules(log: EnergyLog, f: ProcessFilter, start: datetime | None = None,
                            end: datetime | None = None) -> int:
    matched = select_records(log, f, start, end)
    if not matched:
        known = ", ".join(log.process_names()[:20]) or "none"
        raise NoMatchError(f"no records match process filter {f.pattern!r} (processes in log: {known})")
    return sum(r.energy_mj for r in matched)


def sum_process_energy(log: EnergyLog, f: ProcessFilter, start: datetime | None = None,
                       end: datetime | None = None) -> EnergyQuantity:
    """Total energy of the matching process: the sum of its TotalEnergyConsumption rows.

    Raises :class:`NoMatchError` if nothing matches.
    """
    return EnergyQuantity.from_millijoules(sum_process_millijoules(log, f, start, end))


def operational_carbon(e: EnergyQuantity, ci: CarbonIntensityValue) -> CarbonQuantity:
    return carbon_from_energy(e, ci)


def records_for(process_name: str, energies_mj: Iterable[int], start: datetime,
                interval_s: float = DEFAULT_INTERVAL_S, app_id: str = "") -> list[EnergyRecord]:
    """Consecutive interval records for one process, handy for building fixtures."""
    return [
        EnergyRecord(process_name, start + timedelta(seconds=i * interval_s), int(e), interval_s, app_id)
        for i, e in enumerate(energies_mj)
    ]
