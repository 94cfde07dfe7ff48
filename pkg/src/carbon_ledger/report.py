"""Footprint report assembly, rendering, and the append-only session ledger."""

from __future__ import annotations

import csv
import enum
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .embodied import EmbodiedSession, InferenceProfile
from .quantities import (
    CarbonIntensityValue,
    CarbonQuantity,
    EnergyQuantity,
    add_carbon,
    carbon_from_energy,
    format_display,
)

JSON_FIELDS = (
    "embodied_energy_kwh",
    "operational_energy_kwh",
    "carbon_intensity_g_per_kwh",
    "embodied_carbon_kg",
    "operational_carbon_kg",
    "total_carbon_kg",
    "inputs_digest",
    "notes",
)
RENDER_FORMATS = ("json", "csv", "table", "markdown")
_REL_TOL = 1e-9


def _close(a: float, b: float) -> bool:
    return math.isclose(a, b, rel_tol=_REL_TOL, abs_tol=1e-12)


def digest_inputs(inputs: dict) -> str:
    blob = json.dumps(inputs, sort_keys=True, separators=(",", ":"), default=str)
    return "sha256:" + hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class FootprintReport:
    embodied_energy: EnergyQuantity
    operational_energy: EnergyQuantity
    carbon_intensity: CarbonIntensityValue
    embodied_carbon: CarbonQuantity
    operational_carbon: CarbonQuantity
    total_carbon: CarbonQuantity
    inputs_digest: str
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "notes", tuple(self.notes))
        ci = self.carbon_intensity
        if not _close(self.embodied_carbon.grams_co2eq,
                      carbon_from_energy(self.embodied_energy, ci).grams_co2eq):
            raise ValueError("embodied carbon does not match embodied energy x intensity")
        if not _close(self.operational_carbon.grams_co2eq,
                      carbon_from_energy(self.operational_energy, ci).grams_co2eq):
            raise ValueError("operational carbon does not match operational energy x intensity")
        if not _close(self.total_carbon.grams_co2eq,
                      self.embodied_carbon.grams_co2eq + self.operational_carbon.grams_co2eq):
            raise ValueError("total carbon is not embodied + operational")

    def to_dict(self) -> dict:
        return {
            "embodied_energy_kwh": _json_num(self.embodied_energy.kwh),
            "operational_energy_kwh": _json_num(self.operational_energy.kwh),
            "carbon_intensity_g_per_kwh": _json_num(self.carbon_intensity.grams_per_kwh),
            "embodied_carbon_kg": _json_num(self.embodied_carbon.kg),
            "operational_carbon_kg": _json_num(self.operational_carbon.kg),
            "total_carbon_kg": _json_num(self.total_carbon.kg),
            "inputs_digest": self.inputs_digest,
            "notes": list(self.notes),
        }


def _json_num(x: float) -> float:
    # 12 significant digits: a re-parsed report renders back to the same bytes
    # even though kWh <-> J and kg <-> g conversions are not bit-exact
    return float(f"{x:.12g}")


def build_report(emb: EnergyQuantity, op: EnergyQuantity, ci: CarbonIntensityValue,
                 notes: Iterable[str] = (), inputs: dict | None = None) -> FootprintReport:
    """Embodied + operational footprint on one grid; total = sum of unrounded parts."""
    emb_c = carbon_from_energy(emb, ci)
    op_c = carbon_from_energy(op, ci)
    digest_src = {
        "embodied_energy_j": repr(emb.joules),
        "operational_energy_j": repr(op.joules),
        "carbon_intensity_g_per_kwh": repr(ci.grams_per_kwh),
    }
    if inputs:
        digest_src["inputs"] = inputs
    return FootprintReport(
        embodied_energy=emb,
        operational_energy=op,
        carbon_intensity=ci,
        embodied_carbon=emb_c,
        operational_carbon=op_c,
        total_carbon=add_carbon(emb_c, op_c),
        inputs_digest=digest_inputs(digest_src),
        notes=tuple(notes),
    )


def report_from_json(text: str) -> FootprintReport:
    data = json.loads(text)
    missing = [k for k in JSON_FIELDS if k not in data]
    if missing:
        raise ValueError(f"report JSON is missing field(s): {', '.join(missing)}")
    return FootprintReport(
        embodied_energy=EnergyQuantity.from_kwh(data["embodied_energy_kwh"]),
        operational_energy=EnergyQuantity.from_kwh(data["operational_energy_kwh"]),
        carbon_intensity=CarbonIntensityValue(data["carbon_intensity_g_per_kwh"]),
        embodied_carbon=CarbonQuantity.from_kg(data["embodied_carbon_kg"]),
        operational_carbon=CarbonQuantity.from_kg(data["operational_carbon_kg"]),
        total_carbon=CarbonQuantity.from_kg(data["total_carbon_kg"]),
        inputs_digest=data["inputs_digest"],
        notes=tuple(data["notes"]),
    )


def table_rows(r: FootprintReport, rounding: str = "truncate") -> list[tuple[str, str]]:
    """(label, value) pairs in the order of the published summary table."""
    f = lambda x: format_display(x, 3, rounding)  # noqa: E731
    return [
        ("Embodied Energy", f"{f(r.embodied_energy.kwh)} kWh"),
        ("Operational Energy", f"{f(r.operational_energy.kwh)} kWh"),
        ("Carbon Intensity", f"{f(r.carbon_intensity.kg_per_kwh)} kgCO2e/kWh"),
        ("Embodied Carbon Emissions", f"{f(r.embodied_carbon.kg)} kgCO2e"),
        ("Operational Carbon Emissions", f"{f(r.operational_carbon.kg)} kgCO2e"),
        ("Total Carbon Emissions (LLMaaS CO2eq)", f"{f(r.total_carbon.kg)} kgCO2e"),
    ]


def render_report(r: FootprintReport, format: str = "table", rounding: str = "truncate") -> str:
    if format == "json":
        return json.dumps(r.to_dict(), indent=2, sort_keys=False) + "\n"
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric", "value", "unit"])
        for label, value in table_rows(r, rounding):
            number, unit = value.split(" ", 1)
            w.writerow([label, number, unit])
        return buf.getvalue()
    rows = table_rows(r, rounding)
    if format == "table":
        width = max(len(label) for label, _ in rows)
        lines = [f"{'Metric':<{width}}  Value", "-" * (width + 20)]
        lines += [f"{label:<{width}}  {value}" for label, value in rows]
        lines += [f"note: {n}" for n in r.notes]
        return "\n".join(lines) + "\n"
    if format == "markdown":
        lines = ["| Metric | Value |", "|---|---:|"]
        lines += [f"| {label} | {value} |" for label, value in rows]
        if r.notes:
            lines.append("")
            lines += [f"- {n}" for n in r.notes]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {format!r}; expected one of {', '.join(RENDER_FORMATS)}")


# ---------------------------------------------------------------- ledger


class EntryKind(enum.Enum):
    EMBODIED = "embodied"
    OPERATIONAL = "operational"


@dataclass(frozen=True)
class LedgerEntry:
    timestamp: str
    kind: EntryKind
    fragment: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", EntryKind(self.kind))

    def to_json(self) -> str:
        return json.dumps({"timestamp": self.timestamp, "kind": self.kind.value,
                           "label": self.label, "fragment": self.fragment},
                          sort_keys=True, separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> LedgerEntry:
        data = json.loads(line)
        if not isinstance(data, dict):
            raise ValueError("ledger line is not a JSON object")
        return cls(data["timestamp"], EntryKind(data["kind"]), data.get("fragment", {}), data.get("label", ""))

    @classmethod
    def from_session(cls, s: EmbodiedSession) -> LedgerEntry:
        fragment = {
            "energy_j": s.energy.joules,
            "carbon_g": s.carbon.grams_co2eq,
            "token_latency_s": s.profile.token_latency_s,
            "token_count": s.profile.token_count,
        }
        if s.model is not None:
            fragment["power_w"] = s.model.p_cpu.watts + s.model.p_mem_per_gb * s.model.memory_gb
        if s.intensity is not None:
            fragment["carbon_intensity_g_per_kwh"] = s.intensity.grams_per_kwh
        return cls(s.timestamp.isoformat(), EntryKind.EMBODIED, fragment, s.label)

    def to_session(self) -> EmbodiedSession:
        if self.kind is not EntryKind.EMBODIED:
            raise ValueError("only embodied entries describe an inference session")
        f = self.fragment
        return EmbodiedSession(
            timestamp=datetime.fromisoformat(self.timestamp),
            profile=InferenceProfile(f["token_latency_s"], f["token_count"]),
            energy=EnergyQuantity(f["energy_j"]),
            carbon=CarbonQuantity(f["carbon_g"]),
            label=self.label,
        )


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class LedgerContents:
    entries: tuple[LedgerEntry, ...]
    errors: tuple[tuple[int, str], ...]  # (line number, reason)


def read_ledger(path) -> LedgerContents:
    path = Path(path)
    if not path.exists():
        return LedgerContents((), ())
    entries = []
    errors = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            complete = line.endswith("\n")
            line = line.strip()
            if not line:
                continue
            try:
                entries.append(LedgerEntry.from_json(line))
            except (ValueError, KeyError, TypeError) as exc:
                reason = "truncated line" if not complete else f"unreadable entry: {exc}"
                errors.append((lineno, reason))
    return LedgerContents(tuple(entries), tuple(errors))


def append_ledger(path, entry: LedgerEntry) -> int:
    """Append ``entry`` as one JSON line and return the number of readable entries.

    Existing bytes are never rewritten. If the file ends in a partial line
    (an interrupted writer), the new entry starts on a fresh line so the damage
    stays confined to that one line.
    """
    path = Path(path)
    data = (entry.to_json() + "\n").encode("utf-8")
    fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
    try:
        size = os.fstat(fd).st_size
        if size:
            with path.open("rb") as fh:
                fh.seek(size - 1)
                if fh.read(1) != b"\n":
                    data = b"\n" + data
        # one write() per entry keeps concurrent appends line-atomic
        written = os.write(fd, data)
        if written != len(data):
            raise OSError(f"short write to ledger {path}: {written} of {len(data)} bytes")
        os.fsync(fd)
    finally:
        os.close(fd)
    return len(read_ledger(path).entries)


def embodied_sessions(contents: LedgerContents) -> list[EmbodiedSession]:
    return [e.to_session() for e in contents.entries if e.kind is EntryKind.EMBODIED]


def operational_energy_total(contents: LedgerContents) -> EnergyQuantity:
    return EnergyQuantity(math.fsum(e.fragment["energy_j"] for e in contents.entries
                                    if e.kind is EntryKind.OPERATIONAL))
