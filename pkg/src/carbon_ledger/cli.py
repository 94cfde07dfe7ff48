"""``carbon-ledger`` command line interface.

Exit codes: 0 success, 1 usage error, 2 input/format error, 3 no match or
empty result, 4 remote provider failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timedelta, timezone
from pathlib import Path

from . import __version__
from .config import Config, ConfigError, load_config
from .embodied import EmbodiedSession, InferenceProfile, ServerPowerModel, accumulate_dynamic
from .intensity import (
    BuiltinTable,
    FileTable,
    RemoteEndpoint,
    RemoteFormatError,
    TransportError,
    UnknownZoneError,
    lookup_intensity,
    parse_intensity,
)
from .metrics import MetricSelection, attach_energy, read_test_report, run_measured, Correctness
from .operational import (
    NoMatchError,
    ProcessFilter,
    parse_energy_log,
    parse_timestamp,
    sum_process_energy,
    operational_carbon,
)
from .quantities import CarbonIntensityValue, EnergyQuantity, PowerQuantity, format_display
from .replication import render_checks, run_checks
from .report import (
    EntryKind,
    LedgerEntry,
    RENDER_FORMATS,
    append_ledger,
    build_report,
    embodied_sessions,
    now_iso,
    operational_energy_total,
    read_ledger,
    render_report,
)
from .tokens import CorpusStats, Direction, TokenLedger, consumption_seconds, ledger_totals, scan_corpus

log = logging.getLogger("carbon_ledger")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NO_MATCH, EXIT_REMOTE = range(5)
DEFAULT_ZONE = "DE-CASE-STUDY"


class UsageError(Exception):
    pass


class EmptyResult(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _num(x: float) -> float:
    return float(f"{x:.12g}")


# --------------------------------------------------------------- intensity


def _add_ci_options(p):
    g = p.add_argument_group("carbon intensity")
    g.add_argument("--ci", help="explicit intensity, e.g. 172, '172 g/kWh' or '0.172 kg/kWh'")
    g.add_argument("--zone", help=f"grid zone id (default {DEFAULT_ZONE})")
    g.add_argument("--zones-file", help="CSV zone table (zone_id,g_per_kwh,description); shadows builtin zones")
    g.add_argument("--ci-url", help="remote intensity service base URL (selects the remote provider)")
    g.add_argument("--ci-retries", type=int, help="retries for the remote provider")


def _resolve_ci(args, cfg: Config) -> tuple[CarbonIntensityValue, str]:
    if getattr(args, "ci", None):
        return parse_intensity(args.ci), "explicit"
    zone = args.zone or cfg.ci_zone
    url = args.ci_url or cfg.ci_url
    if url:
        retries = args.ci_retries if args.ci_retries is not None else cfg.ci_retries
        zone = zone or DEFAULT_ZONE
        return lookup_intensity(zone, RemoteEndpoint(url, retries=retries)), f"remote {url} zone {zone}"
    if cfg.ci_value and not args.zone:
        return parse_intensity(cfg.ci_value), "config"
    zone = zone or DEFAULT_ZONE
    chain = []
    zones_file = args.zones_file or cfg.ci_file
    if zones_file:
        chain.append(FileTable(Path(zones_file)))
    chain.append(BuiltinTable())
    return lookup_intensity(zone, chain), f"zone {zone}"


def cmd_intensity(args, cfg):
    if args.zone_pos:
        args.zone = args.zone_pos
    ci, source = _resolve_ci(args, cfg)
    sys.stdout.write(_emit({"carbonIntensity": ci.grams_per_kwh, "unit": "gCO2eq/kWh", "source": source}))
    return EXIT_OK


# --------------------------------------------------------------- scan


def cmd_scan(args, cfg):
    stats = scan_corpus(args.root, args.include or ["**/*"], Direction.parse(args.direction), args.label or "")
    cu = consumption_seconds(stats.total_tokens, stats.direction, cfg.rates)
    out = stats.to_dict()
    out["cu_seconds"] = float(cu)
    if args.format == "json":
        sys.stdout.write(_emit(out))
    else:
        for k in ("label", "direction", "file_count", "total_words", "total_tokens", "cu_seconds"):
            sys.stdout.write(f"{k:<13} {out[k]}\n")
        for s in stats.skipped:
            sys.stdout.write(f"skipped       {s}\n")
    if stats.file_count == 0:
        raise EmptyResult(f"no files matched under {args.root}")
    return EXIT_OK


# --------------------------------------------------------------- embodied


def _token_ledger(args) -> TokenLedger:
    entries = []
    for path in args.scan_json or []:
        try:
            entries.append(CorpusStats.from_dict(json.loads(Path(path).read_text(encoding="utf-8"))))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"{path}: not a scan result ({exc})") from None
    return TokenLedger(tuple(entries))


def cmd_estimate_embodied(args, cfg):
    preset = cfg.get_preset(args.preset)
    m = preset.model
    model = ServerPowerModel(
        PowerQuantity(args.p_cpu if args.p_cpu is not None else m.p_cpu.watts),
        args.p_mem_per_gb if args.p_mem_per_gb is not None else m.p_mem_per_gb,
        args.memory_gb if args.memory_gb is not None else m.memory_gb,
    )
    latency = args.latency if args.latency is not None else preset.token_latency_s
    tokens = args.tokens
    if tokens is None:
        if not args.scan_json:
            raise UsageError("give --tokens N or one or more --scan-json files")
        tokens, _ = ledger_totals(_token_ledger(args), cfg.rates)
    ci, source = _resolve_ci(args, cfg)
    ts = datetime.now(timezone.utc) if args.ledger or cfg.ledger else datetime(1970, 1, 1, tzinfo=timezone.utc)
    session = EmbodiedSession.compute(model, InferenceProfile(latency, tokens), ci, args.label or "", ts)
    out = {
        "power_w": _num(model.p_cpu.watts + model.p_mem_per_gb * model.memory_gb),
        "token_latency_s": latency,
        "token_count": tokens,
        "energy_kwh": _num(session.energy.kwh),
        "carbon_kg": _num(session.carbon.kg),
        "carbon_intensity_g_per_kwh": ci.grams_per_kwh,
        "intensity_source": source,
    }
    ledger = args.ledger or cfg.ledger
    if ledger:
        out["ledger_entries"] = append_ledger(ledger, LedgerEntry.from_session(session))
    if args.format == "json":
        sys.stdout.write(_emit(out))
    else:
        sys.stdout.write(f"Embodied Energy            {format_display(session.energy.kwh, 3, cfg.rounding)} kWh\n"
                         f"Embodied Carbon Emissions  {format_display(session.carbon.kg, 3, cfg.rounding)} kgCO2e\n")
    return EXIT_OK


# --------------------------------------------------------------- operational


def cmd_ingest_energy(args, cfg):
    log_ = parse_energy_log(args.log, strict=not args.lenient, mapping=cfg.column_mapping)
    start = parse_timestamp(args.start) if args.start else None
    end = parse_timestamp(args.end) if args.end else None
    energy = sum_process_energy(log_, ProcessFilter(args.process), start, end)
    ci, source = _resolve_ci(args, cfg)
    carbon = operational_carbon(energy, ci)
    out = {
        "process": args.process,
        "energy_kj": _num(energy.kj),
        "energy_kwh": _num(energy.kwh),
        "carbon_kg": _num(carbon.kg),
        "carbon_intensity_g_per_kwh": ci.grams_per_kwh,
        "intensity_source": source,
        "skipped_rows": [{"line": line, "reason": reason} for line, reason in log_.skipped],
    }
    ledger = args.ledger or cfg.ledger
    if ledger:
        entry = LedgerEntry(now_iso(), EntryKind.OPERATIONAL,
                            {"energy_j": energy.joules, "carbon_g": carbon.grams_co2eq,
                             "process": args.process, "log": str(args.log)}, args.label or "")
        out["ledger_entries"] = append_ledger(ledger, entry)
    if args.format == "json":
        sys.stdout.write(_emit(out))
    else:
        sys.stdout.write(f"Operational Energy  {energy.kj:g} kJ  {format_display(energy.kwh, 4, 'half-up')} kWh\n"
                         f"Operational Carbon  {format_display(carbon.kg, 3, cfg.rounding)} kgCO2e\n")
        if log_.skipped:
            sys.stdout.write(f"skipped {log_.skip_count} row(s)\n")
    return EXIT_OK


# --------------------------------------------------------------- measure


def cmd_measure(args, cfg):
    command = list(args.command)
    if command and command[0] == "--":
        command = command[1:]
    if not command:
        raise UsageError("no command given; use: carbon-ledger measure [options] -- CMD ...")
    if (args.passed is None) != (args.total is None):
        raise UsageError("--passed and --total go together")
    report = None
    if args.test_report:
        report = read_test_report(args.test_report)
    elif args.passed is not None:
        report = Correctness(args.passed, args.total)
    sel = MetricSelection.only(*args.metrics.split(",")) if args.metrics else MetricSelection()
    wall_start = datetime.now().astimezone()
    metrics = run_measured(command, args.workdir, args.timeout, sel, flops=args.flops, report=report)
    wall_end = datetime.now().astimezone()
    if args.energy_log and sel.energy:
        if not args.process:
            raise UsageError("--energy-log needs --process")
        elog = parse_energy_log(args.energy_log, strict=not args.lenient, mapping=cfg.column_mapping)
        aware = bool(elog.records) and elog.records[0].timestamp.tzinfo is not None
        slack = timedelta(seconds=60)
        lo, hi = wall_start - slack, wall_end + slack
        if not aware:
            lo, hi = lo.replace(tzinfo=None), hi.replace(tzinfo=None)
        if args.window_start:
            lo = parse_timestamp(args.window_start)
        if args.window_end:
            hi = parse_timestamp(args.window_end)
        energy = sum_process_energy(elog, ProcessFilter(args.process), lo, hi)
        metrics = attach_energy(metrics, energy, source=str(args.energy_log))
    sys.stdout.write(_emit(metrics.to_dict()))
    return EXIT_OK


# --------------------------------------------------------------- report


def _energy_arg(kwh, kj, joules) -> EnergyQuantity | None:
    given = [x for x in (kwh, kj, joules) if x is not None]
    if len(given) > 1:
        raise UsageError("give the energy in exactly one unit")
    if kwh is not None:
        return EnergyQuantity.from_kwh(kwh)
    if kj is not None:
        return EnergyQuantity.from_kj(kj)
    if joules is not None:
        return EnergyQuantity(joules)
    return None


def cmd_report(args, cfg):
    notes = []
    inputs = {}
    emb = _energy_arg(args.embodied_kwh, args.embodied_kj, args.embodied_j)
    op = _energy_arg(args.operational_kwh, args.operational_kj, args.operational_j)
    if args.from_ledger:
        contents = read_ledger(args.from_ledger)
        for line, reason in contents.errors:
            notes.append(f"ledger line {line} skipped: {reason}")
        if not contents.entries:
            raise EmptyResult(f"ledger {args.from_ledger} has no readable entries")
        inputs["ledger"] = [e.to_json() for e in contents.entries]
        if emb is None:
            emb, _ = accumulate_dynamic(embodied_sessions(contents))
            notes.append(f"embodied energy summed over {len(embodied_sessions(contents))} ledger session(s)")
        if op is None:
            op = operational_energy_total(contents)
    if emb is None or op is None:
        raise UsageError("need embodied and operational energy (flags or --from-ledger)")
    ci, source = _resolve_ci(args, cfg)
    inputs["intensity_source"] = source
    report = build_report(emb, op, ci, notes=notes, inputs=inputs)
    sys.stdout.write(render_report(report, args.format, args.rounding or cfg.rounding))
    return EXIT_OK


# --------------------------------------------------------------- replicate


def cmd_replicate(args, cfg):
    checks = run_checks()
    sys.stdout.write(render_checks(checks))
    return EXIT_INPUT if any(c.status == "FAIL" for c in checks) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="carbon-ledger", description="Carbon accounting for LLM-assisted code generation.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--config", help="JSON config file (default ./carbon-ledger.json if present)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("scan", help="count files, words and tokens in a code corpus")
    s.add_argument("root")
    s.add_argument("--include", action="append", metavar="GLOB", help="glob relative to ROOT, repeatable")
    s.add_argument("--direction", default="input", choices=["input", "output"])
    s.add_argument("--label")
    s.add_argument("--format", default="json", choices=["json", "table"])
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("estimate-embodied", help="embodied inference energy and carbon")
    s.add_argument("--tokens", type=int, help="total tokens N")
    s.add_argument("--scan-json", action="append", metavar="FILE", help="scan output to take tokens from")
    s.add_argument("--preset")
    s.add_argument("--p-cpu", type=float, metavar="W")
    s.add_argument("--p-mem-per-gb", type=float, metavar="W/GB")
    s.add_argument("--memory-gb", type=float, metavar="GB")
    s.add_argument("--latency", type=float, metavar="S", help="seconds per token")
    s.add_argument("--ledger", help="append the session to this JSON Lines ledger")
    s.add_argument("--label")
    s.add_argument("--format", default="json", choices=["json", "table"])
    _add_ci_options(s)
    s.set_defaults(func=cmd_estimate_embodied)

    s = sub.add_parser("ingest-energy", help="sum a process's energy from an energy-monitor CSV")
    s.add_argument("log")
    s.add_argument("--process", required=True, help="process name or glob")
    s.add_argument("--lenient", action="store_true", help="skip bad rows instead of failing")
    s.add_argument("--start", help="ISO-8601 window start")
    s.add_argument("--end", help="ISO-8601 window end")
    s.add_argument("--ledger")
    s.add_argument("--label")
    s.add_argument("--format", default="json", choices=["json", "table"])
    _add_ci_options(s)
    s.set_defaults(func=cmd_ingest_energy)

    s = sub.add_parser("measure", help="run a command and record sustainability metrics")
    s.add_argument("--workdir", default=".")
    s.add_argument("--timeout", type=float, default=600.0)
    s.add_argument("--metrics", help="comma list of correctness,runtime,memory,flops,energy")
    s.add_argument("--flops", type=int, help="externally counted FLOPs")
    s.add_argument("--passed", type=int)
    s.add_argument("--total", type=int)
    s.add_argument("--test-report", help="JUnit XML or 'passed,total' file")
    s.add_argument("--energy-log", help="energy-monitor CSV to join energy from")
    s.add_argument("--process", help="process name in the energy log")
    s.add_argument("--lenient", action="store_true")
    s.add_argument("--window-start")
    s.add_argument("--window-end")
    s.add_argument("command", nargs=argparse.REMAINDER)
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("intensity", help="look up grid carbon intensity")
    s.add_argument("zone_pos", nargs="?", metavar="ZONE")
    _add_ci_options(s)
    s.set_defaults(func=cmd_intensity)

    s = sub.add_parser("report", help="assemble and render the footprint report")
    for kind in ("embodied", "operational"):
        s.add_argument(f"--{kind}-kwh", type=float)
        s.add_argument(f"--{kind}-kj", type=float)
        s.add_argument(f"--{kind}-j", type=float)
    s.add_argument("--from-ledger", help="take missing energies from a session ledger")
    s.add_argument("--format", default="table", choices=RENDER_FORMATS)
    s.add_argument("--rounding", choices=["truncate", "half-up"])
    _add_ci_options(s)
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("replicate-paper", help="recompute the LLMaaS case-study tables")
    s.set_defaults(func=cmd_replicate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"carbon-ledger: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NoMatchError, UnknownZoneError, EmptyResult) as exc:
        print(f"carbon-ledger: {exc}", file=sys.stderr)
        return EXIT_NO_MATCH
    except (TransportError, RemoteFormatError) as exc:
        print(f"carbon-ledger: remote provider failed: {exc}", file=sys.stderr)
        return EXIT_REMOTE
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        print(f"carbon-ledger: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
