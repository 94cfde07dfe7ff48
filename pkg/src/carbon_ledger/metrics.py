"""Run a command under measurement and record the five sustainability metrics.

The five metrics are correctness, runtime, peak memory, FLOPs and
operational energy. FLOPs are only ever supplied by the caller, and energy is
joined afterwards from an energy log (see :mod:`carbon_ledger.operational`).
A metric that was not measured is ``None``, never ``0``.
"""

from __future__ import annotations

import logging
import os
import signal
import subprocess
import sys
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import psutil

from .quantities import EnergyQuantity

log = logging.getLogger(__name__)

SAMPLE_PERIOD_S = 0.05  # 20 Hz
_REAP_PERIOD_S = 0.002


class LaunchError(OSError):
    """The command could not be started."""


class ContractError(ValueError):
    pass


@dataclass(frozen=True)
class Correctness:
    passed: int
    total: int

    def __post_init__(self):
        if int(self.passed) != self.passed or int(self.total) != self.total:
            raise ContractError("pass and total counts must be integers")
        if self.total <= 0:
            raise ContractError(f"total must be positive, got {self.total}")
        if not 0 <= self.passed <= self.total:
            raise ContractError(f"passed ({self.passed}) must be between 0 and total ({self.total})")

    @property
    def rate(self) -> Fraction:
        return pass_rate(self.passed, self.total)

    def __str__(self):
        return f"{self.passed}/{self.total}"


def pass_rate(passed: int, total: int) -> Fraction:
    """Exact fraction of passing tests."""
    if int(passed) != passed or int(total) != total:
        raise ContractError("pass and total counts must be integers")
    if total <= 0:
        raise ContractError(f"total must be positive, got {total}")
    if passed < 0 or passed > total:
        raise ContractError(f"passed ({passed}) must be between 0 and total ({total})")
    return Fraction(int(passed), int(total))


@dataclass(frozen=True)
class MetricSelection:
    correctness: bool = True
    runtime: bool = True
    memory: bool = True
    flops: bool = True
    energy: bool = True

    def __post_init__(self):
        if not any((self.correctness, self.runtime, self.memory, self.flops, self.energy)):
            raise ValueError("at least one metric must be enabled")

    @classmethod
    def only(cls, *names: str) -> MetricSelection:
        fields = {"correctness", "runtime", "memory", "flops", "energy"}
        bad = set(names) - fields
        if bad:
            raise ValueError(f"unknown metrics: {sorted(bad)}")
        return cls(**{f: f in names for f in fields})


@dataclass(frozen=True)
class SustainabilityMetrics:
    correctness: Correctness | None = None
    runtime_s: float | None = None
    peak_memory_bytes: int | None = None
    flops: int | None = None
    energy: EnergyQuantity | None = None
    exit_code: int | None = None
    timed_out: bool = False
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.runtime_s is not None and self.runtime_s < 0:
            raise ValueError("runtime must be non-negative")
        if self.peak_memory_bytes is not None and self.peak_memory_bytes < 0:
            raise ValueError("peak memory must be non-negative")
        if self.flops is not None and (int(self.flops) != self.flops or self.flops < 0):
            raise ValueError("flops must be a non-negative integer")

    def to_dict(self) -> dict:
        c = self.correctness
        return {
            "correctness": None if c is None else {"passed": c.passed, "total": c.total,
                                                   "rate": float(c.rate)},
            "runtime_s": self.runtime_s,
            "peak_memory_bytes": self.peak_memory_bytes,
            "flops": self.flops,
            "energy_j": None if self.energy is None else self.energy.joules,
            "exit_code": self.exit_code,
            "timed_out": self.timed_out,
            "notes": list(self.notes),
        }


def attach_energy(m: SustainabilityMetrics, e: EnergyQuantity, source: str = "") -> SustainabilityMetrics:
    """Return ``m`` with operational energy set to ``e``.

    Replacing an already attached value is allowed and leaves a note behind.
    """
    notes = m.notes
    if m.energy is not None:
        notes = notes + (f"energy replaced: {m.energy.joules!r} J -> {e.joules!r} J"
                         + (f" (from {source})" if source else ""),)
    elif source:
        notes = notes + (f"energy attached from {source}",)
    return replace(m, energy=e, notes=notes)


def read_test_report(path) -> Correctness:
    """Read pass/total counts from a JUnit-style XML report or a ``passed,total`` text file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8").strip()
    if text.startswith("<"):
        try:
            root = ET.fromstring(text)
        except ET.ParseError as exc:
            raise ValueError(f"{path}: malformed XML test report: {exc}") from None
        suites = [root] if root.tag == "testsuite" else root.findall(".//testsuite")
        if not suites and root.get("tests") is not None:
            suites = [root]
        total = failed = skipped = 0
        for s in suites:
            total += int(s.get("tests", 0))
            failed += int(s.get("failures", 0)) + int(s.get("errors", 0))
            skipped += int(s.get("skipped", 0))
        run = total - skipped
        if run <= 0:
            raise ValueError(f"{path}: test report contains no executed tests")
        return Correctness(run - failed, run)
    parts = [p.strip() for p in text.replace("/", ",").split(",")]
    if len(parts) != 2:
        raise ValueError(f"{path}: expected 'passed,total', got {text!r}")
    try:
        passed, total = int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"{path}: expected integer counts, got {text!r}") from None
    return Correctness(passed, total)


def _tree_rss(proc: psutil.Process) -> int:
    try:
        procs = [proc] + proc.children(recursive=True)
    except psutil.Error:
        return 0
    total = 0
    for p in procs:
        try:
            total += p.memory_info().rss
        except psutil.Error:
            pass
    return total


def _maxrss_bytes(ru) -> int:
    # ru_maxrss is kilobytes on Linux, bytes on macOS
    return ru.ru_maxrss if sys.platform == "darwin" else ru.ru_maxrss * 1024


def _kill_tree(pid: int, pgid: int | None):
    try:
        descendants = psutil.Process(pid).children(recursive=True)
    except psutil.Error:
        descendants = []
    if pgid is not None:
        try:
            os.killpg(pgid, signal.SIGKILL)
        except (ProcessLookupError, PermissionError):
            pass
    for p in descendants:
        try:
            p.kill()
        except psutil.Error:
            pass
    psutil.wait_procs(descendants, timeout=2)


def run_measured(command: Sequence[str], workdir=".", timeout_s: float = 600.0,
                 sel: MetricSelection | None = None, *, flops: int | None = None,
                 report: Correctness | None = None, env: dict | None = None) -> SustainabilityMetrics:
    """Run ``command`` in ``workdir`` and measure it.

    Runtime is wall time from spawn to exit. Peak memory is the larger of the
    sampled RSS of the whole child process tree (20 Hz) and the kernel's
    post-exit maxrss for the child. Correctness is 1/1 for exit status 0 and
    0/1 otherwise, unless ``report`` supplies real counts. On timeout the
    process tree is killed and partial metrics come back with
    ``timed_out=True``. No child process survives the call.
    """
    sel = sel or MetricSelection()
    command = list(command)
    if not command:
        raise ValueError("command must be nonempty")
    workdir = Path(workdir)
    if not workdir.is_dir():
        raise ValueError(f"workdir does not exist: {workdir}")
    if not timeout_s > 0:
        raise ValueError("timeout must be positive")

    start = time.perf_counter()
    try:
        proc = subprocess.Popen(command, cwd=workdir, env=env, start_new_session=True)
    except OSError as exc:
        raise LaunchError(f"failed to launch {command[0]!r}: {exc}") from exc
    pgid = proc.pid  # new session: the child leads its own process group

    try:
        ps_proc = psutil.Process(proc.pid)
    except psutil.Error:
        ps_proc = None
    peak = 0
    timed_out = False
    next_sample = start
    while True:
        now = time.perf_counter()
        if sel.memory and ps_proc is not None and now >= next_sample:
            peak = max(peak, _tree_rss(ps_proc))
            next_sample = now + SAMPLE_PERIOD_S
        # WNOWAIT leaves the child a zombie, so its process group id cannot be
        # recycled before the group is cleaned up below
        if os.waitid(os.P_PID, proc.pid, os.WEXITED | os.WNOHANG | os.WNOWAIT) is not None:
            end = time.perf_counter()
            break
        if now - start > timeout_s:
            timed_out = True
            _kill_tree(proc.pid, pgid)
            os.waitid(os.P_PID, proc.pid, os.WEXITED | os.WNOWAIT)
            end = time.perf_counter()
            break
        time.sleep(_REAP_PERIOD_S)

    # background descendants left behind in the child's process group
    try:
        os.killpg(pgid, signal.SIGKILL)
    except (ProcessLookupError, PermissionError):
        pass
    _, status, ru = os.wait4(proc.pid, 0)
    proc.returncode = os.waitstatus_to_exitcode(status)

    exit_code = proc.returncode
    notes = []
    if timed_out:
        notes.append(f"timed out after {timeout_s:g} s; process tree killed")
    correctness = None
    if sel.correctness:
        if report is not None:
            correctness = report
        else:
            correctness = Correctness(1 if exit_code == 0 and not timed_out else 0, 1)
    return SustainabilityMetrics(
        correctness=correctness,
        runtime_s=(end - start) if sel.runtime else None,
        peak_memory_bytes=max(peak, _maxrss_bytes(ru)) if sel.memory else None,
        flops=flops if sel.flops else None,
        energy=None,
        exit_code=exit_code,
        timed_out=timed_out,
        notes=tuple(notes),
    )
