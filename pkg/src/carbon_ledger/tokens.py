"""Token estimates and Capacity-Unit (CU) consumption seconds for code corpora."""

from __future__ import annotations

import enum
import logging
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

# 1000 tokens per 750 words
TOKENS_PER_WORD = Fraction(4, 3)


class Direction(enum.Enum):
    INPUT = "input"
    OUTPUT = "output"

    @classmethod
    def parse(cls, value: str | Direction) -> Direction:
        if isinstance(value, Direction):
            return value
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"direction must be 'input' or 'output', got {value!r}") from None


@dataclass(frozen=True)
class ConsumptionRateModel:
    """CU-seconds charged per token, by direction.

    Rates are held as exact fractions (``Fraction("0.4")``) so that totals are
    additive without float drift.
    """

    input_rate: Fraction = Fraction(2, 5)
    output_rate: Fraction = Fraction(6, 5)

    def __post_init__(self):
        for name in ("input_rate", "output_rate"):
            value = getattr(self, name)
            value = value if isinstance(value, Fraction) else Fraction(str(value))
            if value < 0:
                raise ValueError(f"{name} must be non-negative, got {value}")
            object.__setattr__(self, name, value)

    def rate(self, d: Direction) -> Fraction:
        return self.input_rate if d is Direction.INPUT else self.output_rate


@dataclass(frozen=True)
class CorpusStats:
    file_count: int
    total_words: int
    total_tokens: int
    direction: Direction
    label: str = ""
    measured: bool = False
    skipped: tuple[str, ...] = ()

    def __post_init__(self):
        for name in ("file_count", "total_words", "total_tokens"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
        if self.file_count == 0 and self.total_words != 0:
            raise ValueError("a corpus with no files cannot contain words")
        if not self.measured and self.total_tokens != words_to_tokens(self.total_words):
            raise ValueError(
                f"derived token count {self.total_tokens} does not match "
                f"words_to_tokens({self.total_words}); pass measured=True for supplied counts"
            )
        object.__setattr__(self, "direction", Direction.parse(self.direction))

    @classmethod
    def from_words(cls, file_count: int, total_words: int, direction, label: str = "") -> CorpusStats:
        return cls(file_count, total_words, words_to_tokens(total_words), direction, label)

    @classmethod
    def from_measured_tokens(cls, file_count: int, total_words: int, total_tokens: int,
                             direction, label: str = "") -> CorpusStats:
        return cls(file_count, total_words, total_tokens, direction, label, measured=True)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "direction": self.direction.value,
            "file_count": self.file_count,
            "total_words": self.total_words,
            "total_tokens": self.total_tokens,
            "measured": self.measured,
            "skipped": list(self.skipped),
        }

    @classmethod
    def from_dict(cls, data: dict) -> CorpusStats:
        return cls(
            file_count=data["file_count"],
            total_words=data["total_words"],
            total_tokens=data["total_tokens"],
            direction=Direction.parse(data["direction"]),
            label=data.get("label", ""),
            measured=data.get("measured", False),
            skipped=tuple(data.get("skipped", ())),
        )


@dataclass(frozen=True)
class TokenLedger:
    entries: tuple[CorpusStats, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    def __add__(self, other: TokenLedger) -> TokenLedger:
        return TokenLedger(self.entries + other.entries)

    @property
    def total_tokens(self) -> int:
        return sum(e.total_tokens for e in self.entries)


def words_to_tokens(words: int) -> int:
    """Estimated token count for ``words`` words, rounded half-up."""
    if int(words) != words or words < 0:
        raise ValueError(f"words must be a non-negative integer, got {words!r}")
    # floor(4w/3 + 1/2) in integer arithmetic
    return (8 * int(words) + 3) // 6


def count_words(text: str) -> int:
    return len(text.split())


def _match_files(root: Path, include_globs: Sequence[str]) -> list[Path]:
    found = set()
    for pattern in include_globs:
        for p in root.glob(pattern):
            if p.is_file():
                found.add(p)
    return sorted(found)


def scan_corpus(root, include_globs: Iterable[str] = ("**/*",), direction=Direction.INPUT,
                label: str = "") -> CorpusStats:
    """Count files, words and estimated tokens below ``root``.

    Files that are not valid UTF-8 text are skipped with a warning and listed
    in ``CorpusStats.skipped`` (as paths relative to ``root``).
    """
    root = Path(root)
    if not root.is_dir():
        raise OSError(f"corpus root is not a readable directory: {root}")
    try:
        next(iter(root.iterdir()), None)
    except OSError as exc:
        raise OSError(f"cannot read corpus root {root}: {exc}") from exc

    files = words = 0
    skipped = []
    for path in _match_files(root, list(include_globs)):
        rel = path.relative_to(root).as_posix()
        try:
            text = path.read_bytes().decode("utf-8")
        except (UnicodeDecodeError, OSError) as exc:
            warnings.warn(f"skipping {rel}: not readable as UTF-8 text ({exc.__class__.__name__})",
                          stacklevel=2)
            skipped.append(rel)
            continue
        if "\x00" in text:
            warnings.warn(f"skipping {rel}: binary content", stacklevel=2)
            skipped.append(rel)
            continue
        files += 1
        words += count_words(text)
    log.debug("scanned %s: %d files, %d words, %d skipped", root, files, words, len(skipped))
    return CorpusStats(files, words, words_to_tokens(words), Direction.parse(direction),
                       label or root.name, skipped=tuple(skipped))


def consumption_seconds(tokens: int, d: Direction, m: ConsumptionRateModel | None = None) -> Fraction:
    if int(tokens) != tokens or tokens < 0:
        raise ValueError(f"tokens must be a non-negative integer, got {tokens!r}")
    m = m or ConsumptionRateModel()
    return int(tokens) * m.rate(Direction.parse(d))


def ledger_totals(ledger: TokenLedger, m: ConsumptionRateModel | None = None) -> tuple[int, Fraction]:
    """Return ``(N, total CU-seconds)`` summed over every entry of ``ledger``."""
    m = m or ConsumptionRateModel()
    n = 0
    cu = Fraction(0)
    for entry in ledger.entries:
        n += entry.total_tokens
        cu += consumption_seconds(entry.total_tokens, entry.direction, m)
    return n, cu
