"""Corpus cleaning, language gating, merging and exact-line deduplication."""

from __future__ import annotations

import hashlib
import logging
import math
import re
import tomllib
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property, lru_cache
from importlib import resources
from pathlib import Path

from scipy.special import expit

from .errors import CorpusIOError, FormatError
from .fileio import atomic_open

logger = logging.getLogger(__name__)

DEFAULT_LANGUAGE_THRESHOLD = 0.5
DEFAULT_ARTIFACT_PREFIXES = (
    "Articolul Anterior",
    "Articolul Următor",
    "Citește și",
    "Citeste si",
    "Distribuie pe Facebook",
    "Publicitate",
    "Sursa foto",
)
DEFAULT_ARTIFACT_SUFFIXES = (
    "Citește mai mult",
    "Citeste mai mult",
    "Click aici",
    "Vezi galeria foto",
    "Comentează",
    "Distribuie",
)
_SEPARATORS = " \t:|»-–—"
_SEPARATOR_CLASS = r"[\s:|»\-–—]"
_DIACRITIC_NOISE = re.compile(r"[^\W\d_]\?[^\W\d_]")
_WORD = re.compile(r"[^\W\d_]+")
_TRIGRAM_SCALE = 3.0
_DEDUP_DIGEST_BYTES = 16


def _read_data_lines(name: str) -> list[str]:
    text = resources.files("distilkit").joinpath("data", name).read_text(encoding="utf-8")
    return [
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")
    ]


def default_named_entities() -> tuple[str, ...]:
    return tuple(_read_data_lines("named_entities_ro.txt"))


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CleaningRules:
    """Line filters applied by :func:`clean_line`.

    ``named_entities`` holds capitalized forms; a line is dropped when the
    lowercased form appears in it as a whole word.
    """

    detect_diacritic_noise: bool = True
    named_entities: tuple[str, ...] = field(default_factory=default_named_entities)
    language_gate: bool = True
    language_threshold: float = DEFAULT_LANGUAGE_THRESHOLD
    artifact_prefixes: tuple[str, ...] = DEFAULT_ARTIFACT_PREFIXES
    artifact_suffixes: tuple[str, ...] = DEFAULT_ARTIFACT_SUFFIXES

    def validate(self) -> list[str]:
        errors: list[str] = []
        if not 0.0 <= self.language_threshold <= 1.0:
            errors.append(f"language_threshold must lie in [0, 1], got {self.language_threshold}")
        for entity in self.named_entities:
            if not entity or not entity[0].isupper():
                errors.append(f"named entity {entity!r} must start with a capital letter")
        for pattern in (*self.artifact_prefixes, *self.artifact_suffixes):
            if not pattern.strip():
                errors.append("artifact patterns must not be blank")
        return errors

    @cached_property
    def prefix_re(self) -> re.Pattern[str] | None:
        if not self.artifact_prefixes:
            return None
        alternation = "|".join(map(re.escape, self.artifact_prefixes))
        return re.compile(rf"^(?:{alternation})(?=$|{_SEPARATOR_CLASS})", re.IGNORECASE)

    @cached_property
    def suffix_re(self) -> re.Pattern[str] | None:
        if not self.artifact_suffixes:
            return None
        alternation = "|".join(map(re.escape, self.artifact_suffixes))
        return re.compile(
            rf"(?:^|(?<=[\s:|»\-–—.!?…]))(?:{alternation})[\s.!…»]*$", re.IGNORECASE
        )

    @cached_property
    def entity_re(self) -> re.Pattern[str] | None:
        if not self.named_entities:
            return None
        lowered = sorted({e.lower() for e in self.named_entities}, key=len, reverse=True)
        return re.compile(r"(?<!\w)(?:" + "|".join(map(re.escape, lowered)) + r")(?!\w)")

    @classmethod
    def from_dict(cls, data: Mapping, base_dir: Path | None = None) -> CleaningRules:
        """Build rules from a ``[cleaning]`` table; unspecified keys keep defaults."""
        known = {
            "detect_diacritic_noise", "named_entities", "named_entities_file", "language_gate",
            "language_threshold", "artifact_prefixes", "artifact_suffixes",
        }
        unknown = set(data) - known
        if unknown:
            raise FormatError(f"unknown cleaning rule keys: {', '.join(sorted(unknown))}")
        kwargs: dict = {}
        for key in ("detect_diacritic_noise", "language_gate"):
            if key in data:
                if not isinstance(data[key], bool):
                    raise FormatError(f"{key} must be true or false")
                kwargs[key] = data[key]
        if "language_threshold" in data:
            if not isinstance(data["language_threshold"], int | float):
                raise FormatError("language_threshold must be a number")
            kwargs["language_threshold"] = float(data["language_threshold"])
        for key in ("named_entities", "artifact_prefixes", "artifact_suffixes"):
            if key in data:
                value = data[key]
                if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                    raise FormatError(f"{key} must be a list of strings")
                kwargs[key] = tuple(value)
        if "named_entities_file" in data:
            ne_path = Path(data["named_entities_file"])
            if base_dir is not None and not ne_path.is_absolute():
                ne_path = base_dir / ne_path
            try:
                lines = ne_path.read_text(encoding="utf-8").splitlines()
            except OSError as exc:
                raise FormatError(f"cannot read named entity list {ne_path}: {exc}") from exc
            entities = [x.strip() for x in lines if x.strip() and not x.startswith("#")]
            kwargs["named_entities"] = tuple(kwargs.get("named_entities", ())) + tuple(entities)
        rules = cls(**kwargs)
        errors = rules.validate()
        if errors:
            raise FormatError("invalid cleaning rules: " + "; ".join(errors))
        return rules


def load_rules(path: str | Path) -> CleaningRules:
    """Read cleaning rules from a TOML file (top level or a ``[cleaning]`` table)."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise FormatError(f"cannot read rules file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    return CleaningRules.from_dict(raw.get("cleaning", raw), base_dir=path.parent)


# ---------------------------------------------------------------------------
# Language gate
# ---------------------------------------------------------------------------


def _words(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def _trigrams(words: Sequence[str]) -> Iterator[str]:
    padded = " " + " ".join(words) + " "
    for i in range(len(padded) - 2):
        yield padded[i:i + 3]


class LanguageGate:
    """Scores how likely a line is Romanian rather than English.

    Half the score comes from the mean character-trigram log-likelihood ratio
    between two reference profiles, squashed through a logistic; the other
    half from the share of Romanian among recognised stopwords.
    """

    def __init__(
        self,
        ro_text: Iterable[str],
        en_text: Iterable[str],
        ro_stopwords: Iterable[str],
        en_stopwords: Iterable[str],
    ) -> None:
        self._ro = Counter(t for line in ro_text for t in _trigrams(_words(line)))
        self._en = Counter(t for line in en_text for t in _trigrams(_words(line)))
        self._ro_total = sum(self._ro.values())
        self._en_total = sum(self._en.values())
        self._types = len(set(self._ro) | set(self._en)) + 1
        self.ro_stopwords = frozenset(w.lower() for w in ro_stopwords)
        self.en_stopwords = frozenset(w.lower() for w in en_stopwords)

    def trigram_llr(self, words: Sequence[str]) -> float:
        grams = list(_trigrams(words))
        total = 0.0
        for gram in grams:
            p_ro = (self._ro[gram] + 1) / (self._ro_total + self._types)
            p_en = (self._en[gram] + 1) / (self._en_total + self._types)
            total += math.log(p_ro / p_en)
        return total / len(grams)

    def stopword_share(self, words: Sequence[str]) -> float:
        ro_hits = sum(w in self.ro_stopwords for w in words)
        en_hits = sum(w in self.en_stopwords for w in words)
        return (ro_hits + 0.5) / (ro_hits + en_hits + 1.0)

    def score(self, line: str) -> float:
        words = _words(line)
        if not words:
            return 0.0
        trigram = float(expit(_TRIGRAM_SCALE * self.trigram_llr(words)))
        return 0.5 * trigram + 0.5 * self.stopword_share(words)


@lru_cache(maxsize=1)
def default_gate() -> LanguageGate:
    return LanguageGate(
        _read_data_lines("ro_sample.txt"),
        _read_data_lines("en_sample.txt"),
        _read_data_lines("stopwords_ro.txt"),
        _read_data_lines("stopwords_en.txt"),
    )


def language_gate(line: str, gate: LanguageGate | None = None) -> float:
    """Probability in [0, 1] that *line* is Romanian; 0 for lines without letters."""
    return (gate or default_gate()).score(line)


# ---------------------------------------------------------------------------
# Line decisions
# ---------------------------------------------------------------------------


class DropReason(StrEnum):
    EMPTY = "empty"
    DIACRITIC_NOISE = "diacritic-noise"
    UNCAPITALIZED_NE = "uncapitalized-ne"
    NOT_ROMANIAN = "not-romanian"


@dataclass(frozen=True)
class Keep:
    line: str


@dataclass(frozen=True)
class Drop:
    reason: DropReason


def strip_artifacts(line: str, rules: CleaningRules) -> str:
    """Remove leading/trailing web-artifact phrases until none remain."""
    text = line.strip()
    while True:
        current = text
        if rules.prefix_re is not None:
            text, n = rules.prefix_re.subn("", text, count=1)
            if n:
                text = text.lstrip(_SEPARATORS)
        if rules.suffix_re is not None:
            text, n = rules.suffix_re.subn("", text, count=1)
            if n:
                text = text.rstrip(_SEPARATORS)
        if text == current:
            return text


def clean_line(
    line: str,
    rules: CleaningRules,
    gate: LanguageGate | None = None,
) -> Keep | Drop:
    text = strip_artifacts(line, rules)
    if not text:
        return Drop(DropReason.EMPTY)
    if rules.detect_diacritic_noise and _DIACRITIC_NOISE.search(text):
        return Drop(DropReason.DIACRITIC_NOISE)
    if rules.entity_re is not None and rules.entity_re.search(text):
        return Drop(DropReason.UNCAPITALIZED_NE)
    if rules.language_gate and language_gate(text, gate) < rules.language_threshold:
        return Drop(DropReason.NOT_ROMANIAN)
    return Keep(text)


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CorpusStats:
    lines: int = 0
    words: int = 0
    bytes: int = 0

    def __add__(self, other: CorpusStats) -> CorpusStats:
        return CorpusStats(
            self.lines + other.lines, self.words + other.words, self.bytes + other.bytes
        )

    def to_dict(self) -> dict[str, int]:
        return {"lines": self.lines, "words": self.words, "bytes": self.bytes}


@dataclass
class CleaningReport:
    """Outcome of cleaning one file."""

    input: str
    output: str
    kept: int = 0
    dropped: dict[DropReason, int] = field(default_factory=dict)

    @property
    def total_dropped(self) -> int:
        return sum(self.dropped.values())

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "output": self.output,
            "kept": self.kept,
            "dropped": {reason.value: n for reason, n in sorted(self.dropped.items())},
        }


def _iter_lines(path: Path) -> Iterator[str]:
    """Yield decoded lines without their terminators, naming *path* on failure."""
    try:
        with open(path, "rb") as fh:
            for number, raw in enumerate(fh, start=1):
                try:
                    yield raw.decode("utf-8").rstrip("\r\n")
                except UnicodeDecodeError as exc:
                    raise CorpusIOError(f"{path}:{number}: not valid UTF-8 ({exc.reason})") from exc
    except OSError as exc:
        if isinstance(exc, CorpusIOError):
            raise
        raise CorpusIOError(f"{path}: {exc.strerror or exc}") from exc


def corpus_stats(path: str | Path) -> CorpusStats:
    """Exact line, whitespace-delimited word and byte counts of a UTF-8 file."""
    path = Path(path)
    lines = words = size = 0
    try:
        with open(path, "rb") as fh:
            for number, raw in enumerate(fh, start=1):
                lines += 1
                size += len(raw)
                try:
                    words += len(raw.decode("utf-8").split())
                except UnicodeDecodeError as exc:
                    raise CorpusIOError(f"{path}:{number}: not valid UTF-8") from exc
    except CorpusIOError:
        raise
    except OSError as exc:
        raise CorpusIOError(f"{path}: {exc.strerror or exc}") from exc
    return CorpusStats(lines, words, size)


def clean_file(
    input_path: str | Path,
    output_path: str | Path,
    rules: CleaningRules,
    gate: LanguageGate | None = None,
) -> CleaningReport:
    """Stream *input_path* through :func:`clean_line`, writing kept lines atomically."""
    report = CleaningReport(str(input_path), str(output_path))
    dropped: Counter[DropReason] = Counter()
    with atomic_open(output_path) as out:
        for line in _iter_lines(Path(input_path)):
            decision = clean_line(line, rules, gate)
            if isinstance(decision, Keep):
                out.write(decision.line + "\n")
                report.kept += 1
            else:
                dropped[decision.reason] += 1
    report.dropped = dict(dropped)
    logger.info(
        "Cleaned %s: kept %d, dropped %d.", input_path, report.kept, report.total_dropped
    )
    return report


def clean_files(
    jobs: Sequence[tuple[str | Path, str | Path]],
    rules: CleaningRules,
    workers: int = 1,
) -> list[CleaningReport]:
    """Clean several (input, output) pairs, in parallel when *workers* > 1.

    Reports come back in job order regardless of completion order.
    """
    gate = default_gate() if rules.language_gate else None
    if workers <= 1 or len(jobs) <= 1:
        return [clean_file(src, dst, rules, gate) for src, dst in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: clean_file(job[0], job[1], rules, gate), jobs))


def line_digest(line: str) -> bytes:
    return hashlib.blake2b(line.encode("utf-8"), digest_size=_DEDUP_DIGEST_BYTES).digest()


def dedup_merge(inputs: Sequence[str | Path], output: str | Path) -> CorpusStats:
    """Concatenate *inputs* in order, keeping the first occurrence of every line.

    Lines are compared after trimming trailing whitespace. Only 128-bit
    digests are held in memory.
    """
    seen: set[bytes] = set()
    duplicates = 0
    with atomic_open(output) as out:
        for path in inputs:
            for line in _iter_lines(Path(path)):
                trimmed = line.rstrip()
                digest = line_digest(trimmed)
                if digest in seen:
                    duplicates += 1
                    continue
                seen.add(digest)
                out.write(trimmed + "\n")
    logger.info("Merged %d file(s); skipped %d duplicate line(s).", len(inputs), duplicates)
    return corpus_stats(output)
