"""Core domain types, text cleaning, and JSONL (de)serialization.

File schemas (all UTF-8, LF line endings, one JSON object per line):

- corpus file:        ``{"id": str, "text": str}``
- pair file:          ``{"id": str, "keywords": [str], "text": str}``
- gold-keyword file:  ``{"id": str, "keywords": [str]}``
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import IO, Iterable

from .errors import ParseError

# Everything outside this class is deleted: kept are the Bangla block, ASCII
# letters/digits, space, danda, and a small set of sentence punctuation.
# Hyphen is kept so hyphenated words survive intact.
DEFAULT_REMOVE_PATTERN = r"[^ঀ-৿a-zA-Z0-9 ।?!,.\-]"

_TAG_RE = re.compile(r"<[^<]*?>")
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class CleaningConfig:
    """Controls which characters survive :func:`clean_text`.

    ``remove_pattern`` is a regex character class matching everything that
    must be deleted after HTML tags are stripped.
    """

    remove_pattern: str = DEFAULT_REMOVE_PATTERN

    def compiled(self) -> re.Pattern[str]:
        return re.compile(self.remove_pattern)


@dataclass(frozen=True)
class Document:
    """One raw text with an identifier; the unit flowing through the pipeline."""

    id: str
    text: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("document id must be non-empty")
        if not self.text:
            raise ValueError(f"document {self.id!r} has empty text")


@dataclass(frozen=True)
class KeywordSet:
    """An unordered set of keywords.

    The stored order is a serialization convenience only (extractors emit
    score-descending order); set semantics apply for comparisons.
    """

    keywords: tuple[str, ...]

    def __init__(self, keywords: Iterable[str]):
        kws = tuple(keywords)
        if not all(isinstance(k, str) for k in kws):
            raise ValueError("keywords must be strings")
        if any(not k.strip() for k in kws):
            raise ValueError("keywords must not be empty or whitespace-only")
        if len(set(kws)) != len(kws):
            raise ValueError("keywords must not contain duplicates")
        object.__setattr__(self, "keywords", kws)

    def __iter__(self):
        return iter(self.keywords)

    def __len__(self) -> int:
        return len(self.keywords)

    def __contains__(self, word: str) -> bool:
        return word in self.keywords

    def as_set(self) -> frozenset[str]:
        return frozenset(self.keywords)


@dataclass(frozen=True)
class KeywordTextPair:
    """One dataset record: keywords plus the target text."""

    id: str
    keywords: KeywordSet
    text: str

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("pair id must be non-empty")
        if len(self.keywords) == 0:
            raise ValueError(f"pair {self.id!r} has no keywords")
        if not self.text:
            raise ValueError(f"pair {self.id!r} has empty text")


@dataclass(frozen=True)
class CorpusSplit:
    """Disjoint train/validation/test partitions of a document set."""

    train: tuple[Document, ...]
    validation: tuple[Document, ...]
    test: tuple[Document, ...] = field(default=())

    def __post_init__(self) -> None:
        ids = [d.id for part in (self.train, self.validation, self.test) for d in part]
        if len(set(ids)) != len(ids):
            raise ValueError("splits must be disjoint by id")

    def parts(self) -> dict[str, tuple[Document, ...]]:
        return {"train": self.train, "validation": self.validation, "test": self.test}


def clean_text(raw: str, config: CleaningConfig | None = None) -> str:
    """Strip HTML tags, delete characters outside the keep set, normalize spaces.

    Idempotent; may return an empty string (callers reject empty documents).
    """
    config = config or CleaningConfig()
    text = _TAG_RE.sub(" ", raw)
    text = config.compiled().sub("", text)
    return _WS_RE.sub(" ", text).strip()


def parse_documents(stream: IO[bytes] | IO[str]) -> list[Document]:
    """Parse a corpus file into documents, preserving input order.

    Raises :class:`ParseError` (carrying the line number) on malformed lines,
    missing/invalid fields, or duplicate ids.
    """
    docs: list[Document] = []
    seen: set[str] = set()
    for lineno, raw_line in enumerate(stream, start=1):
        line = raw_line.decode("utf-8") if isinstance(raw_line, bytes) else raw_line
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
        if not isinstance(obj, dict):
            raise ParseError("expected a JSON object", lineno)
        for key in ("id", "text"):
            if key not in obj:
                raise ParseError(f"missing field {key!r}", lineno)
            if not isinstance(obj[key], str):
                raise ParseError(f"field {key!r} must be a string", lineno)
        try:
            doc = Document(id=obj["id"], text=obj["text"])
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
        if doc.id in seen:
            raise ParseError(f"duplicate id {doc.id!r}", lineno)
        seen.add(doc.id)
        docs.append(doc)
    return docs


def _dump(obj: dict) -> str:
    # Compact separators and unescaped UTF-8 keep golden files byte-stable.
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_documents(docs: Iterable[Document], sink: IO[str]) -> None:
    for doc in docs:
        sink.write(_dump({"id": doc.id, "text": doc.text}) + "\n")


def write_pairs(pairs: Iterable[KeywordTextPair], sink: IO[str]) -> None:
    """Write pairs as JSONL with fixed key order id, keywords, text."""
    for pair in pairs:
        sink.write(pair_to_line(pair) + "\n")


def pair_to_line(pair: KeywordTextPair) -> str:
    return _dump({"id": pair.id, "keywords": list(pair.keywords), "text": pair.text})


def parse_pairs(stream: IO[bytes] | IO[str]) -> list[KeywordTextPair]:
    """Inverse of :func:`write_pairs`; round-trips are value-identical."""
    pairs: list[KeywordTextPair] = []
    seen: set[str] = set()
    for lineno, raw_line in enumerate(stream, start=1):
        line = raw_line.decode("utf-8") if isinstance(raw_line, bytes) else raw_line
        if not line.strip():
            continue
        obj = _parse_keyword_record(line, lineno, require_text=True)
        try:
            pair = KeywordTextPair(
                id=obj["id"], keywords=KeywordSet(obj["keywords"]), text=obj["text"]
            )
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from exc
        if pair.id in seen:
            raise ParseError(f"duplicate id {pair.id!r}", lineno)
        seen.add(pair.id)
        pairs.append(pair)
    return pairs


def parse_keyword_file(stream: IO[bytes] | IO[str]) -> list[tuple[str, tuple[str, ...]]]:
    """Parse a gold-keyword file into (id, keywords) rows, order preserved.

    Keyword order in the file is kept verbatim: rankings use it, set metrics
    ignore it.
    """
    rows: list[tuple[str, tuple[str, ...]]] = []
    seen: set[str] = set()
    for lineno, raw_line in enumerate(stream, start=1):
        line = raw_line.decode("utf-8") if isinstance(raw_line, bytes) else raw_line
        if not line.strip():
            continue
        obj = _parse_keyword_record(line, lineno, require_text=False)
        if obj["id"] in seen:
            raise ParseError(f"duplicate id {obj['id']!r}", lineno)
        seen.add(obj["id"])
        rows.append((obj["id"], tuple(obj["keywords"])))
    return rows


def _parse_keyword_record(line: str, lineno: int, require_text: bool) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", lineno) from exc
    if not isinstance(obj, dict):
        raise ParseError("expected a JSON object", lineno)
    if not isinstance(obj.get("id"), str) or not obj.get("id"):
        raise ParseError("missing or invalid field 'id'", lineno)
    kws = obj.get("keywords")
    if not isinstance(kws, list) or not all(isinstance(k, str) for k in kws):
        raise ParseError("field 'keywords' must be a list of strings", lineno)
    if require_text and not isinstance(obj.get("text"), str):
        raise ParseError("missing or invalid field 'text'", lineno)
    return obj
