"""Tweet records, corpus ingestion, hashtag filtering and stage assignment."""

from __future__ import annotations

import csv
import datetime as dt
import enum
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence

from xenotopics.errors import DuplicateId, ParseError, UnknownLabel

HASHTAG_RE = re.compile(r"#(\w+)")

CSV_FIELDS = ("id", "created_at", "text", "hashtags", "label")


class CategoryLabel(enum.IntEnum):
    STIGMATIZATION = 0
    OFFENSIVENESS = 1
    BLAME = 2
    EXCLUSION = 3
    NONE = 4

    @property
    def label_name(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value) -> "CategoryLabel":
        """Accept an integer code (or its string form) and return the label."""
        try:
            code = int(value)
        except (TypeError, ValueError):
            raise UnknownLabel(f"label {value!r} is not an integer code") from None
        if isinstance(value, float) and value != code:
            raise UnknownLabel(f"label {value!r} is not an integer code")
        try:
            return cls(code)
        except ValueError:
            raise UnknownLabel(f"label {code} outside 0..4") from None


# the four racist/xenophobic categories, in table order
RACIST_CATEGORIES = (
    CategoryLabel.STIGMATIZATION,
    CategoryLabel.OFFENSIVENESS,
    CategoryLabel.BLAME,
    CategoryLabel.EXCLUSION,
)


class Stage(str, enum.Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"


@dataclass(frozen=True)
class StageWindow:
    stage: Stage
    start: dt.date
    end: dt.date

    def __post_init__(self):
        if self.start > self.end:
            raise ValueError(f"window {self.stage}: start {self.start} after end {self.end}")

    def contains(self, day: dt.date) -> bool:
        return self.start <= day <= self.end


DEFAULT_WINDOWS = (
    StageWindow(Stage.S1, dt.date(2020, 1, 1), dt.date(2020, 1, 31)),
    StageWindow(Stage.S2, dt.date(2020, 2, 1), dt.date(2020, 3, 11)),
    StageWindow(Stage.S3, dt.date(2020, 3, 12), dt.date(2020, 4, 30)),
)


@dataclass(frozen=True)
class TweetRecord:
    id: str
    created_at: dt.date
    text: str
    hashtags: frozenset = field(default_factory=frozenset)
    gold_category: Optional[CategoryLabel] = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("record id must be nonempty")
        if not isinstance(self.created_at, dt.date) or isinstance(self.created_at, dt.datetime):
            raise TypeError("created_at must be a datetime.date")
        object.__setattr__(self, "hashtags", frozenset(normalize_hashtag(h) for h in self.hashtags))


def normalize_hashtag(tag: str) -> str:
    return tag.strip().lstrip("#").lower()


def extract_hashtags(text: str) -> frozenset:
    return frozenset(m.lower() for m in HASHTAG_RE.findall(text))


def parse_date(value) -> dt.date:
    """Parse an ISO-8601 date or datetime into a UTC calendar date.

    Naive datetimes are taken to be UTC already; aware ones are converted.
    """
    if isinstance(value, dt.datetime):
        stamp = value
    elif isinstance(value, dt.date):
        return value
    else:
        text = str(value).strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            if len(text) == 10:
                return dt.date.fromisoformat(text)
            stamp = dt.datetime.fromisoformat(text)
        except ValueError:
            raise ValueError(f"invalid ISO-8601 date {value!r}") from None
    if stamp.tzinfo is not None:
        stamp = stamp.astimezone(dt.timezone.utc)
    return stamp.date()


def validate_windows(windows: Sequence[StageWindow]) -> None:
    for prev, cur in zip(windows, windows[1:]):
        if prev.end >= cur.start:
            raise ValueError(f"stage windows overlap or are unordered: {prev.stage} / {cur.stage}")


def assign_stage(record, windows: Sequence[StageWindow] = DEFAULT_WINDOWS) -> Optional[Stage]:
    """Return the stage whose window contains the record date, or None when out of range.

    ``record`` may be a TweetRecord or a bare date.
    """
    day = record.created_at if isinstance(record, TweetRecord) else record
    for window in windows:
        if window.contains(day):
            return window.stage
    return None


def load_default_hashtags() -> frozenset:
    text = resources.files("xenotopics").joinpath("data/hashtags.txt").read_text(encoding="utf-8")
    return frozenset(normalize_hashtag(line) for line in text.splitlines() if line.strip())


DEFAULT_HASHTAGS = load_default_hashtags()


def filter_by_hashtags(records: Iterable[TweetRecord], allowed: Optional[Iterable[str]] = None) -> list:
    """Keep records carrying at least one allowed hashtag, preserving order."""
    allowed = DEFAULT_HASHTAGS if allowed is None else frozenset(normalize_hashtag(h) for h in allowed)
    return [r for r in records if not r.hashtags.isdisjoint(allowed)]


def _record_from_fields(raw: dict, row: int, hashtags_present: bool) -> TweetRecord:
    for key in ("id", "created_at", "text"):
        value = raw.get(key)
        if value is None or (key != "text" and str(value).strip() == ""):
            raise ParseError(f"missing required field {key!r}", row=row)
    doc_id = str(raw["id"])
    text = raw["text"]
    if not isinstance(text, str):
        raise ParseError("field 'text' must be a string", row=row)
    try:
        created = parse_date(raw["created_at"])
    except ValueError as exc:
        raise ParseError(str(exc), row=row) from None

    if hashtags_present:
        tags = raw["hashtags"]
        if isinstance(tags, str):
            tags = [t for t in tags.split(";") if t.strip()]
        elif not isinstance(tags, (list, tuple)) or not all(isinstance(t, str) for t in tags):
            raise ParseError("field 'hashtags' must be a list of strings", row=row)
    else:
        tags = extract_hashtags(text)

    label = raw.get("label")
    if label is None or (isinstance(label, str) and label.strip() == ""):
        gold = None
    else:
        try:
            gold = CategoryLabel.parse(label)
        except UnknownLabel as exc:
            raise ParseError(str(exc), row=row) from None
    return TweetRecord(doc_id, created, text, frozenset(tags), gold)


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON ({exc.msg})", row=lineno) from None
            if not isinstance(raw, dict):
                raise ParseError("expected a JSON object", row=lineno)
            yield lineno, raw, "hashtags" in raw


def _iter_csv(path: Path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return
        has_tags = "hashtags" in reader.fieldnames
        rowno = 1   # header
        while True:
            try:
                raw = next(reader)
            except StopIteration:
                return
            except csv.Error as exc:
                raise ParseError(f"malformed CSV ({exc})", row=rowno + 1) from None
            rowno += 1
            if None in raw:
                raise ParseError("too many columns", row=rowno)
            yield rowno, raw, has_tags


def ingest_corpus(path, format: Optional[str] = None) -> list:
    """Read tweet records from a JSONL or CSV file.

    Parameters
    ----------
    path : path-like
        Input file.
    format : {"jsonl", "csv"}, optional
        Inferred from the file suffix when omitted.

    Raises
    ------
    ParseError
        A row is malformed; the message names the row number.
    DuplicateId
        Two rows share an id.
    """
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format == "jsonl":
        rows = _iter_jsonl(path)
    elif format == "csv":
        rows = _iter_csv(path)
    else:
        raise ValueError(f"unknown corpus format {format!r}")

    records = []
    seen = set()
    for rowno, raw, has_tags in rows:
        record = _record_from_fields(raw, rowno, has_tags)
        if record.id in seen:
            raise DuplicateId(record.id, row=rowno)
        seen.add(record.id)
        records.append(record)
    return records


def _record_to_dict(record: TweetRecord) -> dict:
    return {
        "id": record.id,
        "created_at": record.created_at.isoformat(),
        "text": record.text,
        "hashtags": sorted(record.hashtags),
        "label": None if record.gold_category is None else int(record.gold_category),
    }


def write_corpus(records: Iterable[TweetRecord], path, format: Optional[str] = None) -> None:
    """Serialize records so that ``ingest_corpus`` reads them back unchanged."""
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(_record_to_dict(record), ensure_ascii=False, sort_keys=True) + "\n")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_FIELDS)
            for record in records:
                row = _record_to_dict(record)
                if "\x00" in record.text or "\x00" in record.id:
                    raise ValueError(f"record {record.id!r}: CSV cannot carry NUL characters; use jsonl")
                writer.writerow([
                    row["id"], row["created_at"], row["text"], ";".join(row["hashtags"]),
                    "" if row["label"] is None else row["label"],
                ])
    else:
        raise ValueError(f"unknown corpus format {format!r}")
