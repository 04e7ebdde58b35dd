"""Dataset and prediction file handling.

Datasets are CSV files with a ``spans`` column (bracketed list of character
offsets) and a ``text`` column, optionally joined by a ``text_id`` or ``id``
column. Prediction files carry ``spans`` and ``text_id``. Offsets count
Unicode characters, matching Python string indexing.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from typing import Iterable

from ._streams import Source, finish, open_for_read, open_for_write
from .errors import DataError
from .spans import SpanSet

__all__ = [
    "Post",
    "PredictionRecord",
    "parse_dataset",
    "parse_predictions",
    "write_predictions",
    "format_offsets",
]

logger = logging.getLogger(__name__)

_DATASET_COLUMNS = frozenset({"spans", "text", "text_id", "id"})
_PREDICTION_COLUMNS = frozenset({"spans", "text_id"})
_EXTRA = "__extra__"


@dataclass(frozen=True, slots=True)
class Post:
    """One annotated post: id, source text, and gold toxic offsets."""

    post_id: str
    text: str
    gold: SpanSet

    def __post_init__(self) -> None:
        length = len(self.text)
        for off in self.gold:
            if off >= length:
                raise ValueError(
                    f"offset {off} exceeds text length {length} for post {self.post_id!r}"
                )


@dataclass(frozen=True, slots=True)
class PredictionRecord:
    """Predicted offsets for one post id."""

    post_id: str
    spans: SpanSet


def format_offsets(spans: SpanSet) -> str:
    """Serialize offsets the way dataset files carry them, e.g. ``[0, 1, 2]``."""
    return "[" + ", ".join(str(off) for off in spans) + "]"


def _parse_offset_list(raw: str, context: str) -> SpanSet:
    stripped = raw.strip()
    if not (stripped.startswith("[") and stripped.endswith("]")):
        raise DataError(f"{context}: spans must be a bracketed offset list, got {raw!r}")
    body = stripped[1:-1].strip()
    if not body:
        return SpanSet()
    offsets = []
    for item in body.split(","):
        item = item.strip()
        try:
            value = int(item)
        except ValueError:
            raise DataError(f"{context}: non-integer offset {item!r}") from None
        if value < 0:
            raise DataError(f"{context}: negative offset {value}")
        offsets.append(value)
    if len(set(offsets)) != len(offsets):
        logger.warning("%s: duplicate offsets were deduplicated", context)
    return SpanSet(offsets)


def _check_header(fieldnames: list[str] | None, required: frozenset[str],
                  allowed: frozenset[str], what: str) -> None:
    if fieldnames is None:
        raise DataError(f"{what} is empty: missing header row")
    names = list(fieldnames)
    missing = sorted(required - set(names))
    if missing:
        raise DataError(f"{what} header is missing columns: {', '.join(missing)}")
    unknown = sorted(set(names) - allowed)
    if unknown:
        raise DataError(f"{what} header has unexpected columns: {', '.join(unknown)}")
    if len(set(names)) != len(names):
        raise DataError(f"{what} header repeats a column name")


def _iter_rows(reader: csv.DictReader, what: str):
    rownum = 0
    try:
        for row in reader:
            rownum += 1
            if row.get(_EXTRA) is not None:
                raise DataError(f"{what} row {rownum}: too many fields")
            if any(value is None for value in row.values()):
                raise DataError(f"{what} row {rownum}: too few fields")
            yield rownum, row
    except UnicodeDecodeError as exc:
        raise DataError(f"{what} is not valid UTF-8: {exc}") from None
    except csv.Error as exc:
        raise DataError(f"{what} row {rownum + 1}: malformed CSV ({exc})") from None


def parse_dataset(source: Source) -> list[Post]:
    """Read an annotated dataset.

    Posts keep the file's ``text_id``/``id`` values when present; otherwise
    each post is assigned its zero-based row index as a decimal string.
    """
    stream, close, detach = open_for_read(source, "dataset")
    try:
        reader = csv.DictReader(stream, restkey=_EXTRA)
        try:
            fieldnames = reader.fieldnames
        except UnicodeDecodeError as exc:
            raise DataError(f"dataset is not valid UTF-8: {exc}") from None
        _check_header(fieldnames, frozenset({"spans", "text"}), _DATASET_COLUMNS, "dataset")
        id_column = next((c for c in ("text_id", "id") if c in fieldnames), None)
        posts = []
        for rownum, row in _iter_rows(reader, "dataset"):
            context = f"dataset row {rownum}"
            text = row["text"]
            gold = _parse_offset_list(row["spans"], context)
            for off in gold:
                if off >= len(text):
                    raise DataError(
                        f"{context}: offset {off} exceeds text length {len(text)}"
                    )
            if id_column is None:
                post_id = str(rownum - 1)
            else:
                post_id = row[id_column]
                if not post_id:
                    raise DataError(f"{context}: empty post id")
            posts.append(Post(post_id, text, gold))
        return posts
    finally:
        finish(stream, close, detach)


def parse_predictions(source: Source) -> list[PredictionRecord]:
    """Read a prediction file (``spans,text_id``) in file order."""
    stream, close, detach = open_for_read(source, "predictions")
    try:
        reader = csv.DictReader(stream, restkey=_EXTRA)
        try:
            fieldnames = reader.fieldnames
        except UnicodeDecodeError as exc:
            raise DataError(f"predictions are not valid UTF-8: {exc}") from None
        _check_header(fieldnames, _PREDICTION_COLUMNS, _PREDICTION_COLUMNS, "predictions")
        records = []
        for rownum, row in _iter_rows(reader, "predictions"):
            context = f"predictions row {rownum}"
            post_id = row["text_id"]
            if not post_id:
                raise DataError(f"{context}: empty post id")
            records.append(PredictionRecord(post_id, _parse_offset_list(row["spans"], context)))
        return records
    finally:
        finish(stream, close, detach)


def write_predictions(records: Iterable[PredictionRecord], sink: Source) -> None:
    """Write predictions as CSV with a ``spans,text_id`` header and LF newlines.

    The span serialization round-trips through :func:`parse_predictions`
    byte for byte, which keeps repeated pipeline runs comparable.
    """
    stream, close, detach = open_for_write(sink, "predictions")
    try:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["spans", "text_id"])
        for record in records:
            writer.writerow([format_offsets(record.spans), record.post_id])
    finally:
        finish(stream, close, detach)
