"""Character-offset span algebra.

Annotations are sets of character offsets into a post's text. Contiguous
offsets form ranges; both views are used throughout and must stay
interconvertible without loss.
"""

from __future__ import annotations

import operator
from typing import TYPE_CHECKING, Iterable, Iterator, Sequence

if TYPE_CHECKING:
    from .tokenizer import Token

__all__ = [
    "SpanSet",
    "offsets_to_ranges",
    "ranges_to_offsets",
    "token_labels_to_offsets",
]


class SpanSet:
    """Immutable set of non-negative character offsets.

    Offsets are kept sorted and deduplicated. Set operators return new
    instances; equality and hashing follow set semantics.
    """

    __slots__ = ("_offsets", "_members")

    def __init__(self, offsets: Iterable[int] = ()) -> None:
        cleaned = set()
        for off in offsets:
            if isinstance(off, bool):
                raise TypeError(f"offsets must be integers, got {off!r}")
            try:
                value = operator.index(off)
            except TypeError:
                raise TypeError(f"offsets must be integers, got {off!r}") from None
            if value < 0:
                raise ValueError(f"offsets must be non-negative, got {value}")
            cleaned.add(value)
        object.__setattr__(self, "_offsets", tuple(sorted(cleaned)))
        object.__setattr__(self, "_members", frozenset(cleaned))

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def from_ranges(cls, ranges: Iterable[tuple[int, int]]) -> "SpanSet":
        return ranges_to_offsets(ranges)

    @property
    def offsets(self) -> tuple[int, ...]:
        return self._offsets

    def to_ranges(self) -> list[tuple[int, int]]:
        return offsets_to_ranges(self)

    def __iter__(self) -> Iterator[int]:
        return iter(self._offsets)

    def __len__(self) -> int:
        return len(self._offsets)

    def __contains__(self, offset: object) -> bool:
        return offset in self._members

    def __bool__(self) -> bool:
        return bool(self._offsets)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SpanSet):
            return self._offsets == other._offsets
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._offsets)

    def __or__(self, other: "SpanSet") -> "SpanSet":
        if not isinstance(other, SpanSet):
            return NotImplemented
        return SpanSet(self._members | other._members)

    def __and__(self, other: "SpanSet") -> "SpanSet":
        if not isinstance(other, SpanSet):
            return NotImplemented
        return SpanSet(self._members & other._members)

    def __sub__(self, other: "SpanSet") -> "SpanSet":
        if not isinstance(other, SpanSet):
            return NotImplemented
        return SpanSet(self._members - other._members)

    def __repr__(self) -> str:
        return f"SpanSet({list(self._offsets)!r})"


def offsets_to_ranges(offsets: Iterable[int]) -> list[tuple[int, int]]:
    """Collapse a set of offsets into sorted half-open ``(start, end)`` ranges.

    Consecutive offsets merge into one range; the result covers exactly the
    input offsets.
    """
    span = offsets if isinstance(offsets, SpanSet) else SpanSet(offsets)
    ranges: list[tuple[int, int]] = []
    start = prev = None
    for off in span.offsets:
        if prev is not None and off == prev + 1:
            prev = off
            continue
        if start is not None:
            ranges.append((start, prev + 1))
        start = prev = off
    if start is not None:
        ranges.append((start, prev + 1))
    return ranges


def ranges_to_offsets(ranges: Iterable[tuple[int, int]]) -> SpanSet:
    """Expand half-open ``(start, end)`` ranges into a :class:`SpanSet`.

    Ranges may overlap or touch; the union is taken. An empty range
    (``start >= end``) is invalid.
    """
    offsets: list[int] = []
    for start, end in ranges:
        start = operator.index(start)
        end = operator.index(end)
        if start < 0:
            raise ValueError(f"range start must be non-negative, got {start}")
        if start >= end:
            raise ValueError(f"invalid range ({start}, {end}): start must be < end")
        offsets.extend(range(start, end))
    return SpanSet(offsets)


def token_labels_to_offsets(
    tokens: Sequence["Token"],
    labels: Sequence[int],
    gap_fill: bool = True,
) -> SpanSet:
    """Convert per-token binary labels back into character offsets.

    Each token labelled 1 contributes its own character range. With
    ``gap_fill`` enabled, the characters strictly between two consecutive
    tokens that are both labelled 1 are included as well, so a run of toxic
    tokens yields one contiguous span over the separators.
    """
    if len(tokens) != len(labels):
        raise ValueError(
            f"got {len(tokens)} tokens but {len(labels)} labels"
        )
    for label in labels:
        if label not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got {label!r}")
    ranges: list[tuple[int, int]] = []
    for i, (token, label) in enumerate(zip(tokens, labels)):
        if not label:
            continue
        start = token.start
        if gap_fill and i > 0 and labels[i - 1]:
            start = tokens[i - 1].end
        ranges.append((start, token.end))
    return ranges_to_offsets(ranges)
