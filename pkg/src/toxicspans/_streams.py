"""Helpers that accept either a filesystem path or an open stream."""

from __future__ import annotations

import io
import os
from typing import IO, Union

Source = Union[str, os.PathLike, IO[bytes], IO[str]]


def open_for_read(source: Source, what: str) -> tuple[IO[str], bool, bool]:
    """Return ``(text stream, close when done, detach when done)``."""
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline=""), True, False
    if isinstance(source, io.TextIOBase):
        return source, False, False
    if hasattr(source, "read"):
        return io.TextIOWrapper(source, encoding="utf-8", newline=""), False, True
    raise TypeError(f"cannot read {what} from {source!r}")


def open_for_write(sink: Source, what: str) -> tuple[IO[str], bool, bool]:
    if isinstance(sink, (str, os.PathLike)):
        return open(sink, "w", encoding="utf-8", newline=""), True, False
    if isinstance(sink, io.TextIOBase):
        return sink, False, False
    if hasattr(sink, "write"):
        return io.TextIOWrapper(sink, encoding="utf-8", newline=""), False, True
    raise TypeError(f"cannot write {what} to {sink!r}")


def finish(stream: IO[str], close: bool, detach: bool) -> None:
    if close:
        stream.close()
    elif detach:
        stream.flush()
        stream.detach()
