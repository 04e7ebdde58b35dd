"""Whitespace and character-class tokenization with exact source offsets.

Word tokens are maximal runs of alphanumeric characters plus a configurable
set of intra-word characters. The default set keeps apostrophes and
asterisks inside words, so contractions ("you're") and partially censored
profanity ("f**k") survive as single tokens. Every other non-whitespace
character becomes a single-character punctuation token. Whitespace produces
no tokens.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["DEFAULT_INTRA_WORD_CHARS", "Token", "Tokenizer", "tokenize"]

DEFAULT_INTRA_WORD_CHARS = "'*"


@dataclass(frozen=True, slots=True)
class Token:
    """One token with its half-open character range in the source text."""

    text: str
    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"invalid token range ({self.start}, {self.end})")
        if len(self.text) != self.end - self.start:
            raise ValueError(
                f"token text {self.text!r} does not cover range ({self.start}, {self.end})"
            )


class Tokenizer:
    """Deterministic tokenizer; offsets always index the original text."""

    def __init__(self, intra_word_chars: str = DEFAULT_INTRA_WORD_CHARS) -> None:
        self.intra_word_chars = intra_word_chars
        self._intra = frozenset(intra_word_chars)

    def is_word_char(self, ch: str) -> bool:
        # whitespace always separates, whatever the configured set says
        return not ch.isspace() and (ch.isalnum() or ch in self._intra)

    def is_word(self, text: str) -> bool:
        """True when the text consists entirely of word characters."""
        return bool(text) and all(map(self.is_word_char, text))

    def tokenize(self, text: str) -> list[Token]:
        tokens: list[Token] = []
        i = 0
        n = len(text)
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if self.is_word_char(ch):
                j = i + 1
                while j < n and self.is_word_char(text[j]):
                    j += 1
                tokens.append(Token(text[i:j], i, j))
                i = j
            else:
                tokens.append(Token(ch, i, i + 1))
                i += 1
        return tokens


def tokenize(text: str, intra_word_chars: str = DEFAULT_INTRA_WORD_CHARS) -> list[Token]:
    return Tokenizer(intra_word_chars).tokenize(text)
