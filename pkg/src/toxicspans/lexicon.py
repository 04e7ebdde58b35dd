"""Word-list matching for toxic span detection.

A :class:`Lexicon` holds case-folded profanity words in a character trie and
marks every whole token whose folded text is an entry. Entries come from
word-list files and from mining annotated training data; both sources are
recorded as provenance. An optional mode recovers asterisk-censored
spellings ("f**k") by walking the trie with wildcards.
"""

from __future__ import annotations

import logging
import os
from typing import Iterable

from ._streams import Source, finish, open_for_read, open_for_write
from .corpus import Post
from .spans import SpanSet, ranges_to_offsets
from .tokenizer import Tokenizer

__all__ = [
    "Trie",
    "Lexicon",
    "build_lexicon",
    "mine_annotated_words",
    "match_spans",
    "read_word_list",
    "save_lexicon",
    "load_lexicon",
]

logger = logging.getLogger(__name__)

# Key marking a complete word inside a trie node. Node keys are otherwise
# single characters, so the empty string cannot collide.
_WORD_MARK = ""

CENSOR_CHAR = "*"


class Trie:
    """Character trie with terminal markers and wildcard lookup."""

    __slots__ = ("_root", "_count")

    def __init__(self) -> None:
        self._root: dict = {}
        self._count = 0

    def add(self, word: str) -> bool:
        """Insert a word; returns True when it was not already present."""
        if not word:
            raise ValueError("cannot add an empty word")
        node = self._root
        for ch in word:
            node = node.setdefault(ch, {})
        if _WORD_MARK in node:
            return False
        node[_WORD_MARK] = True
        self._count += 1
        return True

    def __contains__(self, word: object) -> bool:
        if not isinstance(word, str) or not word:
            return False
        node = self._root
        for ch in word:
            node = node.get(ch)
            if node is None:
                return False
        return _WORD_MARK in node

    def __len__(self) -> int:
        return self._count

    def words(self) -> list[str]:
        """All stored words in sorted order."""
        out: list[str] = []

        def walk(node: dict, prefix: str) -> None:
            for key in sorted(node):
                if key == _WORD_MARK:
                    out.append(prefix)
                else:
                    walk(node[key], prefix + key)

        walk(self._root, "")
        return out

    def wildcard_matches(self, pattern: str, wildcard: str = CENSOR_CHAR) -> list[str]:
        """Stored words of the same length matching every non-wildcard position."""
        out: list[str] = []

        def walk(node: dict, i: int, prefix: str) -> None:
            if i == len(pattern):
                if _WORD_MARK in node:
                    out.append(prefix)
                return
            ch = pattern[i]
            if ch == wildcard:
                for key, child in node.items():
                    if key != _WORD_MARK:
                        walk(child, i + 1, prefix + key)
            else:
                child = node.get(ch)
                if child is not None:
                    walk(child, i + 1, prefix + ch)

        if pattern:
            walk(self._root, 0, "")
        return sorted(out)


class Lexicon:
    """Case-folded toxic word list with membership and censored lookup.

    Lookups fold their argument with ``str.lower`` before consulting the
    trie, so callers can pass tokens as they appear in text.
    """

    def __init__(self) -> None:
        self._trie = Trie()
        self.provenance: list[tuple[str, int]] = []

    def add_words(self, words: Iterable[str], source: str = "words") -> int:
        """Add entries, folding case and skipping blanks; returns count added."""
        added = 0
        for word in words:
            word = word.strip().lower()
            if word and self._trie.add(word):
                added += 1
        self.provenance.append((source, added))
        return added

    def __contains__(self, word: object) -> bool:
        if not isinstance(word, str):
            return False
        return word.lower() in self._trie

    def __len__(self) -> int:
        return len(self._trie)

    def __bool__(self) -> bool:
        return len(self._trie) > 0

    def words(self) -> list[str]:
        return self._trie.words()

    def censored_matches(self, token_text: str) -> list[str]:
        """Entries a partially censored token could stand for.

        The token must keep at least one literal character; a fully starred
        token matches nothing. Matches are equal length and agree on every
        position that is not an asterisk.
        """
        folded = token_text.lower()
        if CENSOR_CHAR not in folded:
            return [folded] if folded in self._trie else []
        if all(ch == CENSOR_CHAR for ch in folded):
            return []
        return self._trie.wildcard_matches(folded, CENSOR_CHAR)

    def __repr__(self) -> str:
        return f"<Lexicon with {len(self)} words from {len(self.provenance)} sources>"


def mine_annotated_words(posts: Iterable[Post], tokenizer: Tokenizer | None = None) -> list[str]:
    """Collect word tokens whose characters all fall inside gold annotations.

    Returns the case-folded words sorted and deduplicated. Punctuation
    tokens are skipped even when annotated.
    """
    tokenizer = tokenizer or Tokenizer()
    words: set[str] = set()
    for post in posts:
        if not post.gold:
            continue
        for token in tokenizer.tokenize(post.text):
            if not tokenizer.is_word(token.text):
                continue
            if all(off in post.gold for off in range(token.start, token.end)):
                words.add(token.text.lower())
    return sorted(words)


def build_lexicon(
    words: Iterable[str] = (),
    posts: Iterable[Post] = (),
    tokenizer: Tokenizer | None = None,
) -> Lexicon:
    """Assemble a lexicon from seed words plus words mined from posts."""
    lexicon = Lexicon()
    words = list(words)
    if words:
        lexicon.add_words(words, source="seed")
    posts = list(posts)
    if posts:
        lexicon.add_words(mine_annotated_words(posts, tokenizer), source="mined")
    return lexicon


def match_spans(
    lexicon: Lexicon,
    text: str,
    tokenizer: Tokenizer | None = None,
    censored: bool = False,
) -> SpanSet:
    """Mark every whole token whose folded text is a lexicon entry.

    With ``censored`` enabled, a token containing asterisks also matches
    when some entry of the same length agrees on its literal characters.
    Matching never extends beyond token boundaries.
    """
    tokenizer = tokenizer or Tokenizer()
    ranges = []
    for token in tokenizer.tokenize(text):
        hit = token.text in lexicon
        if not hit and censored and CENSOR_CHAR in token.text:
            hit = bool(lexicon.censored_matches(token.text))
        if hit:
            ranges.append((token.start, token.end))
    return ranges_to_offsets(ranges)


def read_word_list(source: Source) -> list[str]:
    """Read one word per line, dropping surrounding whitespace and blanks."""
    stream, close, detach = open_for_read(source, "word list")
    try:
        return [line.strip() for line in stream if line.strip()]
    finally:
        finish(stream, close, detach)


def save_lexicon(lexicon: Lexicon, sink: Source) -> None:
    """Write entries sorted, one per line, so equal lexicons serialize identically."""
    stream, close, detach = open_for_write(sink, "lexicon")
    try:
        for word in lexicon.words():
            stream.write(word)
            stream.write("\n")
    finally:
        finish(stream, close, detach)


def load_lexicon(source: Source) -> Lexicon:
    lexicon = Lexicon()
    label = str(source) if isinstance(source, (str, os.PathLike)) else "stream"
    lexicon.add_words(read_word_list(source), source=label)
    return lexicon
