"""Per-token feature extraction for the sequence tagger.

Features are sparse string-keyed indicators in the usual CRF toolkit style:
an always-on bias, the folded word form, short prefixes and suffixes, shape
flags, an optional lexicon-membership flag, and the folded neighbour words
with boundary markers at the sequence edges.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .lexicon import Lexicon
from .tokenizer import DEFAULT_INTRA_WORD_CHARS, Token, Tokenizer

__all__ = ["BOS", "EOS", "FeatureTemplates", "extract_features"]

BOS = "<BOS>"
EOS = "<EOS>"

_MAX_AFFIX = 3


@dataclass(frozen=True, slots=True)
class FeatureTemplates:
    """Feature configuration a trained model must reproduce at prediction time."""

    intra_word_chars: str = DEFAULT_INTRA_WORD_CHARS
    use_lexicon: bool = False


def extract_features(
    tokens: Sequence[Token],
    position: int,
    lexicon: Lexicon | None = None,
    tokenizer: Tokenizer | None = None,
) -> dict[str, float]:
    """Feature vector for one token in context.

    Indicator features are present with value 1.0 and absent otherwise.
    The tokenizer argument only supplies the word-character test; it must
    match the one that produced the tokens.
    """
    if not 0 <= position < len(tokens):
        raise IndexError(f"position {position} out of range for {len(tokens)} tokens")
    if tokenizer is None:
        tokenizer = Tokenizer()
    token = tokens[position]
    text = token.text
    folded = text.lower()

    features = {"bias": 1.0, f"w={folded}": 1.0}
    for length in range(1, min(_MAX_AFFIX, len(folded)) + 1):
        features[f"pre{length}={folded[:length]}"] = 1.0
        features[f"suf{length}={folded[-length:]}"] = 1.0
    if any(ch.isdigit() for ch in text):
        features["has_digit"] = 1.0
    if "*" in text:
        features["has_ast"] = 1.0
    if text.isupper():
        features["all_caps"] = 1.0
    if not tokenizer.is_word(text):
        features["is_punct"] = 1.0
    if lexicon is not None and text in lexicon:
        features["in_lex"] = 1.0
    prev_text = tokens[position - 1].text.lower() if position > 0 else BOS
    next_text = tokens[position + 1].text.lower() if position + 1 < len(tokens) else EOS
    features[f"prev={prev_text}"] = 1.0
    features[f"next={next_text}"] = 1.0
    return features
