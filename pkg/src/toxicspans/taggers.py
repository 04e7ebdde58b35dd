"""Estimator front ends for the two tagging methods.

Both taggers follow the scikit-learn protocol: constructor parameters are
stored verbatim, ``fit(X, y)`` takes a sequence of post texts and a
parallel sequence of gold offset collections and returns ``self``, learned
state lands in trailing-underscore attributes, and ``predict(X)`` returns
one :class:`~toxicspans.spans.SpanSet` per text. ``score`` is the mean
per-post span F1, matching the corpus metric.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import Post
from .crf import predict_offsets
from .evaluation import span_f1
from .lexicon import Lexicon, match_spans, mine_annotated_words
from .spans import SpanSet
from .tokenizer import DEFAULT_INTRA_WORD_CHARS, Tokenizer
from .training import TrainConfig, train

__all__ = ["LexiconTagger", "CrfTagger"]


def _check_texts(X) -> list[str]:
    if isinstance(X, str):
        raise TypeError("X must be a sequence of texts, not a single string")
    texts = list(X)
    for i, text in enumerate(texts):
        if not isinstance(text, str):
            raise TypeError(f"X[{i}] must be a string, got {type(text).__name__}")
    return texts


def _check_gold(y, texts: list[str]) -> list[SpanSet]:
    gold = [spans if isinstance(spans, SpanSet) else SpanSet(spans) for spans in y]
    if len(gold) != len(texts):
        raise ValueError(f"X has {len(texts)} texts but y has {len(gold)} annotations")
    return gold


def _as_posts(texts: list[str], gold: list[SpanSet]) -> list[Post]:
    return [Post(str(i), text, spans) for i, (text, spans) in enumerate(zip(texts, gold))]


def _mean_f1(predicted: Sequence[SpanSet], gold: Sequence[SpanSet]) -> float:
    return sum(span_f1(p, g).f1 for p, g in zip(predicted, gold)) / len(gold)


class LexiconTagger(BaseEstimator):
    """Tag spans by whole-token lookup in a toxic word list.

    Parameters
    ----------
    words : iterable of str
        Seed entries, typically read from profanity word lists.
    mine_training_words : bool
        Also add every word token fully covered by gold annotations in the
        fit data.
    match_censored : bool
        Recover asterisk-censored spellings of known entries.
    intra_word_chars : str
        Characters treated as part of a word besides alphanumerics.
    """

    def __init__(
        self,
        words: Iterable[str] = (),
        mine_training_words: bool = True,
        match_censored: bool = False,
        intra_word_chars: str = DEFAULT_INTRA_WORD_CHARS,
    ) -> None:
        self.words = words
        self.mine_training_words = mine_training_words
        self.match_censored = match_censored
        self.intra_word_chars = intra_word_chars

    def fit(self, X, y=None) -> "LexiconTagger":
        texts = _check_texts(X)
        lexicon = Lexicon()
        seed = list(self.words)
        if seed:
            lexicon.add_words(seed, source="seed")
        if self.mine_training_words and y is not None:
            posts = _as_posts(texts, _check_gold(y, texts))
            tokenizer = Tokenizer(self.intra_word_chars)
            lexicon.add_words(mine_annotated_words(posts, tokenizer), source="mined")
        self.lexicon_ = lexicon
        return self

    def predict(self, X) -> list[SpanSet]:
        check_is_fitted(self, "lexicon_")
        texts = _check_texts(X)
        tokenizer = Tokenizer(self.intra_word_chars)
        return [
            match_spans(self.lexicon_, text, tokenizer, censored=self.match_censored)
            for text in texts
        ]

    def score(self, X, y) -> float:
        texts = _check_texts(X)
        return _mean_f1(self.predict(texts), _check_gold(y, texts))


class CrfTagger(BaseEstimator):
    """Feature-based sequence tagger trained by maximum likelihood.

    Constructor parameters mirror :class:`~toxicspans.training.TrainConfig`
    plus an optional lexicon whose membership flag joins the features.
    """

    def __init__(
        self,
        learning_rate: float = 1e-2,
        batch_size: int = 16,
        max_epochs: int = 50,
        l2_lambda: float = 1e-4,
        validation_fraction: float = 0.2,
        early_stop_patience: int = 10,
        seed: int = 0,
        gap_fill: bool = True,
        lexicon: Lexicon | None = None,
        intra_word_chars: str = DEFAULT_INTRA_WORD_CHARS,
    ) -> None:
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.l2_lambda = l2_lambda
        self.validation_fraction = validation_fraction
        self.early_stop_patience = early_stop_patience
        self.seed = seed
        self.gap_fill = gap_fill
        self.lexicon = lexicon
        self.intra_word_chars = intra_word_chars

    def fit(self, X, y) -> "CrfTagger":
        texts = _check_texts(X)
        if y is None:
            raise ValueError("CrfTagger requires gold annotations to fit")
        posts = _as_posts(texts, _check_gold(y, texts))
        config = TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            l2_lambda=self.l2_lambda,
            validation_fraction=self.validation_fraction,
            early_stop_patience=self.early_stop_patience,
            seed=self.seed,
            gap_fill=self.gap_fill,
        )
        self.model_ = train(
            posts, config, lexicon=self.lexicon, tokenizer=Tokenizer(self.intra_word_chars)
        )
        return self

    def predict(self, X) -> list[SpanSet]:
        check_is_fitted(self, "model_")
        texts = _check_texts(X)
        return [predict_offsets(self.model_, text, self.lexicon) for text in texts]

    def score(self, X, y) -> float:
        texts = _check_texts(X)
        return _mean_f1(self.predict(texts), _check_gold(y, texts))
