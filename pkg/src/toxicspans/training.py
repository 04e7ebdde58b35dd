"""Mini-batch maximum likelihood training for the sequence tagger.

Posts are tokenized and labelled per token (1 when the token's characters
all fall inside the gold annotation), shuffled once with a seeded generator,
and split so the last fraction serves as validation. Adam updates run on
summed batch gradients; the weights kept are those with the best validation
loss, and training stops early once that loss has not improved for a set
number of epochs. Every run with the same seed and data reproduces the same
model bit for bit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import Post
from .crf import CrfModel, _sequence_nll, _sequence_nll_grad
from .errors import DataError, NumericalError
from .features import FeatureTemplates, extract_features
from .lexicon import Lexicon
from .spans import SpanSet
from .tokenizer import Token, Tokenizer

__all__ = ["TrainConfig", "train", "token_gold_labels"]

logger = logging.getLogger(__name__)

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters; bounds are checked on construction."""

    learning_rate: float = 1e-2
    batch_size: int = 16
    max_epochs: int = 50
    l2_lambda: float = 1e-4
    validation_fraction: float = 0.2
    early_stop_patience: int = 10
    seed: int = 0
    gap_fill: bool = True

    def __post_init__(self) -> None:
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.max_epochs < 0:
            raise ValueError(f"max_epochs must be non-negative, got {self.max_epochs}")
        if not (self.l2_lambda >= 0 and math.isfinite(self.l2_lambda)):
            raise ValueError(f"l2_lambda must be non-negative, got {self.l2_lambda}")
        if not 0 < self.validation_fraction < 1:
            raise ValueError(
                f"validation_fraction must be in (0, 1), got {self.validation_fraction}"
            )
        if self.early_stop_patience < 1:
            raise ValueError(
                f"early_stop_patience must be at least 1, got {self.early_stop_patience}"
            )


def token_gold_labels(tokens: Sequence[Token], gold: SpanSet) -> list[int]:
    """Binary token labels: 1 when every character of the token is annotated."""
    return [
        1 if all(off in gold for off in range(token.start, token.end)) else 0
        for token in tokens
    ]


class _Adam:
    """Adam updates applied in place to one parameter array."""

    def __init__(self, shape: tuple[int, ...], learning_rate: float) -> None:
        self.learning_rate = learning_rate
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)

    def step(self, param: np.ndarray, grad: np.ndarray, t: int) -> None:
        self.m *= _ADAM_BETA1
        self.m += (1 - _ADAM_BETA1) * grad
        self.v *= _ADAM_BETA2
        self.v += (1 - _ADAM_BETA2) * np.square(grad)
        m_hat = self.m / (1 - _ADAM_BETA1 ** t)
        v_hat = self.v / (1 - _ADAM_BETA2 ** t)
        param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + _ADAM_EPS)


def train(
    posts: Iterable[Post],
    config: TrainConfig | None = None,
    lexicon: Lexicon | None = None,
    tokenizer: Tokenizer | None = None,
) -> CrfModel:
    """Fit a model to annotated posts.

    Posts that tokenize to nothing are skipped. With ``max_epochs`` 0 the
    untouched zero-weight model is returned, which predicts no spans.
    Raises :class:`NumericalError` if any loss turns non-finite.
    """
    config = config or TrainConfig()
    tokenizer = tokenizer or Tokenizer()
    templates = FeatureTemplates(
        intra_word_chars=tokenizer.intra_word_chars,
        use_lexicon=lexicon is not None,
    )

    posts = list(posts)
    if not posts:
        raise DataError("training set is empty")
    sequences = []
    for post in posts:
        tokens = tokenizer.tokenize(post.text)
        if not tokens:
            continue
        labels = token_gold_labels(tokens, post.gold)
        vectors = [
            extract_features(tokens, i, lexicon, tokenizer) for i in range(len(tokens))
        ]
        sequences.append((vectors, labels))
    if not sequences:
        raise DataError("training set has no posts with tokens")

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(sequences))
    n_val = int(round(len(sequences) * config.validation_fraction))
    if n_val >= len(sequences):
        n_val = len(sequences) - 1
    train_part = [sequences[i] for i in order[: len(sequences) - n_val]]
    val_part = [sequences[i] for i in order[len(sequences) - n_val:]]

    feature_index: dict[str, int] = {}
    for vectors, _ in train_part:
        for vector in vectors:
            for feature in vector:
                if feature not in feature_index:
                    feature_index[feature] = len(feature_index)

    def resolve(vectors):
        out = []
        for vector in vectors:
            pairs = [(feature_index[f], v) for f, v in vector.items() if f in feature_index]
            out.append((
                np.asarray([p[0] for p in pairs], dtype=np.intp),
                np.asarray([p[1] for p in pairs], dtype=float),
            ))
        return out

    train_seqs = [(resolve(vectors), labels) for vectors, labels in train_part]
    val_seqs = [(resolve(vectors), labels) for vectors, labels in val_part]

    weights = np.zeros((len(feature_index), 2))
    transitions = np.zeros((2, 2))
    best_weights = weights.copy()
    best_transitions = transitions.copy()
    best_loss: float | None = None
    lam = config.l2_lambda

    adam_weights = _Adam(weights.shape, config.learning_rate)
    adam_transitions = _Adam(transitions.shape, config.learning_rate)
    grad_weights = np.zeros_like(weights)
    grad_transitions = np.zeros((2, 2))
    step = 0
    epochs_run = 0
    stale_epochs = 0

    for epoch in range(1, config.max_epochs + 1):
        epoch_order = rng.permutation(len(train_seqs))
        epoch_loss = 0.0
        for start in range(0, len(epoch_order), config.batch_size):
            batch = epoch_order[start: start + config.batch_size]
            grad_weights.fill(0.0)
            grad_transitions.fill(0.0)
            loss = 0.0
            for seq_index in batch:
                feats, labels = train_seqs[seq_index]
                loss += _sequence_nll_grad(
                    weights, transitions, feats, labels, grad_weights, grad_transitions
                )
            if lam:
                loss += 0.5 * lam * (
                    float(np.sum(weights ** 2)) + float(np.sum(transitions ** 2))
                )
                grad_weights += lam * weights
                grad_transitions += lam * transitions
            if not math.isfinite(loss):
                raise NumericalError(
                    f"non-finite training loss at epoch {epoch}, "
                    f"batch starting at sequence {start}"
                )
            epoch_loss += loss
            step += 1
            adam_weights.step(weights, grad_weights, step)
            adam_transitions.step(transitions, grad_transitions, step)

        epochs_run = epoch
        if val_seqs:
            monitored = sum(
                _sequence_nll(weights, transitions, feats, labels)
                for feats, labels in val_seqs
            ) / len(val_seqs)
        else:
            monitored = epoch_loss / len(train_seqs)
        if not math.isfinite(monitored):
            raise NumericalError(f"non-finite validation loss at epoch {epoch}")
        logger.info(
            "epoch %d: train loss %.6f, monitored loss %.6f", epoch, epoch_loss, monitored
        )

        if best_loss is None or monitored < best_loss:
            best_loss = monitored
            best_weights = weights.copy()
            best_transitions = transitions.copy()
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs >= config.early_stop_patience:
                logger.info("stopping early after %d epochs", epoch)
                break

    return CrfModel(
        templates=templates,
        feature_index=feature_index,
        weights=best_weights,
        transitions=best_transitions,
        l2_lambda=config.l2_lambda,
        gap_fill=config.gap_fill,
        epochs_run=epochs_run,
        best_val_loss=best_loss,
    )
