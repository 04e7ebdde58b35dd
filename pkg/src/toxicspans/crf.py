"""Linear-chain CRF over binary token labels with exact inference.

A lattice holds per-position emission scores ``e[i][y]`` and one shared
2x2 transition matrix ``T[prev][next]``, all in log space. A path's score
is the sum of its emissions plus the transitions between consecutive
labels; there are no separate start or end scores. Decoding maximizes the
path score, and the partition function sums score exponentials over all
``2**n`` paths. Both are computed exactly by dynamic programming.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from ._streams import Source, finish, open_for_read, open_for_write
from .errors import DataError
from .features import FeatureTemplates, extract_features
from .lexicon import Lexicon
from .spans import SpanSet, token_labels_to_offsets
from .tokenizer import Token, Tokenizer

__all__ = [
    "Lattice",
    "ChainPosterior",
    "CrfGradient",
    "CrfModel",
    "build_lattice",
    "viterbi_decode",
    "forward_scores",
    "backward_scores",
    "forward_backward",
    "nll_and_gradient",
    "predict_offsets",
]

logger = logging.getLogger(__name__)

_MODEL_MAGIC = "toxicspans-crf"
_MODEL_VERSION = "1"


def _logadd(a: float, b: float) -> float:
    """log(exp(a) + exp(b)) without overflow."""
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


@dataclass(frozen=True)
class Lattice:
    """Log-space scores for one token sequence."""

    emissions: np.ndarray    # (n, 2)
    transitions: np.ndarray  # (2, 2), transitions[prev][next]

    def __post_init__(self) -> None:
        emissions = np.asarray(self.emissions, dtype=float)
        transitions = np.asarray(self.transitions, dtype=float)
        if emissions.ndim != 2 or emissions.shape[1] != 2 or emissions.shape[0] == 0:
            raise ValueError(f"emissions must have shape (n >= 1, 2), got {emissions.shape}")
        if transitions.shape != (2, 2):
            raise ValueError(f"transitions must have shape (2, 2), got {transitions.shape}")
        object.__setattr__(self, "emissions", emissions)
        object.__setattr__(self, "transitions", transitions)

    def __len__(self) -> int:
        return self.emissions.shape[0]


class ChainPosterior(NamedTuple):
    """Partition function and exact marginals for one lattice."""

    log_partition: float
    marginals: np.ndarray          # (n, 2), P(y_i = y)
    pairwise_marginals: np.ndarray  # (n - 1, 2, 2), P(y_i = a, y_{i+1} = b)


class CrfGradient(NamedTuple):
    """Gradient arrays shaped like the model parameters."""

    weights: np.ndarray      # (F, 2)
    transitions: np.ndarray  # (2, 2)


def viterbi_decode(lattice: Lattice) -> tuple[list[int], float]:
    """Best label sequence and its path score.

    Ties break toward label 0 at every step, so a lattice of all zeros
    decodes to all zeros.
    """
    e = lattice.emissions
    t = lattice.transitions
    n = len(lattice)
    t00, t01 = float(t[0, 0]), float(t[0, 1])
    t10, t11 = float(t[1, 0]), float(t[1, 1])

    s0, s1 = float(e[0, 0]), float(e[0, 1])
    back: list[tuple[int, int]] = []
    for i in range(1, n):
        b0, best0 = 0, s0 + t00
        cand = s1 + t10
        if cand > best0:
            b0, best0 = 1, cand
        b1, best1 = 0, s0 + t01
        cand = s1 + t11
        if cand > best1:
            b1, best1 = 1, cand
        s0 = best0 + float(e[i, 0])
        s1 = best1 + float(e[i, 1])
        back.append((b0, b1))

    label = 0 if s0 >= s1 else 1
    score = s0 if label == 0 else s1
    labels = [label]
    for b0, b1 in reversed(back):
        label = b0 if label == 0 else b1
        labels.append(label)
    labels.reverse()
    return labels, score


def forward_scores(lattice: Lattice) -> np.ndarray:
    """Forward table: ``alpha[i][y]`` is log sum of score exponentials over
    all paths ending at position i with label y."""
    e = lattice.emissions
    t = lattice.transitions
    n = len(lattice)
    t00, t01 = float(t[0, 0]), float(t[0, 1])
    t10, t11 = float(t[1, 0]), float(t[1, 1])

    alpha = np.empty((n, 2))
    a0, a1 = float(e[0, 0]), float(e[0, 1])
    alpha[0] = (a0, a1)
    for i in range(1, n):
        n0 = _logadd(a0 + t00, a1 + t10) + float(e[i, 0])
        n1 = _logadd(a0 + t01, a1 + t11) + float(e[i, 1])
        a0, a1 = n0, n1
        alpha[i] = (a0, a1)
    return alpha


def backward_scores(lattice: Lattice) -> np.ndarray:
    """Backward table: ``beta[i][y]`` is log sum over all path suffixes
    starting after position i, given label y at position i."""
    e = lattice.emissions
    t = lattice.transitions
    n = len(lattice)
    t00, t01 = float(t[0, 0]), float(t[0, 1])
    t10, t11 = float(t[1, 0]), float(t[1, 1])

    beta = np.empty((n, 2))
    b0 = b1 = 0.0
    beta[n - 1] = (b0, b1)
    for i in range(n - 2, -1, -1):
        e0, e1 = float(e[i + 1, 0]), float(e[i + 1, 1])
        n0 = _logadd(t00 + e0 + b0, t01 + e1 + b1)
        n1 = _logadd(t10 + e0 + b0, t11 + e1 + b1)
        b0, b1 = n0, n1
        beta[i] = (b0, b1)
    return beta


def forward_backward(lattice: Lattice) -> ChainPosterior:
    """Exact log partition function plus unary and pairwise marginals."""
    alpha = forward_scores(lattice)
    beta = backward_scores(lattice)
    n = len(lattice)
    log_z = _logadd(float(alpha[n - 1, 0]), float(alpha[n - 1, 1]))
    marginals = np.exp(alpha + beta - log_z)
    e = lattice.emissions
    t = lattice.transitions
    pairwise = np.exp(
        alpha[:-1, :, None] + t[None, :, :] + e[1:, None, :] + beta[1:, None, :] - log_z
    )
    return ChainPosterior(log_z, marginals, pairwise)


@dataclass
class CrfModel:
    """Learned parameters plus everything needed to reproduce predictions.

    ``feature_index`` maps feature ids to rows of ``weights``; features
    absent from the index score zero. ``gap_fill`` records the span
    reconstruction default the model was trained for.
    """

    templates: FeatureTemplates = field(default_factory=FeatureTemplates)
    feature_index: dict[str, int] = field(default_factory=dict)
    weights: np.ndarray = None  # type: ignore[assignment]
    transitions: np.ndarray = None  # type: ignore[assignment]
    l2_lambda: float = 0.0
    gap_fill: bool = True
    epochs_run: int = 0
    best_val_loss: float | None = None

    def __post_init__(self) -> None:
        if self.weights is None:
            self.weights = np.zeros((len(self.feature_index), 2))
        if self.transitions is None:
            self.transitions = np.zeros((2, 2))
        self.weights = np.asarray(self.weights, dtype=float)
        self.transitions = np.asarray(self.transitions, dtype=float)
        if self.weights.shape != (len(self.feature_index), 2):
            raise ValueError(
                f"weights shape {self.weights.shape} does not match "
                f"{len(self.feature_index)} indexed features"
            )
        if self.transitions.shape != (2, 2):
            raise ValueError(f"transitions must have shape (2, 2), got {self.transitions.shape}")
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.transitions))):
            raise ValueError("model parameters must be finite")

    def weight(self, feature_id: str, label: int) -> float:
        row = self.feature_index.get(feature_id)
        if row is None:
            return 0.0
        return float(self.weights[row, label])

    def save(self, sink: Source) -> None:
        """Write a versioned plain-text dump that reloads to identical predictions.

        One line per nonzero emission weight (feature, label, value), then
        the four transition weights. Values use ``repr`` so floats survive
        the round trip exactly.
        """
        header = {
            "l2_lambda": float(self.l2_lambda),
            "intra_word_chars": self.templates.intra_word_chars,
            "use_lexicon": self.templates.use_lexicon,
            "gap_fill": self.gap_fill,
            "epochs_run": int(self.epochs_run),
            "best_val_loss": None if self.best_val_loss is None else float(self.best_val_loss),
        }
        stream, close, detach = open_for_write(sink, "model")
        try:
            stream.write(f"{_MODEL_MAGIC} {_MODEL_VERSION} {json.dumps(header, sort_keys=True)}\n")
            for feature, row in sorted(self.feature_index.items(), key=lambda kv: kv[1]):
                for label in (0, 1):
                    value = float(self.weights[row, label])
                    if value != 0.0:
                        stream.write(f"{feature}\t{label}\t{value!r}\n")
            for prev in (0, 1):
                for nxt in (0, 1):
                    stream.write(f"T\t{prev}\t{nxt}\t{float(self.transitions[prev, nxt])!r}\n")
        finally:
            finish(stream, close, detach)

    @classmethod
    def load(cls, source: Source) -> "CrfModel":
        stream, close, detach = open_for_read(source, "model")
        try:
            first = stream.readline()
            parts = first.rstrip("\n").split(" ", 2)
            if len(parts) != 3 or parts[0] != _MODEL_MAGIC:
                raise DataError("not a recognizable model file")
            if parts[1] != _MODEL_VERSION:
                raise DataError(f"unsupported model format version {parts[1]!r}")
            try:
                header = json.loads(parts[2])
            except json.JSONDecodeError as exc:
                raise DataError(f"model header is not valid JSON: {exc}") from None

            feature_index: dict[str, int] = {}
            rows: list[list[float]] = []
            transitions = np.zeros((2, 2))
            seen_transitions = set()
            seen_weights = set()
            for lineno, line in enumerate(stream, start=2):
                fields = line.rstrip("\n").split("\t")
                if len(fields) == 4 and fields[0] == "T":
                    _, prev, nxt, raw = fields
                    key = (prev, nxt)
                    if prev not in ("0", "1") or nxt not in ("0", "1"):
                        raise DataError(f"model line {lineno}: bad transition labels")
                    if key in seen_transitions:
                        raise DataError(f"model line {lineno}: duplicate transition {key}")
                    seen_transitions.add(key)
                    transitions[int(prev), int(nxt)] = _parse_weight(raw, lineno)
                elif len(fields) == 3:
                    feature, label, raw = fields
                    if label not in ("0", "1"):
                        raise DataError(f"model line {lineno}: bad label {label!r}")
                    if (feature, label) in seen_weights:
                        raise DataError(
                            f"model line {lineno}: duplicate weight for {feature!r}/{label}"
                        )
                    seen_weights.add((feature, label))
                    row = feature_index.get(feature)
                    if row is None:
                        row = len(rows)
                        feature_index[feature] = row
                        rows.append([0.0, 0.0])
                    rows[row][int(label)] = _parse_weight(raw, lineno)
                elif line.strip() == "":
                    continue
                else:
                    raise DataError(f"model line {lineno}: expected 3 or 4 tab-separated fields")
            if len(seen_transitions) != 4:
                raise DataError("model file is missing transition weights")

            try:
                templates = FeatureTemplates(
                    intra_word_chars=str(header["intra_word_chars"]),
                    use_lexicon=bool(header["use_lexicon"]),
                )
                model = cls(
                    templates=templates,
                    feature_index=feature_index,
                    weights=np.array(rows, dtype=float).reshape(len(rows), 2),
                    transitions=transitions,
                    l2_lambda=float(header["l2_lambda"]),
                    gap_fill=bool(header["gap_fill"]),
                    epochs_run=int(header["epochs_run"]),
                    best_val_loss=(
                        None if header["best_val_loss"] is None else float(header["best_val_loss"])
                    ),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"model header is incomplete or inconsistent: {exc}") from None
            return model
        finally:
            finish(stream, close, detach)


def _parse_weight(raw: str, lineno: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise DataError(f"model line {lineno}: bad weight {raw!r}") from None
    if not math.isfinite(value):
        raise DataError(f"model line {lineno}: non-finite weight {raw!r}")
    return value


def _indexed_features(
    model: CrfModel,
    tokens: Sequence[Token],
    lexicon: Lexicon | None,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Resolve each position's features to (index array, value array) pairs.

    Features outside the model's index carry no weight and are dropped
    here; they contribute neither score nor gradient.
    """
    if not tokens:
        raise ValueError("cannot score an empty token sequence")
    if model.templates.use_lexicon and lexicon is None:
        raise DataError("model uses lexicon features; supply the lexicon it was trained with")
    tokenizer = Tokenizer(model.templates.intra_word_chars)
    index = model.feature_index
    out = []
    for position in range(len(tokens)):
        vector = extract_features(tokens, position, lexicon, tokenizer)
        idx = []
        vals = []
        for feature, value in vector.items():
            row = index.get(feature)
            if row is not None:
                idx.append(row)
                vals.append(value)
        out.append((np.asarray(idx, dtype=np.intp), np.asarray(vals, dtype=float)))
    return out


def _emissions(weights: np.ndarray, feats: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    e = np.zeros((len(feats), 2))
    for i, (idx, vals) in enumerate(feats):
        if idx.size:
            e[i] = vals @ weights[idx]
    return e


def build_lattice(
    model: CrfModel,
    tokens: Sequence[Token],
    lexicon: Lexicon | None = None,
) -> Lattice:
    """Score a token sequence under the model.

    Emissions are linear in the weights of the features present at each
    position; the transition matrix is taken from the model unchanged.
    """
    feats = _indexed_features(model, tokens, lexicon)
    return Lattice(_emissions(model.weights, feats), model.transitions)


def _path_score(e: np.ndarray, t: np.ndarray, labels: Sequence[int]) -> float:
    score = 0.0
    for i, label in enumerate(labels):
        score += float(e[i, label])
    for i in range(len(labels) - 1):
        score += float(t[labels[i], labels[i + 1]])
    return score


def _check_labels(tokens: Sequence[Token], labels: Sequence[int]) -> None:
    if len(tokens) != len(labels):
        raise ValueError(f"got {len(tokens)} tokens but {len(labels)} labels")
    for label in labels:
        if label not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got {label!r}")


def _sequence_nll_grad(
    weights: np.ndarray,
    transitions: np.ndarray,
    feats: list[tuple[np.ndarray, np.ndarray]],
    labels: Sequence[int],
    grad_weights: np.ndarray,
    grad_transitions: np.ndarray,
) -> float:
    """Add one sequence's expected-minus-empirical counts into the gradient
    buffers and return its negative log likelihood."""
    e = _emissions(weights, feats)
    lattice = Lattice(e, transitions)
    posterior = forward_backward(lattice)
    marginals = posterior.marginals

    for i, (idx, vals) in enumerate(feats):
        if not idx.size:
            continue
        grad_weights[idx, 0] += vals * marginals[i, 0]
        grad_weights[idx, 1] += vals * marginals[i, 1]
        grad_weights[idx, labels[i]] -= vals
    if len(labels) > 1:
        grad_transitions += posterior.pairwise_marginals.sum(axis=0)
        for i in range(len(labels) - 1):
            grad_transitions[labels[i], labels[i + 1]] -= 1.0

    return posterior.log_partition - _path_score(e, transitions, labels)


def _sequence_nll(
    weights: np.ndarray,
    transitions: np.ndarray,
    feats: list[tuple[np.ndarray, np.ndarray]],
    labels: Sequence[int],
) -> float:
    e = _emissions(weights, feats)
    alpha = forward_scores(Lattice(e, transitions))
    log_z = _logadd(float(alpha[-1, 0]), float(alpha[-1, 1]))
    return log_z - _path_score(e, transitions, labels)


def nll_and_gradient(
    model: CrfModel,
    batch: Sequence[tuple[Sequence[Token], Sequence[int]]],
    lexicon: Lexicon | None = None,
) -> tuple[float, CrfGradient]:
    """Regularized negative log likelihood of a batch and its exact gradient.

    The loss sums ``log Z - score(gold path)`` over the batch plus an L2
    term ``0.5 * l2_lambda * ||params||^2`` covering emission and
    transition weights alike. The gradient is expected minus empirical
    feature counts plus the regularizer's contribution, shaped like the
    model parameters.
    """
    grad_weights = np.zeros_like(model.weights)
    grad_transitions = np.zeros((2, 2))
    loss = 0.0
    for tokens, labels in batch:
        _check_labels(tokens, labels)
        feats = _indexed_features(model, tokens, lexicon)
        loss += _sequence_nll_grad(
            model.weights, model.transitions, feats, labels, grad_weights, grad_transitions
        )
    lam = model.l2_lambda
    if lam:
        loss += 0.5 * lam * (float(np.sum(model.weights ** 2)) + float(np.sum(model.transitions ** 2)))
        grad_weights += lam * model.weights
        grad_transitions += lam * model.transitions
    return float(loss), CrfGradient(grad_weights, grad_transitions)


def predict_offsets(
    model: CrfModel,
    text: str,
    lexicon: Lexicon | None = None,
    gap_fill: bool | None = None,
) -> SpanSet:
    """Tag one post and return the predicted toxic character offsets.

    ``gap_fill`` defaults to the setting recorded in the model. Text that
    yields no tokens predicts the empty set.
    """
    if gap_fill is None:
        gap_fill = model.gap_fill
    tokens = Tokenizer(model.templates.intra_word_chars).tokenize(text)
    if not tokens:
        return SpanSet()
    lattice = build_lattice(model, tokens, lexicon)
    labels, _ = viterbi_decode(lattice)
    return token_labels_to_offsets(tokens, labels, gap_fill=gap_fill)
