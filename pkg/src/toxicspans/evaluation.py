"""Span-level scoring and prediction combination.

Scoring compares predicted and gold character offset sets per post. With
both sets empty the post scores 1.0 on precision, recall, and F1; with
exactly one empty it scores 0.0. Those conventions live in
:func:`span_f1` alone so a different protocol is a one-line change. The
system-level figure is the unweighted mean of per-post F1.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

from .corpus import Post, PredictionRecord
from .errors import DataError
from .spans import SpanSet

__all__ = [
    "EvalResult",
    "EvalReport",
    "span_f1",
    "evaluate_corpus",
    "majority_vote",
    "format_report",
]

Offsets = Union[SpanSet, Iterable[int]]


@dataclass(frozen=True, slots=True)
class EvalResult:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    """Per-post scores in gold order plus the corpus mean."""

    per_post: dict[str, EvalResult]
    mean_f1: float
    posts_scored: int
    posts_with_empty_gold: int


def span_f1(predicted: Offsets, gold: Offsets) -> EvalResult:
    """Character-offset precision, recall, and F1 for one post.

    Precision is the fraction of predicted offsets that are gold, recall
    the fraction of gold offsets predicted, and F1 their harmonic mean.
    """
    pred = frozenset(predicted)
    ref = frozenset(gold)
    if not pred and not ref:
        return EvalResult(1.0, 1.0, 1.0)
    if not pred or not ref:
        return EvalResult(0.0, 0.0, 0.0)
    overlap = len(pred & ref)
    precision = overlap / len(pred)
    recall = overlap / len(ref)
    if overlap == 0:
        return EvalResult(precision, recall, 0.0)
    return EvalResult(precision, recall, 2 * precision * recall / (precision + recall))


def majority_vote(span_sets: Sequence[Offsets]) -> SpanSet:
    """Offsets predicted by strictly more than half of the inputs.

    With an odd count this is a plain majority; with an even count an
    exact half split is excluded. A single input passes through unchanged.
    """
    if not span_sets:
        raise ValueError("majority_vote needs at least one prediction set")
    counts: Counter[int] = Counter()
    for spans in span_sets:
        counts.update(frozenset(spans))
    n = len(span_sets)
    return SpanSet(off for off, count in counts.items() if 2 * count > n)


def evaluate_corpus(
    predictions: Union[Iterable[PredictionRecord], Mapping[str, Offsets]],
    gold_posts: Iterable[Post],
) -> EvalReport:
    """Score predictions against gold posts.

    Every gold post is scored; a post with no prediction row counts as an
    empty prediction. Predictions for unknown ids, duplicate ids on either
    side, and predicted offsets beyond a post's text length are data
    errors.
    """
    gold_by_id: dict[str, Post] = {}
    for post in gold_posts:
        if post.post_id in gold_by_id:
            raise DataError(f"duplicate post id {post.post_id!r} in gold data")
        gold_by_id[post.post_id] = post
    if not gold_by_id:
        raise DataError("gold data has no posts to score")

    predicted_by_id: dict[str, SpanSet] = {}
    if isinstance(predictions, Mapping):
        items = predictions.items()
    else:
        items = ((record.post_id, record.spans) for record in predictions)
    for post_id, spans in items:
        if post_id in predicted_by_id:
            raise DataError(f"duplicate post id {post_id!r} in predictions")
        predicted_by_id[post_id] = spans if isinstance(spans, SpanSet) else SpanSet(spans)

    unknown = sorted(set(predicted_by_id) - set(gold_by_id))
    if unknown:
        shown = ", ".join(repr(post_id) for post_id in unknown[:5])
        more = "" if len(unknown) <= 5 else f" and {len(unknown) - 5} more"
        raise DataError(f"predictions reference unknown post ids: {shown}{more}")

    per_post: dict[str, EvalResult] = {}
    empty_gold = 0
    total = 0.0
    for post_id, post in gold_by_id.items():
        spans = predicted_by_id.get(post_id, SpanSet())
        for off in spans:
            if off >= len(post.text):
                raise DataError(
                    f"prediction for post {post_id!r}: offset {off} exceeds "
                    f"text length {len(post.text)}"
                )
        result = span_f1(spans, post.gold)
        per_post[post_id] = result
        total += result.f1
        if not post.gold:
            empty_gold += 1
    return EvalReport(
        per_post=per_post,
        mean_f1=total / len(per_post),
        posts_scored=len(per_post),
        posts_with_empty_gold=empty_gold,
    )


def format_report(report: EvalReport) -> str:
    """Render a report as a per-post TSV followed by the corpus summary."""
    lines = ["id\tprecision\trecall\tf1"]
    for post_id, result in report.per_post.items():
        lines.append(
            f"{post_id}\t{result.precision:.4f}\t{result.recall:.4f}\t{result.f1:.4f}"
        )
    lines.append(f"mean_f1={report.mean_f1:.4f}")
    return "\n".join(lines) + "\n"
