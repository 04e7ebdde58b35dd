"""Shared fixtures: a small hand-annotated corpus, a synthetic corpus
generator, dataset file writers, and a brute-force lattice oracle."""

import csv
import itertools
import math
import random

import pytest

from toxicspans import Post, SpanSet
from toxicspans.corpus import format_offsets

# Four posts with hand-checked character offsets. The annotated words are
# "Stupid" (0..5), "fucked" (34..39), "asshole" (28..34), "silly" (12..16);
# the third post carries no annotation at all.
EXAMPLE_POSTS = [
    Post(
        "0",
        "Stupid hatcheries have completely fucked everything",
        SpanSet([*range(0, 6), *range(34, 40)]),
    ),
    Post("1", "Victimitis: You are such an asshole.", SpanSet(range(28, 35))),
    Post("2", "So is his mother. They are silver spoon parasites.", SpanSet()),
    Post("3", "You're just silly.", SpanSet(range(12, 17))),
]


@pytest.fixture
def example_posts():
    return list(EXAMPLE_POSTS)


def synthetic_corpus(n_posts, seed=0, toxic_size=50, benign_size=200, censor_rate=0.0):
    """Posts built from disjoint toxic and benign pseudo-word vocabularies.

    Every toxic token occurrence is gold-annotated with exactly its own
    character range; separators and punctuation are never annotated. With a
    censor rate, that share of toxic occurrences keeps only the first and
    last letter and stars the middle, while staying gold-annotated.

    Returns (posts, toxic_words).
    """
    rng = random.Random(seed)
    words = set()
    while len(words) < toxic_size + benign_size:
        length = rng.randint(4, 8)
        words.add("".join(rng.choice("abcdefghijklmnopqrstuvwxyz") for _ in range(length)))
    words = sorted(words)
    rng.shuffle(words)
    toxic, benign = words[:toxic_size], words[toxic_size:]
    posts = []
    for i in range(n_posts):
        parts, gold, pos = [], [], 0
        for j in range(rng.randint(4, 12)):
            if rng.random() < 0.25:
                word = rng.choice(toxic)
                is_toxic = True
                if censor_rate and rng.random() < censor_rate:
                    word = word[0] + "*" * (len(word) - 2) + word[-1]
            else:
                word = rng.choice(benign)
                is_toxic = False
            if j:
                parts.append(" ")
                pos += 1
            if is_toxic:
                gold.extend(range(pos, pos + len(word)))
            parts.append(word)
            pos += len(word)
        if rng.random() < 0.3:
            parts.append(".")
        posts.append(Post(str(i), "".join(parts), SpanSet(gold)))
    return posts, toxic


@pytest.fixture
def make_synthetic():
    return synthetic_corpus


def write_dataset(path, posts):
    """Write posts as an annotated dataset CSV and return the path."""
    with open(path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["spans", "text", "text_id"])
        for post in posts:
            writer.writerow([format_offsets(post.gold), post.text, post.post_id])
    return str(path)


def write_prediction_file(path, rows):
    """Write (post_id, offsets) pairs as a prediction CSV and return the path."""
    with open(path, "w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["spans", "text_id"])
        for post_id, offsets in rows:
            writer.writerow([format_offsets(SpanSet(offsets)), post_id])
    return str(path)


def all_path_scores(emissions, transitions):
    """Score every label path of a small lattice by direct summation.

    Independent of the package's dynamic programming; used as the oracle
    for decoding and partition function checks.
    """
    n = len(emissions)
    scored = []
    for labels in itertools.product((0, 1), repeat=n):
        score = sum(float(emissions[i][labels[i]]) for i in range(n))
        score += sum(
            float(transitions[labels[i]][labels[i + 1]]) for i in range(n - 1)
        )
        scored.append((list(labels), score))
    return scored


def log_sum_exp(values):
    peak = max(values)
    return peak + math.log(sum(math.exp(v - peak) for v in values))


# Verdict lines recorded by the acceptance checks, replayed after the run
# so they stay visible under output capture.
VERDICTS = []


def record_verdict(line):
    VERDICTS.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in VERDICTS:
            terminalreporter.write_line(line)
