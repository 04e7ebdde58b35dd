"""Toxic span detection at character-offset level.

The package tags the exact character ranges that make a post toxic. Two
methods share one interface: a lexicon baseline that marks tokens found in
a toxic word list, and a linear-chain CRF trained on annotated posts.
Evaluation scores predictions per post by span-level F1, and predictions
from any number of systems combine by character-level majority vote.
"""

from .corpus import Post, PredictionRecord, parse_dataset, parse_predictions, write_predictions
from .crf import (
    ChainPosterior,
    CrfGradient,
    CrfModel,
    Lattice,
    build_lattice,
    forward_backward,
    nll_and_gradient,
    predict_offsets,
    viterbi_decode,
)
from .errors import DataError, NumericalError
from .evaluation import (
    EvalReport,
    EvalResult,
    evaluate_corpus,
    format_report,
    majority_vote,
    span_f1,
)
from .features import FeatureTemplates, extract_features
from .lexicon import (
    Lexicon,
    Trie,
    build_lexicon,
    load_lexicon,
    match_spans,
    mine_annotated_words,
    read_word_list,
    save_lexicon,
)
from .spans import SpanSet, offsets_to_ranges, ranges_to_offsets, token_labels_to_offsets
from .taggers import CrfTagger, LexiconTagger
from .tokenizer import DEFAULT_INTRA_WORD_CHARS, Token, Tokenizer, tokenize
from .training import TrainConfig, token_gold_labels, train

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ChainPosterior",
    "CrfGradient",
    "CrfModel",
    "CrfTagger",
    "DataError",
    "DEFAULT_INTRA_WORD_CHARS",
    "EvalReport",
    "EvalResult",
    "FeatureTemplates",
    "Lattice",
    "Lexicon",
    "LexiconTagger",
    "NumericalError",
    "Post",
    "PredictionRecord",
    "SpanSet",
    "Token",
    "Tokenizer",
    "TrainConfig",
    "Trie",
    "build_lattice",
    "build_lexicon",
    "evaluate_corpus",
    "extract_features",
    "format_report",
    "forward_backward",
    "load_lexicon",
    "majority_vote",
    "match_spans",
    "mine_annotated_words",
    "nll_and_gradient",
    "offsets_to_ranges",
    "parse_dataset",
    "parse_predictions",
    "predict_offsets",
    "ranges_to_offsets",
    "read_word_list",
    "save_lexicon",
    "span_f1",
    "token_gold_labels",
    "token_labels_to_offsets",
    "tokenize",
    "train",
    "viterbi_decode",
    "write_predictions",
]
