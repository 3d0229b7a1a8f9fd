"""Zero-shot text categorization via sentence-tag relatedness.

Train binary classifiers that score how related a sentence is to a tag
embedding, then classify text into classes never seen in training by
aggregating relatedness over a category tree.
"""

from .embeddings import EmbeddingStore, embed_sequence, embed_tag, load_embeddings, save_embeddings
from .inference import (CategoryTree, ClassScores, class_scores, classify_multilabel,
                        classify_single, evaluate_dataset, relatedness)
from .models import (RelatednessModel, backward, forward, gradient_check,
                     load_checkpoint, load_checkpoint_file, save_checkpoint,
                     save_checkpoint_file)
from .text import DEFAULT_TARGET_LENGTH, normalize_length, tokenize
from .training import (Corpus, TrainConfig, TrainingPair, evaluate_binary,
                       sample_pairs, train, unseen_tag_pairs)
from .data import (LabeledDataset, load_fixture_tree, parse_category_tree, parse_corpus,
                   parse_labeled_dataset, split_corpus, write_category_tree, write_corpus)

__version__ = "0.1.0"

__all__ = [
    "CategoryTree", "ClassScores", "Corpus", "DEFAULT_TARGET_LENGTH", "EmbeddingStore",
    "LabeledDataset", "RelatednessModel", "TrainConfig", "TrainingPair", "backward",
    "class_scores", "classify_multilabel", "classify_single", "embed_sequence",
    "embed_tag", "evaluate_binary", "evaluate_dataset", "forward", "gradient_check",
    "load_checkpoint", "load_checkpoint_file", "load_embeddings", "load_fixture_tree",
    "normalize_length", "parse_category_tree", "parse_corpus", "parse_labeled_dataset",
    "relatedness", "sample_pairs", "save_checkpoint", "save_checkpoint_file",
    "save_embeddings", "split_corpus", "tokenize", "train", "unseen_tag_pairs",
    "write_category_tree", "write_corpus",
]
