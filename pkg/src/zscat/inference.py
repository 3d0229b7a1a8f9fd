"""Category-tree classification on top of the relatedness models.

A category tree maps each class to representative tags.  A sentence's
class score is the mean relatedness probability over the class's tags;
classes are then assigned either by threshold (multilabel) or argmax
(single label).
"""

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import models
from .embeddings import EmbeddingStore, embed_sequence, embed_tag
from .errors import AllWordsOutOfVocabulary, EmptySentence, UnknownLabel
from .text import DEFAULT_TARGET_LENGTH, normalize_length, tokenize

DEFAULT_THRESHOLD = 0.5


@dataclass
class CategoryTree:
    """Ordered map from class name to its nonempty list of tags."""

    classes: dict[str, list[str]]

    def __post_init__(self):
        if not self.classes:
            raise ValueError("a category tree needs at least one class")
        for name, tags in self.classes.items():
            if not tags:
                raise ValueError(f"class {name!r} has an empty tag list")

    def class_names(self) -> list[str]:
        return list(self.classes.keys())


@dataclass
class ClassScores:
    """Per-class mean relatedness, plus the classes whose every tag was
    out of vocabulary (those score 0.0)."""

    scores: dict[str, float]
    all_oov_classes: set[str] = field(default_factory=set)


def relatedness(model: models.RelatednessModel, store: EmbeddingStore,
                sentence_text: str, tag_phrase: str,
                target_length: int = DEFAULT_TARGET_LENGTH) -> float:
    """Probability that a raw sentence is related to a tag phrase.

    Composition of the full pipeline: tokenize -> normalize length ->
    embed -> model forward.

    Raises:
        EmptySentence: the sentence tokenizes to nothing.
        AllWordsOutOfVocabulary: no tag word is in the store.
    """
    tokens = tokenize(sentence_text)
    if not tokens:
        raise EmptySentence(f"no tokens in {sentence_text!r}")
    seq = normalize_length(tokens, target_length)
    p, _ = models.forward(model, embed_sequence(store, seq), embed_tag(store, tag_phrase))
    return p


def class_scores(model: models.RelatednessModel, store: EmbeddingStore,
                 sentence_text: str, tree: CategoryTree,
                 target_length: int = DEFAULT_TARGET_LENGTH) -> ClassScores:
    """Mean relatedness per tree class.

    Duplicate tags within a class are scored once, and tags whose words
    are all out of vocabulary are skipped from the mean rather than
    dragging it down; a class with no scoreable tags gets 0.0 and is
    flagged in ``all_oov_classes``.
    """
    scores: dict[str, float] = {}
    all_oov: set[str] = set()
    for name, tags in tree.classes.items():
        values = []
        for tag in dict.fromkeys(tags):  # dedupe, preserving order
            try:
                values.append(relatedness(model, store, sentence_text, tag, target_length))
            except AllWordsOutOfVocabulary:
                continue
        if values:
            scores[name] = float(np.mean(values))
        else:
            scores[name] = 0.0
            all_oov.add(name)
    return ClassScores(scores=scores, all_oov_classes=all_oov)


def _as_mapping(scores) -> Mapping[str, float]:
    return scores.scores if isinstance(scores, ClassScores) else scores


def classify_multilabel(scores, threshold: float = DEFAULT_THRESHOLD) -> set[str]:
    """All classes scoring strictly above the threshold (so threshold 1.0
    cleanly yields the empty set)."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must be in [0, 1], got {threshold}")
    return {name for name, score in _as_mapping(scores).items() if score > threshold}


def classify_single(scores) -> str:
    """Argmax class; ties go to the earliest class in tree order."""
    mapping = _as_mapping(scores)
    if not mapping:
        raise ValueError("cannot classify an empty score map")
    best_name, best_score = None, -np.inf
    for name, score in mapping.items():
        if score > best_score:
            best_name, best_score = name, score
    return best_name


@dataclass
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if (self.tp + self.fp) else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if (self.tp + self.fn) else 0.0


@dataclass
class DatasetReport:
    accuracy: float
    counts: dict[str, ClassCounts]
    total: int
    mode: str
    threshold: float | None = None


def evaluate_dataset(model: models.RelatednessModel, store: EmbeddingStore,
                     dataset, tree: CategoryTree, mode: str = "single",
                     threshold: float = DEFAULT_THRESHOLD,
                     target_length: int = DEFAULT_TARGET_LENGTH) -> DatasetReport:
    """Classify every dataset item against the tree and score it.

    Single mode counts argmax hits; multilabel mode counts exact matches
    of the thresholded class set against {gold label}.

    Raises:
        UnknownLabel: if a dataset label is not a tree class (checked
            before any scoring).
    """
    if mode not in ("single", "multilabel"):
        raise ValueError(f"mode must be 'single' or 'multilabel', got {mode!r}")
    names = set(tree.class_names())
    unknown = sorted({label for _, label in dataset.items} - names)
    if unknown:
        raise UnknownLabel(f"dataset labels {unknown!r} missing from the tree")

    counts = {name: ClassCounts() for name in tree.class_names()}
    hits = 0
    for sentence_text, gold in dataset.items:
        scored = class_scores(model, store, sentence_text, tree, target_length)
        if mode == "single":
            predicted = {classify_single(scored)}
        else:
            predicted = classify_multilabel(scored, threshold)
        if predicted == {gold}:
            hits += 1
        for name in tree.class_names():
            in_pred = name in predicted
            if in_pred and name == gold:
                counts[name].tp += 1
            elif in_pred:
                counts[name].fp += 1
            elif name == gold:
                counts[name].fn += 1
    return DatasetReport(accuracy=hits / len(dataset.items), counts=counts,
                         total=len(dataset.items), mode=mode,
                         threshold=threshold if mode == "multilabel" else None)
