"""Corpus, category-tree, and labeled-dataset file formats.

All formats are UTF-8 text, LF line endings (a trailing CR is tolerated):

* corpus TSV: one record per line, ``sentence<TAB>tag1, tag2, ...``
* category tree: one class per line, ``class_name: tag1, tag2, ...``
* labeled datasets: either the news-aggregator CSV export (tab-separated
  columns, title in column 2, one-letter category code in column 5) or a
  generic ``sentence<TAB>class`` TSV.

Two ready-made category trees ship as package fixtures:
``news_aggregator`` (business/technology/entertainment/medicine) and
``tweet`` (six classes, three tags each).
"""

import hashlib
from dataclasses import dataclass
from importlib import resources
from typing import IO

import numpy as np

from .errors import (DegenerateSplit, DuplicateClass, EmptyTagList, MalformedRecord,
                     MalformedTreeLine, UnknownCategoryCode)
from .inference import CategoryTree
from .text import tokenize
from .training import Corpus

UCI_CATEGORY_CODES = {
    "b": "business",
    "t": "technology",
    "e": "entertainment",
    "m": "medicine",
}

FIXTURE_TREES = ("news_aggregator", "tweet")


@dataclass
class LabeledDataset:
    """Evaluation items: (sentence text, gold class name)."""

    items: list[tuple[str, str]]


def _lines(source: IO):
    """Yield (1-based line number, decoded line without EOL)."""
    for lineno, raw in enumerate(source, start=1):
        line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
        yield lineno, line.rstrip("\r\n")


def parse_corpus(source: IO) -> Corpus:
    """Parse corpus TSV into records of (tokens, tag set).

    Tags are trimmed, lowercased, and deduplicated per record.  Blank
    lines are skipped; records with no usable tags or no usable sentence
    tokens are dropped and counted in ``Corpus.dropped_records``.

    Raises:
        MalformedRecord: a nonblank line has no tab separator.
    """
    records = []
    dropped = 0
    for lineno, line in _lines(source):
        if not line.strip():
            continue
        if "\t" not in line:
            raise MalformedRecord(lineno, "expected 'sentence<TAB>tags'")
        sentence, _, tag_field = line.partition("\t")
        tags = _parse_tag_list(tag_field)
        tokens = tokenize(sentence)
        if not tags or not tokens:
            dropped += 1
            continue
        records.append((tokens, tags))
    return Corpus(records=records, dropped_records=dropped)


def _parse_tag_list(field: str) -> set[str]:
    return {t.strip().lower() for t in field.split(",") if t.strip()}


def write_corpus(corpus: Corpus, sink: IO) -> None:
    """Inverse of :func:`parse_corpus` (tags must not contain commas/tabs)."""
    for tokens, tags in corpus.records:
        sink.write(" ".join(tokens) + "\t" + ", ".join(sorted(tags)) + "\n")


def parse_category_tree(source: IO) -> CategoryTree:
    """Parse ``class_name: tag1, tag2, ...`` lines, preserving file order.

    Raises:
        MalformedTreeLine: missing colon, empty class name, or empty file.
        DuplicateClass: a class name repeats.
        EmptyTagList: a class lists no tags.
    """
    classes: dict[str, list[str]] = {}
    for lineno, line in _lines(source):
        if not line.strip():
            continue
        if ":" not in line:
            raise MalformedTreeLine(lineno, "expected 'class_name: tag1, tag2, ...'")
        name, _, tag_field = line.partition(":")
        name = name.strip().lower()
        if not name:
            raise MalformedTreeLine(lineno, "empty class name")
        if name in classes:
            raise DuplicateClass(lineno, f"class {name!r} already defined")
        tags = [t.strip().lower() for t in tag_field.split(",") if t.strip()]
        if not tags:
            raise EmptyTagList(lineno, f"class {name!r} has no tags")
        classes[name] = tags
    if not classes:
        raise MalformedTreeLine(0, "tree file contains no classes")
    return CategoryTree(classes=classes)


def write_category_tree(tree: CategoryTree, sink: IO) -> None:
    """Inverse of :func:`parse_category_tree`."""
    for name, tags in tree.classes.items():
        sink.write(f"{name}: {', '.join(tags)}\n")


def parse_labeled_dataset(source: IO, fmt: str = "tsv_generic") -> LabeledDataset:
    """Parse an evaluation dataset.

    ``csv_uci`` reads the news-aggregator export: tab-separated columns
    with the headline in column 2 and a one-letter category code in
    column 5, mapped b/t/e/m -> business/technology/entertainment/
    medicine.  ``tsv_generic`` reads ``sentence<TAB>class`` lines.

    Raises:
        MalformedRecord: wrong column count, or an empty dataset.
        UnknownCategoryCode: a csv_uci code outside b/t/e/m.
    """
    items: list[tuple[str, str]] = []
    if fmt == "csv_uci":
        for lineno, line in _lines(source):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) < 5:
                raise MalformedRecord(lineno, f"expected >= 5 tab-separated columns, got {len(fields)}")
            code = fields[4].strip().lower()
            if code not in UCI_CATEGORY_CODES:
                raise UnknownCategoryCode(lineno, f"category code {code!r}")
            items.append((fields[1], UCI_CATEGORY_CODES[code]))
    elif fmt == "tsv_generic":
        for lineno, line in _lines(source):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2 or not fields[0].strip() or not fields[1].strip():
                raise MalformedRecord(lineno, "expected 'sentence<TAB>class'")
            items.append((fields[0], fields[1].strip().lower()))
    else:
        raise ValueError(f"unknown dataset format {fmt!r}")
    if not items:
        raise MalformedRecord(0, "dataset contains no records")
    return LabeledDataset(items=items)


@dataclass
class SplitResult:
    train: Corpus
    test: Corpus
    train_tags: set[str]
    test_tags: set[str]
    test_only_tags: set[str]


def split_corpus(corpus: Corpus, test_fraction: float, seed: int) -> SplitResult:
    """Deterministic partition by seeded hash of the sentence text.

    A record lands on the test side when the keyed 64-bit hash of its
    joined tokens falls below ``test_fraction`` of the hash range, so the
    split is stable across runs and processes.  The result reports both
    tag vocabularies and the tags exclusive to the test side (the
    unseen-tag evaluation set).

    Raises:
        DegenerateSplit: if either side ends up empty.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    key = f"split:{seed}".encode("utf-8")
    cutoff = int(test_fraction * 2 ** 64)
    train_records, test_records = [], []
    for tokens, tags in corpus.records:
        digest = hashlib.blake2b(" ".join(tokens).encode("utf-8"), key=key,
                                 digest_size=8).digest()
        bucket = int.from_bytes(digest, "little")
        (test_records if bucket < cutoff else train_records).append((tokens, tags))
    if not train_records or not test_records:
        raise DegenerateSplit(
            f"fraction {test_fraction} left sides of size {len(train_records)}/{len(test_records)}")
    train = Corpus(records=train_records)
    test = Corpus(records=test_records)
    train_tags = train.tag_vocabulary
    test_tags = test.tag_vocabulary
    return SplitResult(train=train, test=test, train_tags=train_tags,
                       test_tags=test_tags, test_only_tags=test_tags - train_tags)


def load_fixture_tree(name: str) -> CategoryTree:
    """Load one of the bundled category trees ("news_aggregator" or "tweet")."""
    if name not in FIXTURE_TREES:
        raise ValueError(f"unknown fixture tree {name!r}, have {FIXTURE_TREES}")
    ref = resources.files("zscat.fixtures").joinpath(f"{name}_tree.txt")
    with ref.open("rb") as f:
        return parse_category_tree(f)
