"""Synthetic corpora with known ground truth for tests and benchmarks.

Two generators, both placing 8 word clusters in a 16-dim embedding space
with one tag word per cluster sitting exactly on the cluster centroid:

* :func:`staircase_task` - relatedness follows a linear sum-threshold
  rule over cluster indices (sentence cluster k is related to tag cluster
  j iff k + 2j clears a fixed threshold).  The sampled training pairs are
  then separable by a linear model over [sentence mean ; tag] features up
  to a single engineered corner: an exact linear relation would force the
  top-scoring cluster to claim the entire tag vocabulary (leaving it
  nothing to sample negatives from), so that cluster is kept tiny and its
  strongest tag is clipped from its tag set.  The achievable pair
  accuracy ceiling is reported as ``linear_ceiling``.

* :func:`diagonal_task` - relatedness means "same cluster".  This is
  deliberately NOT linearly separable over concatenated features (any
  additive scorer fails the crossed pairs), but tag-conditioned sequence
  models can learn it; a category tree with one class per cluster is
  included for end-to-end classification checks.

Holding out clusters removes their sentences and tags from the training
corpus entirely while keeping their words in the embedding store, which
is exactly the zero-shot setting: the vectors exist, the labels were
never seen.
"""

from dataclasses import dataclass, field

import numpy as np

from .embeddings import EmbeddingStore
from .inference import CategoryTree
from .training import Corpus, TrainingPair

DIM = 16
N_CLUSTERS = 8

# staircase rule: related(k, j) <=> k + 2 j > STAIR_THRESHOLD
STAIR_THRESHOLD = 10.5
STAIR_SPACING = 0.25          # embedding-space distance between adjacent clusters
WORD_NOISE = 0.02
CLIP_CLUSTER_SIZE = 2         # records in the clipped top cluster


@dataclass
class SyntheticTask:
    corpus: Corpus
    store: EmbeddingStore
    tag_names: list[str]                  # tag word of each cluster
    record_clusters: list[int]            # cluster of each corpus record
    held_out: tuple[int, ...] = ()
    heldout_pairs: list[TrainingPair] = field(default_factory=list)
    tree: CategoryTree | None = None
    eval_items: list[tuple[str, str]] = field(default_factory=list)
    linear_ceiling: float = 1.0


def stair_related(k: int, j: int) -> bool:
    """Ground truth of the staircase world for sentence cluster k, tag cluster j."""
    return k + 2 * j > STAIR_THRESHOLD


def _sentence(rng: np.random.Generator, pool: list[str], min_len: int, max_len: int) -> list[str]:
    length = int(rng.integers(min_len, max_len + 1))
    return [pool[int(i)] for i in rng.integers(len(pool), size=length)]


def staircase_task(seed: int = 0, n_sentences: int = 200,
                   hold_out: tuple[int, ...] = (),
                   eval_sentences_per_cluster: int = 25,
                   words_per_cluster: int = 12,
                   min_len: int = 6, max_len: int = 16) -> SyntheticTask:
    """Linearly-learnable corpus; optionally hold entire clusters out.

    With ``hold_out`` the returned ``heldout_pairs`` cover every
    (held-out sentence, held-out tag) combination with ground-truth
    labels; for end clusters (1, 6) of the default geometry the labels
    are balanced.
    """
    rng = np.random.default_rng(seed)
    present = tuple(k for k in range(N_CLUSTERS) if k not in hold_out)
    if len(present) < 2:
        raise ValueError("need at least two present clusters")

    store, pools, tag_names = _build_store(rng, words_per_cluster)
    sets = _clipped_tag_sets(present, tag_names)

    top = max(present)  # the clipped cluster stays tiny to bound linear errors
    sizes = {k: CLIP_CLUSTER_SIZE if k == top else 0 for k in present}
    rest = [k for k in present if k != top]
    for i in range(n_sentences - CLIP_CLUSTER_SIZE):
        sizes[rest[i % len(rest)]] += 1

    records, record_clusters = [], []
    for k in present:
        for _ in range(sizes[k]):
            records.append((_sentence(rng, pools[k], min_len, max_len), set(sets[k])))
            record_clusters.append(k)
    corpus = Corpus(records=records)

    n_positive = sum(len(sets[k]) * sizes[k] for k in present)
    n_clipped = sizes[top] * len(sets[top])  # every negative of the top cluster
    ceiling = 1.0 - n_clipped / (2.0 * n_positive)

    heldout_pairs = []
    for k in hold_out:
        for _ in range(eval_sentences_per_cluster):
            toks = tuple(_sentence(rng, pools[k], min_len, max_len))
            for j in hold_out:
                heldout_pairs.append(
                    TrainingPair(toks, tag_names[j], int(stair_related(k, j))))

    return SyntheticTask(corpus=corpus, store=store, tag_names=tag_names,
                         record_clusters=record_clusters, held_out=tuple(hold_out),
                         heldout_pairs=heldout_pairs, linear_ceiling=ceiling)


def _build_store(rng: np.random.Generator, words_per_cluster: int):
    """Clusters along axis 0 at STAIR_SPACING intervals, with a random
    per-cluster offset in the upper dimensions; tags sit on the centroids."""
    store = EmbeddingStore(dim=DIM)
    pools: list[list[str]] = []
    tag_names: list[str] = []
    for k in range(N_CLUSTERS):
        centroid = np.zeros(DIM)
        centroid[0] = k * STAIR_SPACING
        centroid[2:] = rng.normal(0.0, 0.1, size=DIM - 2)
        tag = f"tag{k}"
        store.add(tag, centroid)
        tag_names.append(tag)
        pool = []
        for i in range(words_per_cluster):
            word = f"w{k}x{i}"
            store.add(word, centroid + rng.normal(0.0, WORD_NOISE, size=DIM))
            pool.append(word)
        pools.append(pool)
    return store, pools, tag_names


def _clipped_tag_sets(present: tuple[int, ...], tag_names: list[str]) -> dict[int, set[str]]:
    sets = {k: {j for j in present if stair_related(k, j)} for k in present}
    # An exact staircase makes the top cluster relate to every tag anyone
    # relates to; clip its strongest tag so negative sampling stays possible.
    while True:
        vocab = set().union(*sets.values())
        saturated = [k for k in present if sets[k] == vocab]
        if not saturated:
            break
        for k in saturated:
            sets[k].discard(max(sets[k]))
    for k in present:
        if not sets[k]:
            raise ValueError(f"cluster {k} ended up with no related tags")
    return {k: {tag_names[j] for j in js} for k, js in sets.items()}


DIAG_TAGS_PER_CLUSTER = 2


def diagonal_task(seed: int = 0, n_sentences: int = 200,
                  eval_sentences_per_cluster: int = 5,
                  words_per_cluster: int = 12,
                  min_len: int = 6, max_len: int = 12) -> SyntheticTask:
    """Cluster-match corpus: a sentence is related exactly to its own
    cluster's tags.  Centroids are scaled one-hot axes, so matching is a
    clean multiplicative feature.  Includes a category tree (one class
    per cluster) and held-out labeled sentences for end-to-end checks."""
    rng = np.random.default_rng(seed)
    store = EmbeddingStore(dim=DIM)
    pools: list[list[str]] = []
    cluster_tags: list[list[str]] = []
    for k in range(N_CLUSTERS):
        centroid = np.zeros(DIM)
        centroid[k] = 1.0
        tags = []
        for suffix in ("a", "b")[:DIAG_TAGS_PER_CLUSTER]:
            tag = f"t{k}{suffix}"
            store.add(tag, centroid + rng.normal(0.0, 0.05, size=DIM))
            tags.append(tag)
        cluster_tags.append(tags)
        pool = []
        for i in range(words_per_cluster):
            word = f"w{k}x{i}"
            store.add(word, centroid + rng.normal(0.0, 0.1, size=DIM))
            pool.append(word)
        pools.append(pool)

    records, record_clusters = [], []
    for i in range(n_sentences):
        k = i % N_CLUSTERS
        records.append((_sentence(rng, pools[k], min_len, max_len), set(cluster_tags[k])))
        record_clusters.append(k)

    tree = CategoryTree(classes={f"topic{k}": list(cluster_tags[k])
                                 for k in range(N_CLUSTERS)})
    eval_items = []
    for k in range(N_CLUSTERS):
        for _ in range(eval_sentences_per_cluster):
            eval_items.append((" ".join(_sentence(rng, pools[k], min_len, max_len)),
                               f"topic{k}"))

    return SyntheticTask(corpus=Corpus(records=records), store=store,
                         tag_names=[tags[0] for tags in cluster_tags],
                         record_clusters=record_clusters, tree=tree,
                         eval_items=eval_items, linear_ceiling=float("nan"))
