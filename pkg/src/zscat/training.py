"""Balanced pair sampling and the BCE + Adam training loop.

A corpus is a list of (sentence tokens, related tag set) records.  Each
epoch resamples pairs: every (sentence, tag) positive is emitted with
label 1 together with one negative whose tag is drawn uniformly from the
corpus tag vocabulary minus the sentence's own tags, giving an exact
50/50 label balance.  Everything is deterministic given the seed.
"""

from dataclasses import dataclass, field

import numpy as np

from . import models, nn
from .embeddings import EmbeddingStore, embed_sequence, embed_tag
from .errors import DegenerateVocabulary, EmptyEvaluationSet, NonFiniteLoss
from .text import DEFAULT_TARGET_LENGTH, normalize_length


@dataclass
class Corpus:
    """Sentence records with their related tags.

    ``records`` holds (tokens, tag set) tuples; every record has at least
    one tag.  ``dropped_records`` counts input lines discarded during
    parsing (no usable tags, or no usable tokens).
    """

    records: list[tuple[list[str], set[str]]]
    dropped_records: int = 0

    @property
    def tag_vocabulary(self) -> set[str]:
        vocab: set[str] = set()
        for _, tags in self.records:
            vocab |= tags
        return vocab

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class TrainingPair:
    """One (sentence, tag, label) training example; label 1 means related."""

    tokens: tuple[str, ...]
    tag: str
    label: int


def sample_pairs(corpus: Corpus, rng_seed) -> list[TrainingPair]:
    """Emit one negative per positive: exactly half the pairs are related.

    Negative tags are uniform over the corpus vocabulary minus the
    record's own tags.  Deterministic given ``rng_seed``.

    Raises:
        DegenerateVocabulary: if some record's tag set equals the whole
            vocabulary (no negative tag exists for it).
    """
    vocab = sorted(corpus.tag_vocabulary)
    rng = np.random.default_rng(rng_seed)
    pairs: list[TrainingPair] = []
    for tokens, tags in corpus.records:
        pool = [t for t in vocab if t not in tags]
        if not pool:
            raise DegenerateVocabulary(
                f"record tags {sorted(tags)!r} cover the entire vocabulary")
        toks = tuple(tokens)
        for tag in sorted(tags):
            pairs.append(TrainingPair(toks, tag, 1))
            neg = pool[int(rng.integers(len(pool)))]
            pairs.append(TrainingPair(toks, neg, 0))
    return pairs


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    lr: float = nn.ADAM_LR
    beta1: float = nn.ADAM_BETA1
    beta2: float = nn.ADAM_BETA2
    eps: float = nn.ADAM_EPS
    seed: int = 0
    target_length: int = DEFAULT_TARGET_LENGTH
    fine_tune_embeddings: bool = False


@dataclass
class EpochMetrics:
    epoch: int
    loss: float
    accuracy: float


class _PairEmbedder:
    """Embeds pairs into batch arrays, caching matrices while the store
    is frozen (caches are bypassed when fine-tuning mutates the store)."""

    def __init__(self, store: EmbeddingStore, target_length: int, cache: bool = True):
        self.store = store
        self.target_length = target_length
        self.cache = cache
        self._sent: dict[tuple[str, ...], np.ndarray] = {}
        self._tag: dict[str, np.ndarray] = {}

    def sentence_matrix(self, tokens: tuple[str, ...]) -> np.ndarray:
        if self.cache and tokens in self._sent:
            return self._sent[tokens]
        mat = embed_sequence(self.store, normalize_length(list(tokens), self.target_length))
        if self.cache:
            self._sent[tokens] = mat
        return mat

    def tag_vector(self, tag: str) -> np.ndarray:
        if self.cache and tag in self._tag:
            return self._tag[tag]
        vec = embed_tag(self.store, tag)
        if self.cache:
            self._tag[tag] = vec
        return vec

    def batch(self, pairs: list[TrainingPair]):
        sents = np.stack([self.sentence_matrix(p.tokens) for p in pairs])
        tags = np.stack([self.tag_vector(p.tag) for p in pairs])
        labels = np.array([p.label for p in pairs], dtype=np.float64)
        return sents, tags, labels


def train(model: models.RelatednessModel, store: EmbeddingStore, corpus: Corpus,
          config: TrainConfig):
    """Train ``model`` in place; returns (model, per-epoch metrics).

    Pairs are freshly sampled each epoch, shuffled, and consumed in
    minibatches with gradient averaging and Adam updates.  With
    ``fine_tune_embeddings`` the sentence-side word vectors in ``store``
    are nudged by averaged gradients at the Adam learning rate; tag-side
    lookups always stay frozen.  Identical seeds and config give
    bit-identical final parameters.

    Raises:
        NonFiniteLoss: if any batch produces a NaN/inf loss, reporting the
            epoch and batch index.
    """
    if config.epochs == 0:
        return model, []

    seed_root = np.random.SeedSequence(config.seed)
    epoch_seeds = seed_root.spawn(config.epochs + 1)
    shuffle_rng = np.random.default_rng(epoch_seeds[0])
    adam = nn.AdamState.for_size(model.num_params, lr=config.lr, beta1=config.beta1,
                                 beta2=config.beta2, eps=config.eps)
    embedder = _PairEmbedder(store, config.target_length,
                             cache=not config.fine_tune_embeddings)

    metrics: list[EpochMetrics] = []
    for epoch in range(config.epochs):
        pairs = sample_pairs(corpus, epoch_seeds[epoch + 1])
        order = shuffle_rng.permutation(len(pairs))
        total_loss = 0.0
        total_correct = 0

        for batch_index, start in enumerate(range(0, len(pairs), config.batch_size)):
            batch = [pairs[i] for i in order[start:start + config.batch_size]]
            sents, tags, labels = embedder.batch(batch)
            p, cache = models.forward_batch(model, sents, tags)
            losses = nn.bce_loss(p, labels)
            if not np.all(np.isfinite(losses)):
                raise NonFiniteLoss(epoch, batch_index)
            total_loss += float(losses.sum())
            total_correct += int(np.sum((p >= 0.5) == (labels == 1.0)))

            grads, grad_sent = models.backward_batch(model, cache, labels)
            flat = model.flatten_grads(grads) / len(batch)
            model.set_flat_params(adam_step(adam, model, flat))
            if config.fine_tune_embeddings:
                _apply_embedding_grads(store, batch, grad_sent / len(batch),
                                       config.target_length, config.lr)

        metrics.append(EpochMetrics(epoch=epoch, loss=total_loss / len(pairs),
                                    accuracy=total_correct / len(pairs)))
    return model, metrics


def adam_step(adam: nn.AdamState, model: models.RelatednessModel,
              flat_grads: np.ndarray) -> np.ndarray:
    return nn.adam_update(adam, model.flat_params(), flat_grads)


def _apply_embedding_grads(store: EmbeddingStore, batch: list[TrainingPair],
                           grad_sent: np.ndarray, target_length: int, lr: float) -> None:
    # Plain averaged-gradient descent on the sentence-side vectors; words
    # absent from the store (OOV zero rows) are left untouched.
    accum: dict[str, np.ndarray] = {}
    for b, pair in enumerate(batch):
        seq = normalize_length(list(pair.tokens), target_length)
        for t, word in enumerate(seq):
            if word in store.table:
                if word in accum:
                    accum[word] += grad_sent[b, t]
                else:
                    accum[word] = grad_sent[b, t].copy()
    for word, grad in accum.items():
        store.table[word] = store.table[word] - lr * grad


@dataclass
class BinaryEvalResult:
    accuracy: float
    loss: float
    count: int


def evaluate_binary(model: models.RelatednessModel, store: EmbeddingStore,
                    pairs: list[TrainingPair],
                    target_length: int = DEFAULT_TARGET_LENGTH,
                    batch_size: int = 256) -> BinaryEvalResult:
    """Binary accuracy (p >= 0.5 predicts related) and mean BCE loss.

    Raises:
        EmptyEvaluationSet: if ``pairs`` is empty.
    """
    if not pairs:
        raise EmptyEvaluationSet("no pairs to evaluate")
    embedder = _PairEmbedder(store, target_length)
    correct = 0
    loss = 0.0
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start:start + batch_size]
        sents, tags, labels = embedder.batch(chunk)
        p, _ = models.forward_batch(model, sents, tags)
        loss += float(nn.bce_loss(p, labels).sum())
        correct += int(np.sum((p >= 0.5) == (labels == 1.0)))
    return BinaryEvalResult(accuracy=correct / len(pairs), loss=loss / len(pairs),
                            count=len(pairs))


def unseen_tag_pairs(pairs: list[TrainingPair], known_tags: set[str]) -> list[TrainingPair]:
    """Keep only pairs whose tag never occurs in ``known_tags`` (typically
    the training-side vocabulary), for unseen-tag accuracy reports."""
    return [p for p in pairs if p.tag not in known_tags]
