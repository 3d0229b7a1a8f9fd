"""Pretrained word-embedding store and sentence/tag embedding construction.

Two on-disk formats are supported:

* text: UTF-8, one entry per line, ``word v1 v2 ... vd`` space-separated.
* word2vec-style binary: an ASCII header line ``count dim``, then for each
  entry the word bytes, a single space, and ``dim`` little-endian 4-byte
  floats.  A newline may separate records.

Sentence matrices stack one embedding row per token; tags (possibly
multi-word phrases) embed as the dimensionwise mean of their in-vocabulary
words, which keeps tag vectors inside the pretrained space.
"""

import struct
from typing import BinaryIO, IO

import numpy as np

from .errors import AllWordsOutOfVocabulary, MalformedEmbeddingFile
from .text import tokenize

DEFAULT_DIM = 300


class EmbeddingStore:
    """Immutable-after-load map from word to dense float64 vector.

    ``oov_policy`` controls how unknown sentence words embed: "zero" maps
    them to a zero row.  "skip" is accepted for API compatibility but
    sequence embedding always falls back to zero rows (dropping rows would
    break the fixed sequence length); every fallback increments
    ``oov_count``.

    Attributes:
        dim: embedding dimensionality, >= 1.
        table: word -> vector of length ``dim``.
        oov_policy: "zero" or "skip".
        oov_count: running count of out-of-vocabulary sentence tokens seen
            by :func:`embed_sequence`; diagnostic only.
    """

    def __init__(self, dim: int, table: dict[str, np.ndarray] | None = None,
                 oov_policy: str = "zero"):
        if dim < 1:
            raise ValueError(f"embedding dim must be >= 1, got {dim}")
        if oov_policy not in ("zero", "skip"):
            raise ValueError(f"unknown oov_policy {oov_policy!r}")
        self.dim = dim
        self.table: dict[str, np.ndarray] = {}
        self.oov_policy = oov_policy
        self.oov_count = 0
        if table:
            for word, vec in table.items():
                self.add(word, vec)

    def add(self, word: str, vector) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise ValueError(f"vector for {word!r} has shape {vec.shape}, want ({self.dim},)")
        if word not in self.table:  # duplicates keep the first occurrence
            self.table[word] = vec

    def __contains__(self, word: str) -> bool:
        return word in self.table

    def __len__(self) -> int:
        return len(self.table)

    def vector(self, word: str) -> np.ndarray | None:
        return self.table.get(word)


def load_embeddings(source: BinaryIO, fmt: str = "text") -> EmbeddingStore:
    """Parse an embedding stream into an :class:`EmbeddingStore`.

    Args:
        source: binary file-like object.
        fmt: "text" or "word2vec-binary".

    Raises:
        MalformedEmbeddingFile: on dimension mismatch between entries,
            unparsable floats, or a truncated binary record.
    """
    if fmt == "text":
        return _load_text(source)
    if fmt == "word2vec-binary":
        return _load_word2vec_binary(source)
    raise ValueError(f"unknown embedding format {fmt!r}")


def _load_text(source: BinaryIO) -> EmbeddingStore:
    store = None
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise MalformedEmbeddingFile(f"line {lineno}: not valid UTF-8") from exc
        else:
            line = raw
        parts = line.split()
        if not parts:
            continue
        word, values = parts[0], parts[1:]
        if not values:
            raise MalformedEmbeddingFile(f"line {lineno}: no values for {word!r}")
        try:
            vec = np.array([float(v) for v in values], dtype=np.float64)
        except ValueError as exc:
            raise MalformedEmbeddingFile(f"line {lineno}: unparsable float") from exc
        if store is None:
            store = EmbeddingStore(dim=len(vec))
        elif len(vec) != store.dim:
            raise MalformedEmbeddingFile(
                f"line {lineno}: dimension {len(vec)} != {store.dim} of first entry")
        store.add(word, vec)
    if store is None:
        raise MalformedEmbeddingFile("no entries in embedding stream")
    return store


def _load_word2vec_binary(source: BinaryIO) -> EmbeddingStore:
    header = bytearray()
    while True:
        ch = source.read(1)
        if not ch:
            raise MalformedEmbeddingFile("truncated binary header")
        if ch == b"\n":
            break
        header += ch
    try:
        count_s, dim_s = header.split()
        count, dim = int(count_s), int(dim_s)
    except ValueError as exc:
        raise MalformedEmbeddingFile(f"bad binary header {bytes(header)!r}") from exc
    if count < 1 or dim < 1:
        raise MalformedEmbeddingFile(f"bad binary header counts {count} {dim}")

    store = EmbeddingStore(dim=dim)
    rec_size = 4 * dim
    for i in range(count):
        word_bytes = bytearray()
        while True:
            ch = source.read(1)
            if not ch:
                raise MalformedEmbeddingFile(f"truncated record {i}")
            if ch == b" ":
                break
            if ch == b"\n" and not word_bytes:
                continue  # tolerate newline between records
            word_bytes += ch
        payload = source.read(rec_size)
        if len(payload) != rec_size:
            raise MalformedEmbeddingFile(f"truncated vector for record {i}")
        vec = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        try:
            word = word_bytes.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedEmbeddingFile(f"record {i}: word is not valid UTF-8") from exc
        store.add(word, vec)
    return store


def save_embeddings(store: EmbeddingStore, sink: IO, fmt: str = "text") -> None:
    """Write the store in the given format (inverse of :func:`load_embeddings`).

    Text output reproduces vectors within 1e-6 per component on reload;
    binary output is exact at float32 precision.
    """
    if fmt == "text":
        for word, vec in store.table.items():
            line = word + " " + " ".join(f"{v:.9g}" for v in vec) + "\n"
            _write(sink, line.encode("utf-8"))
    elif fmt == "word2vec-binary":
        _write(sink, f"{len(store.table)} {store.dim}\n".encode("ascii"))
        for word, vec in store.table.items():
            _write(sink, word.encode("utf-8") + b" ")
            _write(sink, vec.astype("<f4").tobytes())
            _write(sink, b"\n")
    else:
        raise ValueError(f"unknown embedding format {fmt!r}")


def _write(sink: IO, data: bytes) -> None:
    try:
        sink.write(data)
    except TypeError:  # text-mode sink
        sink.write(data.decode("utf-8"))


def embed_sequence(store: EmbeddingStore, tokens: list[str]) -> np.ndarray:
    """Stack per-token embeddings into a (len(tokens), dim) float64 matrix.

    Out-of-vocabulary tokens become zero rows and bump ``store.oov_count``,
    keeping the matrix shape fixed for sequence models.
    """
    rows = np.zeros((len(tokens), store.dim), dtype=np.float64)
    for t, tok in enumerate(tokens):
        vec = store.table.get(tok)
        if vec is None:
            store.oov_count += 1
        else:
            rows[t] = vec
    return rows


def embed_tag(store: EmbeddingStore, tag: str) -> np.ndarray:
    """Embed a tag phrase as the mean of its in-vocabulary word vectors.

    Words missing from the store are skipped; single in-vocabulary words
    embed to their own vector exactly.

    Raises:
        AllWordsOutOfVocabulary: if no word of the tag is in the store.
    """
    words = tokenize(tag)
    vecs = [store.table[w] for w in words if w in store.table]
    if not vecs:
        raise AllWordsOutOfVocabulary(f"tag {tag!r} has no in-vocabulary words")
    return np.mean(vecs, axis=0)
