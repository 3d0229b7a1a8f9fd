"""The three sentence-tag relatedness architectures.

All three map a sentence embedding matrix S (one row per token) and a tag
embedding T to the probability that sentence and tag are related:

* arch 1: single dense layer over [mean_t(S_t) ; T].
* arch 2: LSTM over S_1..S_N, dense layer over [h_N ; T].
* arch 3: LSTM whose step-t input is [T ; S_t], dense layer over h_N.

Probabilities come from a single logit through a sigmoid.  Training is
binary cross-entropy; backward() returns exact gradients for every
parameter plus the sentence rows (used only when embedding fine-tuning is
enabled).
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import CorruptCheckpoint, ShapeMismatch, StaleCache
from .nn import LstmParams

DEFAULT_HIDDEN_DIM = 128

CHECKPOINT_MAGIC = b"ZSCAT1"
_HEADER = struct.Struct("<6siiiq")  # magic, arch_id, embed_dim, hidden_dim, seed


def _block_shapes(arch_id: int, embed_dim: int, hidden_dim: int) -> dict[str, tuple]:
    """Parameter block names, shapes, and order for one architecture."""
    d, hdim = embed_dim, hidden_dim
    if arch_id == 1:
        return {"w": (1, 2 * d), "b": (1,)}
    if arch_id == 2:
        return {"lstm_wx": (4 * hdim, d), "lstm_wh": (4 * hdim, hdim),
                "lstm_b": (4 * hdim,), "w": (1, hdim + d), "b": (1,)}
    if arch_id == 3:
        return {"lstm_wx": (4 * hdim, 2 * d), "lstm_wh": (4 * hdim, hdim),
                "lstm_b": (4 * hdim,), "w": (1, hdim), "b": (1,)}
    raise ValueError(f"arch_id must be 1, 2 or 3, got {arch_id}")


class RelatednessModel:
    """Parameters of one relatedness architecture.

    ``params`` maps block name to array; block order is fixed per
    architecture and doubles as the checkpoint layout:

    * arch 1: w (1, 2d), b (1,)
    * arch 2: lstm_wx (4H, d), lstm_wh (4H, H), lstm_b (4H,), w (1, H+d), b (1,)
    * arch 3: lstm_wx (4H, 2d), lstm_wh (4H, H), lstm_b (4H,), w (1, H), b (1,)

    ``version`` increments on every parameter mutation; forward caches
    record the version they were built against.
    """

    def __init__(self, arch_id: int, embed_dim: int, hidden_dim: int,
                 params: dict[str, np.ndarray], seed: int = 0):
        if arch_id not in (1, 2, 3):
            raise ValueError(f"arch_id must be 1, 2 or 3, got {arch_id}")
        self.arch_id = arch_id
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim if arch_id != 1 else 0
        self.seed = seed
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        self.version = 0
        for name, shape in self._expected_shapes().items():
            got = self.params.get(name)
            if got is None or got.shape != shape:
                raise ShapeMismatch(
                    f"arch {arch_id} block {name!r}: want {shape}, got "
                    f"{None if got is None else got.shape}")

    @classmethod
    def create(cls, arch_id: int, embed_dim: int,
               hidden_dim: int = DEFAULT_HIDDEN_DIM, seed: int = 0) -> "RelatednessModel":
        """Seeded Glorot/zero initialization (forget-gate biases at 1.0)."""
        rng = np.random.default_rng(seed)
        d, hdim = embed_dim, hidden_dim
        params: dict[str, np.ndarray] = {}
        if arch_id == 1:
            params["w"] = nn.glorot_uniform(rng, 1, 2 * d)
            params["b"] = np.zeros(1, dtype=np.float64)
        elif arch_id == 2:
            lstm = LstmParams.create(rng, d, hdim)
            params.update(lstm_wx=lstm.wx, lstm_wh=lstm.wh, lstm_b=lstm.b)
            params["w"] = nn.glorot_uniform(rng, 1, hdim + d)
            params["b"] = np.zeros(1, dtype=np.float64)
        elif arch_id == 3:
            lstm = LstmParams.create(rng, 2 * d, hdim)
            params.update(lstm_wx=lstm.wx, lstm_wh=lstm.wh, lstm_b=lstm.b)
            params["w"] = nn.glorot_uniform(rng, 1, hdim)
            params["b"] = np.zeros(1, dtype=np.float64)
        else:
            raise ValueError(f"arch_id must be 1, 2 or 3, got {arch_id}")
        return cls(arch_id, embed_dim, hidden_dim, params, seed=seed)

    def _expected_shapes(self) -> dict[str, tuple]:
        return _block_shapes(self.arch_id, self.embed_dim, self.hidden_dim)

    def block_order(self) -> list[str]:
        return list(self._expected_shapes().keys())

    def param_items(self) -> list[tuple[str, np.ndarray]]:
        return [(name, self.params[name]) for name in self.block_order()]

    @property
    def num_params(self) -> int:
        return sum(p.size for p in self.params.values())

    def lstm(self) -> LstmParams:
        return LstmParams(wx=self.params["lstm_wx"], wh=self.params["lstm_wh"],
                          b=self.params["lstm_b"])

    def flat_params(self) -> np.ndarray:
        return np.concatenate([p.ravel() for _, p in self.param_items()])

    def set_flat_params(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.num_params,):
            raise ShapeMismatch(f"flat vector {flat.shape} != ({self.num_params},)")
        offset = 0
        for name in self.block_order():
            block = self.params[name]
            block[...] = flat[offset:offset + block.size].reshape(block.shape)
            offset += block.size
        self.version += 1

    def flatten_grads(self, grads: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([grads[name].ravel() for name in self.block_order()])


@dataclass
class ForwardCache:
    arch_id: int
    version: int
    p: np.ndarray          # (B,) probabilities
    feats: np.ndarray | None
    lstm_caches: list | None
    n_tokens: int
    batched: bool


def forward_batch(model: RelatednessModel, sentences: np.ndarray, tags: np.ndarray):
    """Score a batch: sentences (B, N, d), tags (B, d) -> (p (B,), cache)."""
    sentences = np.asarray(sentences, dtype=np.float64)
    tags = np.asarray(tags, dtype=np.float64)
    d = model.embed_dim
    if sentences.ndim != 3 or sentences.shape[2] != d:
        raise ShapeMismatch(f"sentences shape {sentences.shape}, want (B, N, {d})")
    if tags.shape != (sentences.shape[0], d):
        raise ShapeMismatch(f"tags shape {tags.shape}, want ({sentences.shape[0]}, {d})")

    lstm_caches = None
    if model.arch_id == 1:
        feats = np.concatenate([sentences.mean(axis=1), tags], axis=1)
    elif model.arch_id == 2:
        h_last, lstm_caches = nn.lstm_forward(model.lstm(), sentences)
        feats = np.concatenate([h_last, tags], axis=1)
    else:
        n = sentences.shape[1]
        tag_rows = np.repeat(tags[:, None, :], n, axis=1)
        inputs = np.concatenate([tag_rows, sentences], axis=2)  # step input [T ; S_t]
        h_last, lstm_caches = nn.lstm_forward(model.lstm(), inputs)
        feats = h_last

    logits = (feats @ model.params["w"].T + model.params["b"])[:, 0]
    p = nn.sigmoid(logits)
    cache = ForwardCache(arch_id=model.arch_id, version=model.version, p=p,
                         feats=feats, lstm_caches=lstm_caches,
                         n_tokens=sentences.shape[1], batched=True)
    return p, cache


def forward(model: RelatednessModel, sentence: np.ndarray, tag: np.ndarray):
    """Score one (sentence matrix, tag vector) pair -> (probability, cache)."""
    sentence = np.asarray(sentence, dtype=np.float64)
    tag = np.asarray(tag, dtype=np.float64)
    if sentence.ndim != 2:
        raise ShapeMismatch(f"sentence matrix must be 2-D, got {sentence.shape}")
    p, cache = forward_batch(model, sentence[None], tag[None])
    cache.batched = False
    return float(p[0]), cache


def backward_batch(model: RelatednessModel, cache: ForwardCache, y: np.ndarray):
    """Gradients of summed BCE loss over the batch.

    Returns (grads, grad_sentences) where ``grads`` maps parameter block
    names to arrays (summed over the batch, same shapes as the blocks) and
    ``grad_sentences`` is (B, N, d), the gradient with respect to each
    sentence embedding row (tag gradients are never returned: the tag side
    stays in the pretrained space).
    """
    if cache.version != model.version:
        raise StaleCache(f"cache version {cache.version} != model version {model.version}")
    y = np.asarray(y, dtype=np.float64)
    p = cache.p
    if y.shape != p.shape:
        raise ShapeMismatch(f"labels shape {y.shape} != predictions {p.shape}")

    dz = p - y  # d(BCE)/d(logit) through the sigmoid
    d = model.embed_dim
    w = model.params["w"]
    grads: dict[str, np.ndarray] = {
        "w": dz[None, :] @ cache.feats,
        "b": np.array([dz.sum()]),
    }
    dfeats = dz[:, None] * w[0][None, :]

    if model.arch_id == 1:
        dmean = dfeats[:, :d]
        grad_sent = np.repeat(dmean[:, None, :] / cache.n_tokens, cache.n_tokens, axis=1)
    elif model.arch_id == 2:
        hdim = model.hidden_dim
        lstm_grads, grad_sent = nn.lstm_backward(cache.lstm_caches, dfeats[:, :hdim])
        grads.update(lstm_wx=lstm_grads.wx, lstm_wh=lstm_grads.wh, lstm_b=lstm_grads.b)
    else:
        lstm_grads, dinputs = nn.lstm_backward(cache.lstm_caches, dfeats)
        grads.update(lstm_wx=lstm_grads.wx, lstm_wh=lstm_grads.wh, lstm_b=lstm_grads.b)
        grad_sent = dinputs[:, :, d:]  # step input was [T ; S_t]

    return grads, grad_sent


def backward(model: RelatednessModel, cache: ForwardCache, y: float):
    """Single-pair gradients of bce_loss(forward(...), y).

    Returns a dict of parameter-block gradients plus key "sentence" with
    the (N, d) gradient of the sentence rows.
    """
    grads, grad_sent = backward_batch(model, cache, np.array([float(y)]))
    grads["sentence"] = grad_sent[0]
    return grads


def gradient_check(model: RelatednessModel, n_tokens: int = 6, seed: int = 0,
                   step: float = 1e-5, corrupt_block: str | None = None) -> dict[str, float]:
    """Compare analytic gradients against central finite differences.

    Builds one random (sentence, tag, label) instance and returns the max
    relative error per parameter block.  ``corrupt_block`` perturbs that
    block's analytic gradient (negative-control hook for tests).
    """
    rng = np.random.default_rng(seed)
    sentence = rng.standard_normal((n_tokens, model.embed_dim))
    tag = rng.standard_normal(model.embed_dim)
    y = float(rng.integers(0, 2))

    p, cache = forward(model, sentence, tag)
    grads = backward(model, cache, y)
    if corrupt_block is not None:
        grads[corrupt_block] = grads[corrupt_block] + 0.5

    def loss() -> float:
        prob, _ = forward(model, sentence, tag)
        return nn.bce_loss(prob, y)

    errors = {}
    for name in model.block_order():
        numeric = nn.finite_difference(loss, model.params[name], step=step)
        errors[name] = nn.relative_error(grads[name], numeric)
    return errors


def save_checkpoint(model: RelatednessModel, sink) -> None:
    """Serialize the model: magic, header ints, then float64-LE blocks
    in the architecture's fixed block order."""
    sink.write(_HEADER.pack(CHECKPOINT_MAGIC, model.arch_id, model.embed_dim,
                            model.hidden_dim, model.seed))
    for _, block in model.param_items():
        sink.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def load_checkpoint(source) -> RelatednessModel:
    """Inverse of :func:`save_checkpoint`; round trips are bit-exact.

    Raises:
        CorruptCheckpoint: bad magic, bad header fields, truncated or
            oversized payload, or non-finite parameters.
    """
    data = source.read()
    if len(data) < _HEADER.size:
        raise CorruptCheckpoint("truncated header")
    magic, arch_id, embed_dim, hidden_dim, seed = _HEADER.unpack_from(data)
    if magic != CHECKPOINT_MAGIC:
        raise CorruptCheckpoint(f"bad magic {magic!r}")
    if arch_id not in (1, 2, 3) or embed_dim < 1 or hidden_dim < 0:
        raise CorruptCheckpoint(f"bad header fields arch={arch_id} d={embed_dim} H={hidden_dim}")
    if arch_id != 1 and hidden_dim < 1:
        raise CorruptCheckpoint(f"arch {arch_id} needs a positive hidden dim")

    shapes = _block_shapes(arch_id, embed_dim, hidden_dim)
    params = {}
    offset = _HEADER.size
    for name, shape in shapes.items():
        count = int(np.prod(shape))
        nbytes = 8 * count
        if offset + nbytes > len(data):
            raise CorruptCheckpoint(f"truncated block {name!r}")
        block = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape)
        params[name] = block.copy()
        offset += nbytes
    if offset != len(data):
        raise CorruptCheckpoint(f"{len(data) - offset} trailing bytes")
    for name, block in params.items():
        if not np.all(np.isfinite(block)):
            raise CorruptCheckpoint(f"non-finite values in block {name!r}")
    return RelatednessModel(arch_id, embed_dim, hidden_dim or 1, params, seed=seed)


def save_checkpoint_file(model: RelatednessModel, path) -> None:
    with open(path, "wb") as f:
        save_checkpoint(model, f)


def load_checkpoint_file(path) -> RelatednessModel:
    with open(path, "rb") as f:
        return load_checkpoint(f)
