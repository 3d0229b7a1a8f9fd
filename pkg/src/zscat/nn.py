"""Differentiable numeric primitives: dense layer, LSTM cell, sigmoid,
binary cross-entropy, and the Adam optimizer, all with exact analytic
gradients in double precision.

The LSTM functions accept either a single sample (``x_t`` of shape (D,))
or a batch (``(B, D)``); all shapes downstream follow the input.  Gate
pre-activations are packed in the fixed order i, f, g, o (input gate,
forget gate, tanh candidate, output gate) — this order is part of the
checkpoint contract and must not change.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ShapeMismatch

BCE_EPS = 1e-7

ADAM_LR = 0.001
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


def sigmoid(z):
    """Numerically stable logistic function, elementwise on arrays.

    Uses the exp(-|z|) branch form so large negative inputs underflow to 0
    gracefully instead of overflowing.
    """
    z_arr = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z_arr)
    pos = z_arr >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z_arr[pos]))
    ez = np.exp(z_arr[~pos])
    out[~pos] = ez / (1.0 + ez)
    if np.isscalar(z) or getattr(z, "ndim", 0) == 0:
        return float(out)
    return out


def bce_loss(p, y):
    """Binary cross-entropy -[y ln p + (1-y) ln(1-p)].

    ``p`` is clamped to [BCE_EPS, 1-BCE_EPS] before the logs, so the loss
    is finite for saturated predictions.  Works elementwise on arrays.
    """
    p_arr = np.clip(np.asarray(p, dtype=np.float64), BCE_EPS, 1.0 - BCE_EPS)
    y_arr = np.asarray(y, dtype=np.float64)
    loss = -(y_arr * np.log(p_arr) + (1.0 - y_arr) * np.log1p(-p_arr))
    if np.isscalar(p) or getattr(p, "ndim", 0) == 0:
        return float(loss)
    return loss


def dense_forward(w: np.ndarray, b: np.ndarray, x: np.ndarray):
    """Affine map y = Wx + b.  Returns (y, cache) for the backward pass."""
    w = np.asarray(w, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if w.ndim != 2 or x.ndim != 1 or b.ndim != 1:
        raise ShapeMismatch(f"dense_forward wants 2-D W, 1-D b and x, got {w.shape}, {b.shape}, {x.shape}")
    if w.shape[1] != x.shape[0] or w.shape[0] != b.shape[0]:
        raise ShapeMismatch(f"dense_forward shapes W{w.shape} b{b.shape} x{x.shape}")
    return w @ x + b, (w, x)


def dense_backward(cache, grad_out: np.ndarray):
    """Gradients of the affine map: (dW, db, dx) = (g xᵀ, g, Wᵀ g)."""
    w, x = cache
    g = np.asarray(grad_out, dtype=np.float64)
    if g.shape != (w.shape[0],):
        raise ShapeMismatch(f"grad_out shape {g.shape} != ({w.shape[0]},)")
    return np.outer(g, x), g.copy(), w.T @ g


@dataclass
class LstmParams:
    """LSTM cell weights.  wx: (4H, D), wh: (4H, H), b: (4H,), gates i,f,g,o."""

    wx: np.ndarray
    wh: np.ndarray
    b: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.wh.shape[1]

    @property
    def input_dim(self) -> int:
        return self.wx.shape[1]

    @classmethod
    def create(cls, rng: np.random.Generator, input_dim: int, hidden_dim: int) -> "LstmParams":
        """Glorot-uniform weights, zero biases except forget-gate bias 1.0."""
        wx = glorot_uniform(rng, 4 * hidden_dim, input_dim)
        wh = glorot_uniform(rng, 4 * hidden_dim, hidden_dim)
        b = np.zeros(4 * hidden_dim, dtype=np.float64)
        b[hidden_dim:2 * hidden_dim] = 1.0
        return cls(wx=wx, wh=wh, b=b)


class LstmState(NamedTuple):
    h: np.ndarray
    c: np.ndarray


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    r = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-r, r, size=(rows, cols))


def lstm_zero_state(params: LstmParams, leading_shape: tuple = ()) -> LstmState:
    h = np.zeros(leading_shape + (params.hidden_dim,), dtype=np.float64)
    return LstmState(h=h, c=h.copy())


def lstm_step(params: LstmParams, x_t: np.ndarray, prev: LstmState):
    """One LSTM cell step.

    i, f, o are sigmoid gates, g the tanh candidate; c = f*c_prev + i*g,
    h = o*tanh(c).  ``x_t`` may carry a leading batch axis.

    Returns (LstmState, cache) where the cache feeds :func:`lstm_backward`.
    """
    x_t = np.asarray(x_t, dtype=np.float64)
    hdim = params.hidden_dim
    if x_t.shape[-1] != params.input_dim:
        raise ShapeMismatch(f"x_t last dim {x_t.shape[-1]} != input dim {params.input_dim}")
    if prev.h.shape != x_t.shape[:-1] + (hdim,):
        raise ShapeMismatch(f"state shape {prev.h.shape} incompatible with input {x_t.shape}")

    a = x_t @ params.wx.T + prev.h @ params.wh.T + params.b
    i = sigmoid(a[..., :hdim])
    f = sigmoid(a[..., hdim:2 * hdim])
    g = np.tanh(a[..., 2 * hdim:3 * hdim])
    o = sigmoid(a[..., 3 * hdim:])
    c = f * prev.c + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    cache = (params, x_t, prev.h, prev.c, i, f, g, o, tanh_c)
    return LstmState(h=h, c=c), cache


def lstm_forward(params: LstmParams, xs: np.ndarray):
    """Run the cell over a sequence; xs is (N, D) or (B, N, D).

    Returns (last hidden state, list of per-step caches).
    """
    xs = np.asarray(xs, dtype=np.float64)
    state = lstm_zero_state(params, xs.shape[:-2])
    caches = []
    for t in range(xs.shape[-2]):
        state, cache = lstm_step(params, xs[..., t, :], state)
        caches.append(cache)
    return state.h, caches


@dataclass
class LstmGrads:
    wx: np.ndarray
    wh: np.ndarray
    b: np.ndarray


def lstm_backward(caches: list, grad_h_last: np.ndarray):
    """Backpropagation through time from the last hidden state only.

    Returns (LstmGrads, grad_inputs) with grad_inputs shaped like the
    forward input sequence.  For batched caches the parameter gradients
    are summed over the batch.
    """
    if not caches:
        raise ShapeMismatch("lstm_backward needs at least one cached step")
    params = caches[0][0]
    hdim = params.hidden_dim

    dwx = np.zeros_like(params.wx)
    dwh = np.zeros_like(params.wh)
    db = np.zeros_like(params.b)
    dxs = []

    dh = np.asarray(grad_h_last, dtype=np.float64)
    if dh.shape[-1] != hdim:
        raise ShapeMismatch(f"grad_h_last last dim {dh.shape[-1]} != hidden dim {hdim}")
    dc = np.zeros_like(dh)

    for cache in reversed(caches):
        _, x_t, h_prev, c_prev, i, f, g, o, tanh_c = cache
        do = dh * tanh_c
        dc = dc + dh * o * (1.0 - tanh_c ** 2)
        di = dc * g
        df = dc * c_prev
        dg = dc * i
        # back through the gate nonlinearities to pre-activations
        da = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g ** 2),
            do * o * (1.0 - o),
        ], axis=-1)

        da2 = da.reshape(-1, 4 * hdim)
        dwx += da2.T @ x_t.reshape(-1, params.input_dim)
        dwh += da2.T @ h_prev.reshape(-1, hdim)
        db += da2.sum(axis=0)

        dxs.append(da @ params.wx)
        dh = da @ params.wh
        dc = dc * f

    dxs.reverse()
    grad_inputs = np.stack(dxs, axis=-2)
    return LstmGrads(wx=dwx, wh=dwh, b=db), grad_inputs


@dataclass
class AdamState:
    """Adam moment estimates for one flat parameter vector."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = ADAM_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def for_size(cls, n: int, lr: float = ADAM_LR, beta1: float = ADAM_BETA1,
                 beta2: float = ADAM_BETA2, eps: float = ADAM_EPS) -> "AdamState":
        return cls(m=np.zeros(n, dtype=np.float64), v=np.zeros(n, dtype=np.float64),
                   t=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_update(state: AdamState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """One Adam step; mutates ``state`` and returns the updated parameters.

    m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g²;  bias-corrected m̂, v̂;
    θ <- θ - lr m̂ / (sqrt(v̂) + eps).
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ShapeMismatch(
            f"adam shapes params{params.shape} grads{grads.shape} m{state.m.shape}")
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads ** 2
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


def finite_difference(f, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` with respect to ``x``.

    ``x`` is perturbed in place and restored; ``f`` takes no arguments and
    must read the live array.
    """
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + step
        f_plus = f()
        x[idx] = orig - step
        f_minus = f()
        x[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2.0 * step)
    return grad


def relative_error(a: np.ndarray, n: np.ndarray, floor: float = 1e-3) -> float:
    """Max elementwise |a-n| / max(|a|, |n|, floor).

    The floor keeps near-zero gradients from amplifying finite-difference
    noise into spurious relative errors.
    """
    a = np.asarray(a, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0
