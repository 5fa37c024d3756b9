"""Noise-prediction network with a hand-written backward pass.

Per position: a tanh layer over the latent, a learned position vector and a
sinusoidal time feature; then a second tanh layer that also sees the masked
mean of the first layer over the sentence (the only cross-position mixing);
then a linear head back to the latent width.  Positions at or beyond a row's
target length are excluded from the mean, which is how the length condition
enters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch

# fixed order used by the model file and by flattening helpers
PARAM_ORDER = ("W_in", "P", "W_t", "b1", "W_h", "W_g", "b2", "W_out", "b_out")


@dataclass
class DenoiserParams:
    weights: dict[str, np.ndarray]
    d: int = field(init=False)
    hidden: int = field(init=False)
    max_len: int = field(init=False)
    time_dim: int = field(init=False)

    def __post_init__(self):
        w = self.weights
        self.d, self.hidden = w["W_in"].shape
        self.max_len = w["P"].shape[0]
        self.time_dim = w["W_t"].shape[0]
        expected = {
            "W_in": (self.d, self.hidden),
            "P": (self.max_len, self.hidden),
            "W_t": (self.time_dim, self.hidden),
            "b1": (self.hidden,),
            "W_h": (self.hidden, self.hidden),
            "W_g": (self.hidden, self.hidden),
            "b2": (self.hidden,),
            "W_out": (self.hidden, self.d),
            "b_out": (self.d,),
        }
        for name in PARAM_ORDER:
            if w[name].shape != expected[name]:
                raise ShapeMismatch(f"{name} has shape {w[name].shape}, expected {expected[name]}")

    def copy(self) -> "DenoiserParams":
        return DenoiserParams({k: v.copy() for k, v in self.weights.items()})

    def flat(self) -> np.ndarray:
        return np.concatenate([self.weights[k].ravel() for k in PARAM_ORDER])

    @classmethod
    def from_flat(cls, like: "DenoiserParams", vec: np.ndarray) -> "DenoiserParams":
        out, pos = {}, 0
        for k in PARAM_ORDER:
            shape = like.weights[k].shape
            n = int(np.prod(shape))
            out[k] = np.asarray(vec[pos:pos + n], dtype=np.float64).reshape(shape)
            pos += n
        return cls(out)

    @property
    def size(self) -> int:
        return sum(v.size for v in self.weights.values())


def init_params(d: int, hidden: int, max_len: int, time_dim: int, rng: np.random.Generator,
                zero: bool = False) -> DenoiserParams:
    def dense(n_in, n_out):
        if zero:
            return np.zeros((n_in, n_out))
        return rng.standard_normal((n_in, n_out)) / np.sqrt(n_in)

    w = {
        "W_in": dense(d, hidden),
        "P": dense(max_len, hidden) * (0.0 if zero else np.sqrt(max_len) * 0.1),
        "W_t": dense(time_dim, hidden),
        "b1": np.zeros(hidden),
        "W_h": dense(hidden, hidden),
        "W_g": dense(hidden, hidden),
        "b2": np.zeros(hidden),
        "W_out": dense(hidden, d),
        "b_out": np.zeros(d),
    }
    return DenoiserParams(w)


def time_features(t: np.ndarray, dim: int) -> np.ndarray:
    """Sinusoidal features of integer timesteps, shape (len(t), dim)."""
    t = np.asarray(t, dtype=np.float64).reshape(-1, 1)
    half = (dim + 1) // 2
    freqs = np.exp(-np.log(10000.0) * np.arange(half) / max(half, 1))
    angles = t * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)], axis=1)[:, :dim]


def length_mask(lengths: np.ndarray, L: int) -> np.ndarray:
    return (np.arange(L)[None, :] < np.asarray(lengths)[:, None]).astype(np.float64)


def forward(params: DenoiserParams, x: np.ndarray, t: np.ndarray, lengths: np.ndarray,
            keep: bool = False):
    """Predicted noise for a (B, L, d) latent batch.

    ``t`` and ``lengths`` are per-row.  With ``keep`` the activations needed by
    :func:`backward` are returned alongside the output.
    """
    w = params.weights
    if x.ndim != 3 or x.shape[2] != params.d or x.shape[1] > params.max_len:
        raise ShapeMismatch(f"latent shape {x.shape} incompatible with d={params.d}, L<={params.max_len}")
    B, L, _ = x.shape
    te = time_features(t, params.time_dim)
    m = length_mask(lengths, L)
    cnt = np.maximum(m.sum(axis=1), 1.0)
    h1 = np.tanh(x @ w["W_in"] + w["P"][None, :L] + (te @ w["W_t"])[:, None, :] + w["b1"])
    g = np.einsum("bl,blh->bh", m, h1) / cnt[:, None]
    h2 = np.tanh(h1 @ w["W_h"] + (g @ w["W_g"])[:, None, :] + w["b2"])
    out = h2 @ w["W_out"] + w["b_out"]
    if keep:
        return out, (x, te, m, cnt, h1, g, h2)
    return out


def backward(params: DenoiserParams, cache, dout: np.ndarray) -> dict[str, np.ndarray]:
    w = params.weights
    x, te, m, cnt, h1, g, h2 = cache
    L = x.shape[1]
    grads = {}
    grads["W_out"] = np.einsum("blh,bld->hd", h2, dout)
    grads["b_out"] = dout.sum(axis=(0, 1))
    da2 = (dout @ w["W_out"].T) * (1.0 - h2 * h2)
    grads["W_h"] = np.einsum("blh,blk->hk", h1, da2)
    grads["b2"] = da2.sum(axis=(0, 1))
    dg_sum = da2.sum(axis=1)
    grads["W_g"] = g.T @ dg_sum
    dg = (dg_sum @ w["W_g"].T) / cnt[:, None]
    dh1 = da2 @ w["W_h"].T + m[:, :, None] * dg[:, None, :]
    da1 = dh1 * (1.0 - h1 * h1)
    grads["W_in"] = np.einsum("bld,blh->dh", x, da1)
    dP = np.zeros_like(w["P"])
    dP[:L] = da1.sum(axis=0)
    grads["P"] = dP
    grads["W_t"] = te.T @ da1.sum(axis=1)
    grads["b1"] = da1.sum(axis=(0, 1))
    return grads
