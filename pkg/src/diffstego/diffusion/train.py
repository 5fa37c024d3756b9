"""Training the denoiser on a token corpus (clean-latent reconstruction loss)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyCorpus, LengthOverflow, UnknownToken
from ..prompts import PROMPT_LEN
from .model import DiffusionModel, random_embedding
from .network import DenoiserParams, backward, forward, init_params
from .schedule import ALPHA_BAR_FLOOR, NoiseSchedule, build_schedule

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    d: int = 16
    hidden: int = 32
    time_dim: int = 16
    max_len: int = 25
    T: int = 1000
    schedule: str = "linear"
    epochs: int = 20
    batch_size: int = 128
    lr: float = 1e-3
    weight_decay: float = 0.0
    grad_clip: float = 1.0


def loss_and_grad(params: DenoiserParams, sched: NoiseSchedule, x0: np.ndarray, t: np.ndarray,
                  eps: np.ndarray, lengths: np.ndarray, prompt_len: int = PROMPT_LEN):
    """Mean squared error between the recovered and the true clean latents.

    Rows are noised to their own step ``t`` in closed form, prompt positions are
    then reset to the clean latent, and the loss covers the non-prompt
    positions inside each row's length.  Returns ``(loss, grads)``.
    """
    ab = sched.alpha_bar[t][:, None, None]
    sa, sn = np.sqrt(ab), np.sqrt(1.0 - ab)
    x_t = sa * x0 + sn * eps
    x_t[:, :prompt_len] = x0[:, :prompt_len]
    eps_hat, cache = forward(params, x_t, t, lengths, keep=True)
    x0_hat = (x_t - sn * eps_hat) / sa
    L = x0.shape[1]
    pos = np.arange(L)[None, :]
    mask = ((pos >= prompt_len) & (pos < lengths[:, None])).astype(np.float64)[:, :, None]
    count = mask.sum() * x0.shape[2]
    diff = (x0_hat - x0) * mask
    loss = float((diff * diff).sum() / count)
    dout = (2.0 / count) * diff * (-sn / sa)
    return loss, backward(params, cache, dout)


class AdamW:
    def __init__(self, params: DenoiserParams, lr: float, weight_decay: float = 0.0,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.lr, self.wd, self.betas, self.eps = lr, weight_decay, betas, eps
        self.m = {k: np.zeros_like(v) for k, v in params.weights.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.weights.items()}
        self.step_count = 0

    def step(self, params: DenoiserParams, grads: dict[str, np.ndarray]) -> None:
        self.step_count += 1
        b1, b2 = self.betas
        c1 = 1.0 - b1 ** self.step_count
        c2 = 1.0 - b2 ** self.step_count
        for k in sorted(grads):
            w = params.weights[k]
            self.m[k] = b1 * self.m[k] + (1.0 - b1) * grads[k]
            self.v[k] = b2 * self.v[k] + (1.0 - b2) * grads[k] ** 2
            w -= self.lr * self.wd * w
            w -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def _clip(grads: dict[str, np.ndarray], limit: float) -> None:
    if limit <= 0:
        return
    norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if norm > limit:
        for g in grads.values():
            g *= limit / norm


def encode_corpus(corpus, vocab: list[str], max_len: int) -> tuple[np.ndarray, np.ndarray]:
    index = {tok: i for i, tok in enumerate(vocab)}
    ids = np.zeros((len(corpus), max_len), dtype=np.int64)
    lengths = np.zeros(len(corpus), dtype=np.int64)
    for n, sentence in enumerate(corpus):
        if len(sentence) > max_len:
            raise LengthOverflow(f"sentence {n} has {len(sentence)} tokens, limit is {max_len}")
        if len(sentence) <= PROMPT_LEN:
            raise LengthOverflow(f"sentence {n} is too short to follow a {PROMPT_LEN}-token prompt")
        for j, tok in enumerate(sentence):
            if tok not in index:
                raise UnknownToken(f"sentence {n}: token {tok!r} not in vocabulary")
            ids[n, j] = index[tok]
        lengths[n] = len(sentence)
    return ids, lengths


def init_model(vocab: list[str], cfg: TrainConfig, seed: int) -> DiffusionModel:
    rng = np.random.default_rng(seed)
    emb = random_embedding(len(vocab), cfg.d, rng)
    params = init_params(cfg.d, cfg.hidden, cfg.max_len, cfg.time_dim, rng)
    return DiffusionModel(list(vocab), emb, build_schedule(cfg.T, cfg.schedule), params,
                          ALPHA_BAR_FLOOR)


def train(corpus, cfg: TrainConfig | None = None, seed: int = 0, vocab: list[str] | None = None,
          on_epoch=None) -> DiffusionModel:
    """Fit a fresh model; returns it with the per-epoch mean loss in ``model.losses``.

    Deterministic for a given seed: initialisation, shuffling, timesteps and
    noise all come from one seeded generator consumed in a fixed order.
    """
    cfg = cfg or TrainConfig()
    if not corpus:
        raise EmptyCorpus("no training sentences")
    if vocab is None:
        from ..corpus import build_vocab
        vocab = build_vocab(corpus)
    model = init_model(vocab, cfg, seed)
    ids, lengths = encode_corpus(corpus, model.vocab, cfg.max_len)
    rng = np.random.default_rng([seed, 1])
    opt = AdamW(model.params, cfg.lr, cfg.weight_decay)
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(ids))
        total, seen = 0.0, 0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            x0 = model.embedding[ids[batch]]
            t = rng.integers(1, cfg.T + 1, size=len(batch))
            eps = rng.standard_normal(x0.shape)
            loss, grads = loss_and_grad(model.params, model.schedule, x0, t, eps, lengths[batch])
            _clip(grads, cfg.grad_clip)
            opt.step(model.params, grads)
            total += loss * len(batch)
            seen += len(batch)
        model.losses.append(total / seen)
        log.info("epoch %d loss %.6f", epoch + 1, model.losses[-1])
        if on_epoch is not None:
            on_epoch(epoch + 1, model.losses[-1])
    return model
