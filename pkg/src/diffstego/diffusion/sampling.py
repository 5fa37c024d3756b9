"""Deterministic batch generation, rounding and sentence vectors."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import BadStepSequence, EmptySentence, ShapeMismatch
from ..prompts import PROMPT_LEN, ConditionalPrompt
from .model import DiffusionModel
from .network import DenoiserParams, forward
from .schedule import denoise_x0

# rows are always processed in blocks of this size so results do not depend
# on how many workers share the blocks
ROW_BLOCK = 16


def predict_noise(params: DenoiserParams, x_t: np.ndarray, t: int, length: int) -> np.ndarray:
    """Noise estimate for a latent batch sharing one timestep and target length."""
    B = x_t.shape[0]
    return forward(params, x_t, np.full(B, t), np.full(B, length))


def check_steps(steps, T: int) -> list[int]:
    steps = [int(s) for s in steps]
    if not steps:
        raise BadStepSequence("empty timestep list")
    if any(s < 1 or s > T for s in steps):
        raise BadStepSequence(f"timesteps must lie in [1, {T}]")
    if any(a <= b for a, b in zip(steps, steps[1:])):
        raise BadStepSequence("timesteps must be strictly decreasing")
    return steps


def round_tokens(latents: np.ndarray, emb: np.ndarray) -> np.ndarray:
    """Nearest embedding row per position; ties go to the lowest token index."""
    if latents.shape[-1] != emb.shape[1]:
        raise ShapeMismatch(f"latent width {latents.shape[-1]} != embedding width {emb.shape[1]}")
    flat = latents.reshape(-1, emb.shape[1])
    out = np.empty(len(flat), dtype=np.int64)
    for start in range(0, len(flat), 256):
        chunk = flat[start:start + 256]
        dist = ((chunk[:, None, :] - emb[None, :, :]) ** 2).sum(axis=2)
        out[start:start + 256] = dist.argmin(axis=1)
    return out.reshape(latents.shape[:-1])


def _denoise_rows(model: DiffusionModel, prompt_emb: np.ndarray, x: np.ndarray,
                  steps: list[int], length: int) -> np.ndarray:
    sched = model.schedule
    x = x.copy()
    x[:, :PROMPT_LEN] = prompt_emb
    x0 = x
    for i, t in enumerate(steps):
        eps_hat = predict_noise(model.params, x, t, length)
        x0 = denoise_x0(x, t, eps_hat, sched)
        x0[:, :PROMPT_LEN] = prompt_emb
        if i + 1 < len(steps):
            ab = sched.alpha_bar[steps[i + 1]]
            x = math.sqrt(ab) * x0 + math.sqrt(1.0 - ab) * eps_hat
            x[:, :PROMPT_LEN] = prompt_emb
    return x0


def sample_batch_ids(model: DiffusionModel, cond: ConditionalPrompt, latents: np.ndarray,
                     steps, workers: int = 1) -> np.ndarray:
    """Token ids of the k candidates, shape (k, cond.length).

    Every step predicts the clean latent and jumps to the next listed timestep
    along the deterministic path; prompt positions are held at the prompt
    embeddings throughout.
    """
    steps = check_steps(steps, model.T)
    if latents.ndim != 3 or latents.shape[2] != model.d or latents.shape[1] > model.L:
        raise ShapeMismatch(f"latents {latents.shape} do not fit model (L={model.L}, d={model.d})")
    if latents.shape[1] < cond.length:
        raise ShapeMismatch(f"latents hold {latents.shape[1]} positions, need {cond.length}")
    prompt_ids = model.ids(cond.prompt)
    prompt_emb = model.embedding[prompt_ids]
    blocks = [latents[s:s + ROW_BLOCK] for s in range(0, len(latents), ROW_BLOCK)]

    def run(block):
        x0 = _denoise_rows(model, prompt_emb, block, steps, cond.length)
        ids = round_tokens(x0[:, :cond.length], model.embedding)
        ids[:, :PROMPT_LEN] = prompt_ids
        return ids

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(b) for b in blocks]
    return np.concatenate(results, axis=0)


def sample_batch(model: DiffusionModel, cond: ConditionalPrompt, latents: np.ndarray,
                 steps, workers: int = 1) -> list[list[str]]:
    ids = sample_batch_ids(model, cond, latents, steps, workers)
    return [model.tokens(row) for row in ids]


def embed_sentence(tokens, model: DiffusionModel, out_dim: int = 100) -> np.ndarray:
    """Mean token embedding, truncated or zero-padded to ``out_dim``."""
    if len(tokens) == 0:
        raise EmptySentence("cannot embed an empty sentence")
    vec = model.embedding[model.ids(tokens)].mean(axis=0)
    if len(vec) >= out_dim:
        return vec[:out_dim]
    return np.concatenate([vec, np.zeros(out_dim - len(vec))])
