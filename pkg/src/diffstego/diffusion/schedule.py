"""Noise schedule and the closed-form forward / reverse maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import BadSteps, DegenerateAlpha, ShapeMismatch, StepOutOfRange

SCHEDULE_FAMILIES = {"linear": 0, "cosine": 1}
ALPHA_BAR_FLOOR = 1e-4
DEGENERATE_ALPHA = 1e-12


@dataclass(frozen=True)
class NoiseSchedule:
    """Per-step ``alpha`` and cumulative ``alpha_bar``, both indexed 0..T.

    Index 0 is the clean state: ``alpha[0] == alpha_bar[0] == 1``.
    """

    T: int
    family: str
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def check_step(self, t: int) -> int:
        if not 1 <= t <= self.T:
            raise StepOutOfRange(f"step {t} outside [1, {self.T}]")
        return t


def _target_alpha_bar(T: int, family: str, floor: float) -> list[float]:
    if family == "linear":
        return [1.0 - (1.0 - floor) * t / T for t in range(T + 1)]
    if family == "cosine":
        s = 0.008
        f0 = math.cos(s / (1 + s) * math.pi / 2) ** 2
        raw = [math.cos((t / T + s) / (1 + s) * math.pi / 2) ** 2 / f0 for t in range(T + 1)]
        raw[-1] = 0.0
        return [floor + (1.0 - floor) * v if t else 1.0 for t, v in enumerate(raw)]
    raise BadSteps(f"unknown schedule family {family!r}")


def build_schedule(T: int, kind: str = "linear", floor: float = ALPHA_BAR_FLOOR) -> NoiseSchedule:
    if T < 1:
        raise BadSteps(f"need at least one step, got T={T}")
    target = _target_alpha_bar(T, kind, floor)
    alpha = [1.0]
    for t in range(1, T + 1):
        # running minimum keeps alpha non-increasing for families that overshoot
        alpha.append(min(target[t] / target[t - 1], alpha[-1]))
    # accumulate sequentially so alpha_bar[t] == alpha_bar[t-1] * alpha[t] holds exactly
    alpha_bar = [1.0]
    for t in range(1, T + 1):
        alpha_bar.append(alpha_bar[-1] * alpha[t])
    return NoiseSchedule(T, kind, np.array(alpha), np.array(alpha_bar))


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if np.shape(a) != np.shape(b):
        raise ShapeMismatch(f"shapes {np.shape(a)} and {np.shape(b)} differ")


def forward_noise(x_prev: np.ndarray, t: int, sched: NoiseSchedule, eps: np.ndarray) -> np.ndarray:
    """One noising step from ``t-1`` to ``t``."""
    _same_shape(x_prev, eps)
    a = sched.alpha[sched.check_step(t)]
    return math.sqrt(a) * x_prev + math.sqrt(1.0 - a) * eps


def forward_noise_closed(x0: np.ndarray, t: int, sched: NoiseSchedule, eps: np.ndarray) -> np.ndarray:
    """Jump straight from the clean latent to step ``t``."""
    _same_shape(x0, eps)
    ab = sched.alpha_bar[sched.check_step(t)]
    return math.sqrt(ab) * x0 + math.sqrt(1.0 - ab) * eps


def denoise_x0(x_t: np.ndarray, t: int, eps_hat: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    """Estimate the clean latent from ``x_t`` and predicted noise."""
    _same_shape(x_t, eps_hat)
    ab = sched.alpha_bar[sched.check_step(t)]
    if ab < DEGENERATE_ALPHA:
        raise DegenerateAlpha(f"alpha_bar[{t}] = {ab:g} is too small to invert")
    return (x_t - math.sqrt(1.0 - ab) * eps_hat) / math.sqrt(ab)


def skip_steps(T: int, n_steps: int) -> list[int]:
    """Evenly strided, strictly decreasing timesteps from ``T`` down toward 1."""
    if not 1 <= n_steps <= T:
        raise BadSteps(f"cannot take {n_steps} steps out of T={T}")
    points = np.linspace(T, 0, n_steps + 1)[:-1]
    steps = sorted({int(round(p)) for p in points}, reverse=True)
    return [s for s in steps if s >= 1]
