"""Replacement attacks and evaluation metrics (capacity, KLD, ACER, timing)."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bits import SegmentSpec
from .errors import BadCounts, DegenerateVariance, EmptySet, NotEnoughPositions, SentenceError
from .prompts import PROMPT_LEN

MIN_SIGMA = 1e-9


@dataclass(frozen=True)
class AttackConfig:
    n: int
    protect_prompt: bool = True
    rounds: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n < 0 or self.rounds < 1:
            raise BadCounts(f"need n >= 0 and rounds >= 1, got n={self.n}, rounds={self.rounds}")

    def rng(self, round_index: int) -> np.random.Generator:
        """Independent generator for one attack round."""
        return np.random.default_rng([self.seed, self.n, int(self.protect_prompt), round_index])


def random_replace(sentence: Sequence[str], cfg: AttackConfig, rng: np.random.Generator,
                   vocab: Sequence[str], saturate: bool = False) -> list[str]:
    """Replace ``cfg.n`` distinct positions with different random vocabulary tokens.

    With ``saturate`` an ``n`` larger than the attackable positions replaces all
    of them instead of raising.
    """
    first = PROMPT_LEN if cfg.protect_prompt else 0
    positions = np.arange(first, len(sentence))
    n = cfg.n
    if n > len(positions):
        if not saturate:
            raise NotEnoughPositions(f"{n} replacements requested, {len(positions)} positions open")
        n = len(positions)
    out = list(sentence)
    if n == 0:
        return out
    index = {tok: i for i, tok in enumerate(vocab)}
    for pos in rng.choice(positions, size=n, replace=False):
        orig = index.get(out[pos], -1)
        if orig < 0:
            new = int(rng.integers(len(vocab)))
        else:
            new = int(rng.integers(len(vocab) - 1))
            new += new >= orig
        out[pos] = vocab[new]
    return out


def acer(correct_counts: Sequence[int], sentences_per_round: int) -> float:
    """Average sentence correct-extraction rate over attack rounds."""
    if not correct_counts or sentences_per_round <= 0:
        raise BadCounts("need at least one round and a positive sentence count")
    if any(c < 0 or c > sentences_per_round for c in correct_counts):
        raise BadCounts(f"counts must lie in [0, {sentences_per_round}]")
    return sum(correct_counts) / (sentences_per_round * len(correct_counts))


def bpw(sentences: Sequence[Sequence[str]], spec: SegmentSpec) -> float:
    """Hidden bits per transmitted token, prompt tokens included."""
    if not sentences:
        raise EmptySet("no stego sentences")
    mean_len = sum(len(s) for s in sentences) / len(sentences)
    return (spec.m_b + spec.m_p) / mean_len


def _fit(vecs) -> tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(vecs, dtype=np.float64)
    if arr.ndim != 2 or len(arr) == 0:
        raise EmptySet("need a nonempty 2-D set of vectors")
    return arr.mean(axis=0), arr.std(axis=0)


def kld(cover_vecs, stego_vecs, variant: str = "standard") -> float:
    """Sum over dimensions of the KL divergence between per-dimension Gaussian fits.

    ``standard`` is the textbook KL(cover || stego).  ``paper`` keeps the
    published expression, whose quadratic term divides by the stego standard
    deviation rather than its square.  Dimensions constant and equal in both
    sets carry no information and are skipped.
    """
    mu_c, sd_c = _fit(cover_vecs)
    mu_s, sd_s = _fit(stego_vecs)
    if mu_c.shape != mu_s.shape:
        raise EmptySet(f"dimension mismatch: {mu_c.shape} vs {mu_s.shape}")
    flat_c, flat_s = sd_c < MIN_SIGMA, sd_s < MIN_SIGMA
    skip = flat_c & flat_s & np.isclose(mu_c, mu_s, rtol=0.0, atol=MIN_SIGMA)
    if np.any((flat_c | flat_s) & ~skip):
        raise DegenerateVariance("a dimension has (near) zero standard deviation")
    keep = ~skip
    mu_c, sd_c, mu_s, sd_s = mu_c[keep], sd_c[keep], mu_s[keep], sd_s[keep]
    quad = sd_c ** 2 + (mu_c - mu_s) ** 2
    if variant == "standard":
        terms = np.log(sd_s / sd_c) + quad / (2.0 * sd_s ** 2) - 0.5
    elif variant == "paper":
        terms = np.log(sd_s / sd_c) + quad / (2.0 * sd_s) - 0.5
    else:
        raise ValueError(f"unknown KLD variant {variant!r}")
    return float(terms.sum())


def timing(run: Callable[[], object], count: int) -> float:
    """Mean wall-clock seconds per item when ``run`` produces ``count`` items."""
    if count < 1:
        raise BadCounts("count must be positive")
    start = time.perf_counter()
    run()
    return (time.perf_counter() - start) / count


def attack_round_counts(codec, sentences: Sequence[Sequence[str]], truth: Sequence[tuple[int, int]],
                        cfg: AttackConfig, saturate: bool = True) -> list[int]:
    """CN_i for each round: sentences whose (prompt, candidate) pair survives the attack."""
    vocab = codec.session.model.vocab
    counts = []
    for r in range(cfg.rounds):
        rng = cfg.rng(r)
        attacked = [random_replace(s, cfg, rng, vocab, saturate) for s in sentences]
        report = codec.extract_report(attacked)
        counts.append(sum(
            1 for got, want in zip(report, truth)
            if not isinstance(got, SentenceError) and tuple(got) == tuple(want)
        ))
    return counts


@dataclass
class MetricReport:
    bpw: float | None = None
    kld_standard: float | None = None
    kld_paper: float | None = None
    acer: dict[str, float] = field(default_factory=dict)
    counts: dict[str, list[int]] = field(default_factory=dict)
    mean_seconds_per_sentence: float | None = None

    def lines(self, with_timing: bool = True) -> list[str]:
        out = []
        for key in ("bpw", "kld_standard", "kld_paper"):
            value = getattr(self, key)
            if value is not None:
                out.append(f"{key}={value:.6f}")
        for label in sorted(self.acer):
            out.append(f"acer_{label}={self.acer[label]:.6f}")
        if self.counts:
            out.append("# per-round correct counts")
            for label in sorted(self.counts):
                out.append(f"cn_{label}=" + ",".join(str(c) for c in self.counts[label]))
        if with_timing and self.mean_seconds_per_sentence is not None:
            out.append(f"mean_seconds_per_sentence={self.mean_seconds_per_sentence:.3f}")
        return out

    def to_text(self, with_timing: bool = True) -> str:
        return "\n".join(self.lines(with_timing)) + "\n"


def parse_report(text: str) -> dict[str, str]:
    values = {}
    for line in text.splitlines():
        if line and not line.startswith("#") and "=" in line:
            key, value = line.split("=", 1)
            values[key] = value
    return values


def regime_label(n: int, protect_prompt: bool) -> str:
    return f"n{n}_{'protected' if protect_prompt else 'open'}"


def mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)
