"""Hiding bits in generated sentences and recovering them.

Each segment of the (padded) bitstream is split into a prompt block and a
batch block.  The prompt block picks a table prompt, the session seed picks
the sentence length, the model turns prompt + length + the shared latent
batch into ``k`` candidates, and the batch block picks one of them.  The
receiver repeats the generation and finds the candidate most similar to each
received sentence.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bits import SegmentSpec, bits_to_index, index_to_bits, is_power_of_two, segment
from .diffusion.model import DiffusionModel
from .diffusion.sampling import sample_batch_ids
from .diffusion.schedule import skip_steps
from .errors import (
    BadRange,
    CollisionDetected,
    LengthMismatch,
    ModelMissing,
    SentenceError,
    SessionFileError,
    TableMismatch,
)
from .prng import CounterStream
from .prompts import PROMPT_LEN, ConditionalPrompt, PromptTable, filter_prompts, read_table

DEFAULT_INFERENCE_STEPS = 50


def sample_lengths(seed: int, count: int, l_min: int, l_max: int, start: int = 0) -> list[int]:
    """Per-segment lengths from the session's ``len`` stream."""
    if count < 0 or l_min > l_max or l_min < PROMPT_LEN + 1:
        raise BadRange(f"bad length request: count={count}, range=[{l_min}, {l_max}]")
    if count == 0:
        return []
    return CounterStream(seed, "len").integers(l_min, l_max, start, count).tolist()


def sample_latents(seed: int, k: int, L: int, d: int) -> np.ndarray:
    """Shared Gaussian batch from the ``lat`` stream, filled in (row, position, dim) order."""
    if min(k, L, d) < 1:
        raise BadRange(f"latent dimensions must be positive, got {(k, L, d)}")
    return CounterStream(seed, "lat").normal(0, k * L * d).reshape(k, L, d)


def similarity(s, c) -> float:
    """Fraction of aligned positions holding the same token."""
    longest = max(len(s), len(c))
    if longest == 0:
        return 1.0
    return sum(a == b for a, b in zip(s, c)) / longest


@dataclass
class SessionConfig:
    """Everything sender and receiver must share."""

    seed: int
    k: int
    table: PromptTable
    model: DiffusionModel
    l_min: int = 5
    l_max: int = 25
    steps: list[int] | None = None
    similarity: str = "positional"
    workers: int = 1

    def __post_init__(self):
        if self.model is None:
            raise ModelMissing("session has no model")
        if not is_power_of_two(self.k) or self.k < 2:
            raise TableMismatch(f"batch size k={self.k} must be a power of two >= 2")
        if not 5 <= self.l_min <= self.l_max:
            raise BadRange(f"need 5 <= l_min <= l_max, got [{self.l_min}, {self.l_max}]")
        if self.l_max > self.model.L:
            raise BadRange(f"l_max={self.l_max} exceeds model capacity L={self.model.L}")
        if self.steps is None:
            self.steps = skip_steps(self.model.T, min(DEFAULT_INFERENCE_STEPS, self.model.T))
        if self.similarity not in ("positional", "cosine"):
            raise BadRange(f"unknown similarity {self.similarity!r}")

    @property
    def spec(self) -> SegmentSpec:
        return SegmentSpec(self.table.capacity, self.k)


@dataclass
class StegoSet:
    sentences: list[list[str]]
    pad_bits: int = 0
    indices: list[tuple[int, int]] = field(default_factory=list)


class Codec:
    """Session-bound hider/extractor with a cache of generated batches.

    A batch depends only on (prompt index, length) once the session is fixed,
    so both directions reuse it across segments.
    """

    def __init__(self, session: SessionConfig):
        self.session = session
        m = session.model
        self.latents = sample_latents(session.seed, session.k, m.L, m.d)
        self._batches: dict[tuple[int, int], np.ndarray] = {}
        self._lock = threading.Lock()

    def lengths(self, count: int) -> list[int]:
        s = self.session
        return sample_lengths(s.seed, count, s.l_min, s.l_max)

    def batch(self, prompt_index: int, length: int) -> np.ndarray:
        """Candidate token ids, shape (k, length)."""
        key = (prompt_index, length)
        with self._lock:
            cached = self._batches.get(key)
        if cached is not None:
            return cached
        s = self.session
        cond = ConditionalPrompt(s.table.entry(prompt_index), length)
        ids = sample_batch_ids(s.model, cond, self.latents, s.steps, s.workers)
        ids.setflags(write=False)
        with self._lock:
            self._batches.setdefault(key, ids)
        return ids

    def candidates(self, prompt_index: int, length: int) -> list[list[str]]:
        return [self.session.model.tokens(r) for r in self.batch(prompt_index, length)]

    # hiding

    def hide(self, bits: str) -> StegoSet:
        segments, pad_bits = segment(bits, self.session.spec)
        lengths = self.lengths(len(segments))
        out = StegoSet([], pad_bits)
        for seg, length in zip(segments, lengths):
            p = bits_to_index(seg.m_p_block)
            b = bits_to_index(seg.m_b_block)
            batch = self.batch(p, length)
            first = int(np.flatnonzero((batch == batch[b]).all(axis=1))[0])
            if first != b:
                raise CollisionDetected(seg.index, b, first)
            out.sentences.append(self.session.model.tokens(batch[b]))
            out.indices.append((p, b))
        return out

    # extraction

    def _scores(self, sentence: list[str], batch: np.ndarray) -> np.ndarray:
        model = self.session.model
        if self.session.similarity == "cosine":
            ids = model.ids(sentence)
            s_vec = model.embedding[ids].ravel()
            c_vecs = model.embedding[batch].reshape(len(batch), -1)
            norms = np.linalg.norm(c_vecs, axis=1) * np.linalg.norm(s_vec)
            return (c_vecs @ s_vec) / np.where(norms == 0, 1.0, norms)
        ids = np.array([model.token_index.get(t, -1) for t in sentence], dtype=np.int64)
        return (batch == ids[None, :]).sum(axis=1) / max(len(sentence), batch.shape[1])

    def extract_one(self, sentence: list[str], length: int) -> tuple[int, int]:
        """(prompt index, candidate index) for one received sentence."""
        if len(sentence) != length:
            raise LengthMismatch(f"sentence has {len(sentence)} tokens, seed says {length}")
        p = self.session.table.match(sentence[:PROMPT_LEN])
        scores = self._scores(sentence, self.batch(p, length))
        return p, int(np.argmax(scores))

    def extract_report(self, sentences: list[list[str]]) -> list[tuple[int, int] | SentenceError]:
        lengths = self.lengths(len(sentences))
        report: list[tuple[int, int] | SentenceError] = []
        for i, (sentence, length) in enumerate(zip(sentences, lengths)):
            try:
                report.append(self.extract_one(sentence, length))
            except SentenceError as exc:
                report.append(exc)
            except Exception as exc:  # noqa: BLE001 - every failure is reported per sentence
                report.append(SentenceError(i, exc))
        return report

    def indices_to_bits(self, pairs: list[tuple[int, int]]) -> str:
        spec = self.session.spec
        return "".join(index_to_bits(p, spec.m_p) + index_to_bits(b, spec.m_b) for p, b in pairs)

    def extract(self, sentences: list[list[str]]) -> str:
        """Bits of all sentences, padding included; raises on the first bad sentence."""
        pairs = []
        for item in self.extract_report(sentences):
            if isinstance(item, SentenceError):
                raise item
            pairs.append(item)
        return self.indices_to_bits(pairs)

    def audit(self, lengths=None) -> list[tuple[int, int, int, int]]:
        """Every (prompt, length, index, duplicate_of) collision in the session."""
        s = self.session
        lengths = range(s.l_min, s.l_max + 1) if lengths is None else lengths
        found = []
        for p in range(s.table.capacity):
            for length in lengths:
                batch = self.batch(p, length)
                _, first, inverse = np.unique(batch, axis=0, return_index=True, return_inverse=True)
                owner = first[inverse.ravel()]
                for j in np.flatnonzero(owner != np.arange(len(batch))):
                    found.append((p, length, int(j), int(owner[j])))
        return found


def hide(bits: str, session: SessionConfig) -> StegoSet:
    return Codec(session).hide(bits)


def extract(sentences: list[list[str]], session: SessionConfig) -> str:
    return Codec(session).extract(sentences)


def filter_table(model: DiffusionModel, table: PromptTable, seed: int, k: int, trials: int = 1,
                 steps=None, length: int | None = None) -> PromptTable:
    """Prompt filtration driven by the model's own batch generation."""
    steps = steps or skip_steps(model.T, min(DEFAULT_INFERENCE_STEPS, model.T))
    length = length or model.L

    def generate(cond: ConditionalPrompt, trial: int):
        latents = CounterStream(seed, f"filter{trial}").normal(0, k * model.L * model.d)
        ids = sample_batch_ids(model, cond, latents.reshape(k, model.L, model.d), steps)
        return [model.tokens(r) for r in ids]

    return filter_prompts(table, generate, trials, length, model.vocab)


# session files

_SESSION_KEYS = {"seed", "k", "l_min", "l_max", "steps", "table", "model", "similarity"}


def parse_session_file(path: str | Path) -> dict[str, str]:
    """key=value lines; ``#`` starts a comment.  Relative paths resolve against the file."""
    path = Path(path)
    values: dict[str, str] = {}
    for n, raw in enumerate(path.read_text("utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SessionFileError(f"{path}:{n}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SESSION_KEYS:
            raise SessionFileError(f"{path}:{n}: unknown key {key!r}")
        values[key] = value
    for key in ("table", "model"):
        if key in values and not Path(values[key]).is_absolute():
            values[key] = str(path.parent / values[key])
    return values


def parse_steps(text: str, T: int) -> list[int]:
    """A count like ``50`` means evenly strided steps; a comma list is taken literally."""
    if "," in text:
        return [int(s) for s in text.split(",") if s.strip()]
    return skip_steps(T, int(text))


def write_session_file(path: str | Path, values: dict) -> None:
    lines = [f"{k}={values[k]}" for k in ("seed", "k", "l_min", "l_max", "steps", "table", "model",
                                          "similarity") if values.get(k) is not None]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_session(seed: int, k: int, table_path, model_path, l_min: int = 5, l_max: int = 25,
                 steps: str | None = None, similarity: str = "positional",
                 workers: int = 1) -> SessionConfig:
    model = DiffusionModel.load(model_path)
    table = read_table(table_path, model.vocab)
    return SessionConfig(
        seed=seed, k=k, table=table, model=model, l_min=l_min, l_max=l_max,
        steps=parse_steps(steps, model.T) if steps else None,
        similarity=similarity, workers=workers,
    )
