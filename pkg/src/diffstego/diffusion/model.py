"""The shared generator bundle and its binary file format.

File layout, all little-endian::

    b"GTSD"                  magic
    u16  version
    u32  V, d, L, T
    u8   schedule family id  (0 linear, 1 cosine)
    f64  alpha_bar floor
    u32  hidden width, time-feature width
    V x (u32 byte length, UTF-8 token)
    V*d  f64 embedding rows, row-major
    f64  denoiser weights, tensors in PARAM_ORDER, each row-major
    u64  checksum: BLAKE2b (8-byte digest) of every preceding byte
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ModelFormatError, ShapeMismatch, UnknownToken
from .network import PARAM_ORDER, DenoiserParams
from .schedule import SCHEDULE_FAMILIES, NoiseSchedule, build_schedule

MAGIC = b"GTSD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHIIIIBdII")


@dataclass
class DiffusionModel:
    vocab: list[str]
    embedding: np.ndarray
    schedule: NoiseSchedule
    params: DenoiserParams
    floor: float = 1e-4
    losses: list[float] = field(default_factory=list)

    def __post_init__(self):
        if len(set(self.vocab)) != len(self.vocab) or len(self.vocab) < 2:
            raise ModelFormatError("vocabulary must hold at least two distinct tokens")
        if self.embedding.shape != (len(self.vocab), self.params.d):
            raise ShapeMismatch(
                f"embedding shape {self.embedding.shape} != ({len(self.vocab)}, {self.params.d})"
            )
        if not np.all(np.isfinite(self.embedding)):
            raise ModelFormatError("embedding has non-finite entries")
        if len(np.unique(self.embedding, axis=0)) != len(self.vocab):
            raise ModelFormatError("embedding rows must be pairwise distinct")
        self.token_index = {tok: i for i, tok in enumerate(self.vocab)}

    @property
    def V(self) -> int:
        return len(self.vocab)

    @property
    def d(self) -> int:
        return self.params.d

    @property
    def L(self) -> int:
        return self.params.max_len

    @property
    def T(self) -> int:
        return self.schedule.T

    def ids(self, tokens) -> np.ndarray:
        try:
            return np.array([self.token_index[t] for t in tokens], dtype=np.int64)
        except KeyError as exc:
            raise UnknownToken(f"token {exc.args[0]!r} is not in the vocabulary") from None

    def tokens(self, ids) -> list[str]:
        return [self.vocab[i] for i in ids]

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(
            MAGIC, FORMAT_VERSION, self.V, self.d, self.L, self.T,
            SCHEDULE_FAMILIES[self.schedule.family], self.floor,
            self.params.hidden, self.params.time_dim,
        )
        parts = [head]
        for tok in self.vocab:
            raw = tok.encode("utf-8")
            parts.append(struct.pack("<I", len(raw)) + raw)
        parts.append(np.ascontiguousarray(self.embedding, dtype="<f8").tobytes())
        for name in PARAM_ORDER:
            parts.append(np.ascontiguousarray(self.params.weights[name], dtype="<f8").tobytes())
        body = b"".join(parts)
        return body + struct.pack("<Q", checksum(body))

    @classmethod
    def from_bytes(cls, data: bytes) -> "DiffusionModel":
        if len(data) < _HEADER.size + 8:
            raise ModelFormatError("model file is truncated")
        body, (stored,) = data[:-8], struct.unpack("<Q", data[-8:])
        if checksum(body) != stored:
            raise ModelFormatError("model checksum mismatch")
        magic, version, V, d, L, T, fam, floor, hidden, tdim = _HEADER.unpack_from(body, 0)
        if magic != MAGIC:
            raise ModelFormatError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported model format version {version}")
        families = {v: k for k, v in SCHEDULE_FAMILIES.items()}
        if fam not in families:
            raise ModelFormatError(f"unknown schedule family id {fam}")
        pos = _HEADER.size
        vocab = []
        for _ in range(V):
            (n,) = struct.unpack_from("<I", body, pos)
            pos += 4
            vocab.append(body[pos:pos + n].decode("utf-8"))
            pos += n

        def take(shape):
            nonlocal pos
            count = int(np.prod(shape))
            arr = np.frombuffer(body, dtype="<f8", count=count, offset=pos).astype(np.float64)
            pos += 8 * count
            return arr.reshape(shape)

        try:
            emb = take((V, d))
            shapes = {
                "W_in": (d, hidden), "P": (L, hidden), "W_t": (tdim, hidden),
                "b1": (hidden,), "W_h": (hidden, hidden), "W_g": (hidden, hidden),
                "b2": (hidden,), "W_out": (hidden, d), "b_out": (d,),
            }
            weights = {name: take(shapes[name]) for name in PARAM_ORDER}
        except ValueError as exc:
            raise ModelFormatError(f"model file is truncated: {exc}") from None
        if pos != len(body):
            raise ModelFormatError(f"{len(body) - pos} unexpected trailing bytes")
        return cls(vocab, emb, build_schedule(T, families[fam], floor), DenoiserParams(weights), floor)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "DiffusionModel":
        return cls.from_bytes(Path(path).read_bytes())


def checksum(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "little")


def random_embedding(V: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian rows rescaled to a common norm of sqrt(d)."""
    rows = rng.standard_normal((V, d))
    return rows / np.linalg.norm(rows, axis=1, keepdims=True) * np.sqrt(d)
