"""Shared prompt tables: index <-> 3-token prompt mapping and filtration."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .bits import is_power_of_two
from .errors import (
    AmbiguousPrompt,
    BadArity,
    DuplicatePrompt,
    DuplicateToken,
    IndexOutOfRange,
    LengthOverflow,
    NotPowerOfTwo,
    PromptNotFound,
    TableTooSmall,
    UnknownToken,
)

PROMPT_LEN = 3
_PAIRS = ((0, 1), (0, 2), (1, 2))

Prompt = tuple[str, str, str]


@dataclass(frozen=True)
class ConditionalPrompt:
    prompt: Prompt
    length: int

    def __post_init__(self):
        if len(self.prompt) != PROMPT_LEN or not all(self.prompt):
            raise BadArity(f"prompt must be {PROMPT_LEN} nonempty tokens: {self.prompt!r}")
        if self.length < PROMPT_LEN + 1:
            raise LengthOverflow(f"length {self.length} leaves no room after the prompt")


def _check_vocab(tokens: Iterable[str], vocab) -> None:
    if vocab is None:
        return
    for tok in tokens:
        if tok not in vocab:
            raise UnknownToken(f"token {tok!r} is not in the model vocabulary")


class PromptTable:
    """Ordered, duplicate-free list of 3-token prompts; capacity is a power of two."""

    def __init__(self, entries: Sequence[Sequence[str]], vocab=None):
        entries = [tuple(e) for e in entries]
        for i, e in enumerate(entries):
            if len(e) != PROMPT_LEN:
                raise BadArity(f"entry {i} has {len(e)} tokens, expected {PROMPT_LEN}")
        if not is_power_of_two(len(entries)) or len(entries) < 2:
            raise NotPowerOfTwo(f"table size {len(entries)} is not a power of two >= 2")
        index: dict[Prompt, int] = {}
        for i, e in enumerate(entries):
            if e in index:
                raise DuplicatePrompt(f"entry {i} repeats entry {index[e]}: {' '.join(e)}")
            index[e] = i
        if vocab is not None:
            vocab = set(vocab)
            for e in entries:
                _check_vocab(e, vocab)
        self.entries: list[Prompt] = entries
        self._index = index
        self._pairs: dict[tuple, list[int]] = defaultdict(list)
        for i, e in enumerate(entries):
            for a, b in _PAIRS:
                self._pairs[(a, b, e[a], e[b])].append(i)

    @property
    def capacity(self) -> int:
        return len(self.entries)

    @property
    def m_p(self) -> int:
        return self.capacity.bit_length() - 1

    def __len__(self) -> int:
        return self.capacity

    def entry(self, index: int) -> Prompt:
        if not 0 <= index < self.capacity:
            raise IndexOutOfRange(f"prompt index {index} outside [0, {self.capacity})")
        return self.entries[index]

    def match(self, tokens: Sequence[str]) -> int:
        """Index of ``tokens``; falls back to the unique entry agreeing in 2 of 3 positions."""
        key = tuple(tokens[:PROMPT_LEN])
        if len(key) != PROMPT_LEN:
            raise PromptNotFound(f"need {PROMPT_LEN} leading tokens, got {len(key)}")
        hit = self._index.get(key)
        if hit is not None:
            return hit
        candidates = set()
        for a, b in _PAIRS:
            candidates.update(self._pairs.get((a, b, key[a], key[b]), ()))
        return _resolve_fallback(key, candidates)

    def lines(self) -> list[str]:
        return [" ".join(e) for e in self.entries]


def _resolve_fallback(key, candidates) -> int:
    if not candidates:
        raise PromptNotFound(f"no table entry shares two positions with {' '.join(key)!r}")
    if len(candidates) > 1:
        raise AmbiguousPrompt(
            f"{len(candidates)} entries share two positions with {' '.join(key)!r}"
        )
    return next(iter(candidates))


class ExtendedPromptTable:
    """Cartesian product of three word lists.

    Index ``i`` splits MSB-first into three fields, one per list, so capacity is
    the product of the list lengths.
    """

    def __init__(self, word_lists: Sequence[Sequence[str]], vocab=None):
        if len(word_lists) != PROMPT_LEN:
            raise BadArity(f"need {PROMPT_LEN} word lists, got {len(word_lists)}")
        lists = [list(ws) for ws in word_lists]
        for n, ws in enumerate(lists):
            if not is_power_of_two(len(ws)):
                raise NotPowerOfTwo(f"list {n} has {len(ws)} words")
            if len(set(ws)) != len(ws):
                raise DuplicateToken(f"list {n} repeats a token")
        if vocab is not None:
            vocab = set(vocab)
            for ws in lists:
                _check_vocab(ws, vocab)
        self.word_lists = lists
        self.widths = [len(ws).bit_length() - 1 for ws in lists]
        if sum(self.widths) < 1:
            raise NotPowerOfTwo("extended table needs capacity >= 2")
        self._pos = [{w: i for i, w in enumerate(ws)} for ws in lists]

    @property
    def capacity(self) -> int:
        return 1 << sum(self.widths)

    @property
    def m_p(self) -> int:
        return sum(self.widths)

    def __len__(self) -> int:
        return self.capacity

    def decompose(self, index: int) -> tuple[int, int, int]:
        if not 0 <= index < self.capacity:
            raise IndexOutOfRange(f"prompt index {index} outside [0, {self.capacity})")
        w1, w2, w3 = self.widths
        return index >> (w2 + w3), (index >> w3) & ((1 << w2) - 1), index & ((1 << w3) - 1)

    def compose(self, a: int, b: int, c: int) -> int:
        w1, w2, w3 = self.widths
        for value, w in zip((a, b, c), self.widths):
            if not 0 <= value < 1 << w:
                raise IndexOutOfRange(f"field value {value} does not fit {w} bits")
        return (a << (w2 + w3)) | (b << w3) | c

    def entry(self, index: int) -> Prompt:
        fields = self.decompose(index)
        return tuple(ws[f] for ws, f in zip(self.word_lists, fields))

    def match(self, tokens: Sequence[str]) -> int:
        key = tuple(tokens[:PROMPT_LEN])
        if len(key) != PROMPT_LEN:
            raise PromptNotFound(f"need {PROMPT_LEN} leading tokens, got {len(key)}")
        found = [pos.get(tok) for pos, tok in zip(self._pos, key)]
        if None not in found:
            return self.compose(*found)
        if found.count(None) > 1:
            raise PromptNotFound(f"no table entry shares two positions with {' '.join(key)!r}")
        # two fields known, the third free: every word of that list is a 2-of-3 match
        missing = found.index(None)
        options = []
        for j in range(len(self.word_lists[missing])):
            fields = list(found)
            fields[missing] = j
            options.append(self.compose(*fields))
        return _resolve_fallback(key, options)


def load_table(lines: Iterable[str], vocab=None) -> PromptTable:
    entries = []
    for n, line in enumerate(lines):
        line = line.rstrip("\n")
        tokens = line.split(" ")
        if len(tokens) != PROMPT_LEN or not all(tokens):
            raise BadArity(f"line {n + 1}: expected {PROMPT_LEN} tokens, got {line!r}")
        entries.append(tokens)
    return PromptTable(entries, vocab)


def load_extended(lines: Iterable[str], vocab=None) -> ExtendedPromptTable:
    sections: list[list[str]] = [[]]
    for line in lines:
        line = line.strip()
        if line == "---":
            sections.append([])
        elif line:
            sections[-1].append(line)
    return ExtendedPromptTable(sections, vocab)


def read_table(path: str | Path, vocab=None) -> PromptTable | ExtendedPromptTable:
    """Load either table format; a ``---`` separator line marks an extended table."""
    lines = Path(path).read_text("utf-8").splitlines()
    if any(line.strip() == "---" for line in lines):
        return load_extended(lines, vocab)
    return load_table(lines, vocab)


def write_table(table: PromptTable, path: str | Path) -> None:
    Path(path).write_text("\n".join(table.lines()) + "\n", encoding="utf-8")


def select_prompt(table, index: int, length: int, l_min: int | None = None,
                  l_max: int | None = None) -> ConditionalPrompt:
    if l_min is not None and length < l_min or l_max is not None and length > l_max:
        raise LengthOverflow(f"length {length} outside [{l_min}, {l_max}]")
    return ConditionalPrompt(table.entry(index), length)


def match_prompt(table, leading_tokens: Sequence[str]) -> int:
    return table.match(leading_tokens)


def compose_extended(lists: Sequence[Sequence[str]], vocab=None) -> ExtendedPromptTable:
    return ExtendedPromptTable(lists, vocab)


def largest_power_of_two(n: int) -> int:
    return 1 << (n.bit_length() - 1) if n > 0 else 0


# generate(cond, trial) -> list of token sequences
Generator = Callable[[ConditionalPrompt, int], Sequence[Sequence[str]]]


def filter_prompts(table: PromptTable, generate: Generator, trials: int = 1,
                   length: int = 10, vocab=None) -> PromptTable:
    """Keep prompts whose tokens survive generation verbatim in every trial.

    ``generate`` receives the conditional prompt and the trial number and
    returns one batch of candidates.  Survivors keep their relative order and
    are truncated to the largest power of two.
    """
    survivors = []
    for prompt in table.entries:
        cond = ConditionalPrompt(prompt, length)
        if all(
            all(tuple(c[:PROMPT_LEN]) == prompt for c in generate(cond, trial))
            for trial in range(trials)
        ):
            survivors.append(prompt)
    if len(survivors) < 2:
        raise TableTooSmall(f"only {len(survivors)} prompts survived filtration")
    return PromptTable(survivors[:largest_power_of_two(len(survivors))], vocab)
