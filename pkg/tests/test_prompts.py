import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from diffstego.errors import (
    AmbiguousPrompt,
    BadArity,
    DuplicatePrompt,
    DuplicateToken,
    IndexOutOfRange,
    NotPowerOfTwo,
    PromptNotFound,
    TableTooSmall,
    UnknownToken,
)
from diffstego.prompts import (
    ConditionalPrompt,
    ExtendedPromptTable,
    PromptTable,
    compose_extended,
    filter_prompts,
    load_extended,
    load_table,
    match_prompt,
    read_table,
    select_prompt,
    write_table,
)

WORDS = [f"w{i}" for i in range(300)]


def random_table(size, seed=0, words=WORDS):
    rnd = random.Random(seed)
    seen = set()
    while len(seen) < size:
        seen.add(tuple(rnd.sample(words, 3)))
    return PromptTable(sorted(seen))


def synthetic_1024():
    """1024 distinct triples with 'good luck to' at index 534."""
    vocab = ["good", "luck", "to"] + WORDS
    triples = [t for t in itertools.product(WORDS[:11], repeat=3)][:1023]
    triples.insert(534, ("good", "luck", "to"))
    return PromptTable(triples, vocab)


def test_load_table_1024():
    table = random_table(1024)
    loaded = load_table(table.lines())
    assert loaded.capacity == 1024 and loaded.m_p == 10
    assert loaded.entries == table.entries


@pytest.mark.parametrize("lines, error", [
    (["a b c", "d e f", "g h i"], NotPowerOfTwo),
    (["a b c", "d e f", "a b c", "x y z"], DuplicatePrompt),
    (["a b c d", "d e f"], BadArity),
    (["a b", "d e f"], BadArity),
    (["a  b c", "d e f"], BadArity),
])
def test_load_table_errors(lines, error):
    with pytest.raises(error):
        load_table(lines)


def test_unknown_token():
    with pytest.raises(UnknownToken):
        load_table(["a b c", "d e f"], vocab={"a", "b", "c", "d", "e"})


def test_select_prompt_worked_example():
    table = synthetic_1024()
    cond = select_prompt(table, 534, 6)
    assert cond == ConditionalPrompt(("good", "luck", "to"), 6)
    assert select_prompt(table, 0, 6).prompt == table.entries[0]
    with pytest.raises(IndexOutOfRange):
        select_prompt(table, 1024, 6)


def test_match_inverse_exhaustive():
    table = random_table(1024, seed=3)
    for i in range(table.capacity):
        assert match_prompt(table, select_prompt(table, i, 10).prompt) == i


def _brute_force_fallback(table, key):
    exact = [i for i, e in enumerate(table.entries) if e == key]
    if exact:
        return exact[0]
    near = [i for i, e in enumerate(table.entries) if sum(a == b for a, b in zip(e, key)) >= 2]
    if len(near) == 1:
        return near[0]
    return "ambiguous" if near else "missing"


def test_fallback_matches_brute_force_under_attack():
    table = random_table(1024, seed=5, words=WORDS[:64])
    rnd = random.Random(11)
    trials = 2000
    for _ in range(trials):
        i = rnd.randrange(table.capacity)
        key = list(table.entries[i])
        pos = rnd.randrange(3)
        key[pos] = rnd.choice([w for w in WORDS[:64] if w != key[pos]])
        expected = _brute_force_fallback(table, tuple(key))
        try:
            got = table.match(key)
        except AmbiguousPrompt:
            got = "ambiguous"
        except PromptNotFound:
            got = "missing"
        assert got == expected


def test_match_errors():
    table = PromptTable([("a", "b", "c"), ("a", "b", "d"), ("x", "y", "z"), ("p", "q", "r")])
    with pytest.raises(PromptNotFound):
        table.match(("m", "n", "o"))
    with pytest.raises(AmbiguousPrompt):
        table.match(("a", "b", "e"))
    assert table.match(("x", "y", "w")) == 2


def test_extended_table_capacity():
    lists = [[f"a{i}" for i in range(1024)], [f"b{i}" for i in range(1024)], [f"c{i}" for i in range(1024)]]
    ext = compose_extended(lists)
    assert ext.capacity == 1024 ** 3 and ext.m_p == 30
    assert ext.entry(0) == ("a0", "b0", "c0")
    assert ext.entry(ext.capacity - 1) == ("a1023", "b1023", "c1023")
    assert ext.match(("a5", "b6", "c7")) == (5 << 20) | (6 << 10) | 7


@given(st.integers(0, 3), st.integers(0, 15), st.integers(0, 7))
def test_extended_decompose_compose(a, b, c):
    ext = ExtendedPromptTable([[f"a{i}" for i in range(4)], [f"b{i}" for i in range(16)],
                               [f"c{i}" for i in range(8)]])
    assert ext.decompose(ext.compose(a, b, c)) == (a, b, c)
    assert ext.match(ext.entry(ext.compose(a, b, c))) == ext.compose(a, b, c)


def test_extended_bijection_small():
    ext = ExtendedPromptTable([["a", "b"], ["c", "d", "e", "f"], ["g", "h"]])
    entries = [ext.entry(i) for i in range(ext.capacity)]
    assert len(set(entries)) == ext.capacity == 16


def test_extended_errors_and_fallback():
    with pytest.raises(NotPowerOfTwo):
        ExtendedPromptTable([["a", "b", "c"], ["d"], ["e"]])
    with pytest.raises(DuplicateToken):
        ExtendedPromptTable([["a", "a"], ["d"], ["e"]])
    ext = ExtendedPromptTable([["a", "b"], ["c"], ["e", "f"]])
    with pytest.raises(AmbiguousPrompt):
        ext.match(("a", "c", "zzz"))
    assert ext.match(("a", "zzz", "f")) == ext.compose(0, 0, 1)
    with pytest.raises(PromptNotFound):
        ext.match(("x", "y", "f"))


def test_table_files(tmp_path):
    table = random_table(8)
    path = tmp_path / "t.txt"
    write_table(table, path)
    assert read_table(path).entries == table.entries
    ext_path = tmp_path / "e.txt"
    ext_path.write_text("a\nb\n---\nc\nd\n---\ne\nf\ng\nh\n", encoding="utf-8")
    ext = read_table(ext_path)
    assert isinstance(ext, ExtendedPromptTable) and ext.capacity == 16
    assert load_extended(ext_path.read_text().splitlines()).entry(5) == ("a", "d", "f")


def _clamping_generator(cond, trial):
    return [list(cond.prompt) + ["x"] * (cond.length - 3) for _ in range(4)]


def test_filter_keeps_everything_when_prompts_are_clamped():
    table = random_table(16)
    kept = filter_prompts(table, _clamping_generator, trials=3)
    assert kept.entries == table.entries


def test_filter_removes_overwritten_prompts():
    def overwrite(cond, trial):
        return [[cond.prompt[0], cond.prompt[1], "zzz"] + ["x"] * (cond.length - 3)]

    with pytest.raises(TableTooSmall):
        filter_prompts(random_table(16), overwrite)


def test_filter_truncates_to_power_of_two():
    table = random_table(1024, seed=9)
    survivors = set(table.entries[:700])

    def generator(cond, trial):
        first = cond.prompt if cond.prompt in survivors else ("q", "q", "q")
        return [list(first) + ["x"] * (cond.length - 3)]

    kept = filter_prompts(table, generator)
    assert kept.capacity == 512
    assert kept.entries == table.entries[:512]


def test_conditional_prompt_validation():
    with pytest.raises(BadArity):
        ConditionalPrompt(("a", "b"), 5)
