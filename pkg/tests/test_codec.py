import itertools
import random

import numpy as np
import pytest

from diffstego.bits import frame_payload, unframe_payload
from diffstego.codec import (
    Codec,
    SessionConfig,
    extract,
    hide,
    load_session,
    parse_session_file,
    sample_latents,
    sample_lengths,
    similarity,
    write_session_file,
)
from diffstego.errors import (
    BadRange,
    CollisionDetected,
    LengthMismatch,
    ModelMissing,
    SentenceError,
    SessionFileError,
    TableMismatch,
)
from diffstego.prompts import PromptTable, write_table


def random_bits(rnd, n):
    return "".join(rnd.choice("01") for _ in range(n))


def test_sample_lengths_examples():
    assert sample_lengths(9, 50, 10, 10) == [10] * 50
    assert sample_lengths(9, 200, 5, 25) == sample_lengths(9, 200, 5, 25)
    assert sample_lengths(9, 10, 5, 25, start=5) == sample_lengths(9, 15, 5, 25)[5:]
    assert sample_lengths(9, 0, 5, 25) == []
    with pytest.raises(BadRange):
        sample_lengths(9, 5, 12, 10)


def test_sample_lengths_uniform():
    n = 100_000
    counts = np.bincount(sample_lengths(123, n, 5, 25), minlength=26)[5:]
    p = 1 / 21
    sigma = np.sqrt(n * p * (1 - p))
    assert np.all(np.abs(counts - n * p) <= 3 * sigma)


def test_sample_latents_moments():
    lat = sample_latents(77, 40, 25, 1000)
    assert lat.shape == (40, 25, 1000) and lat.size == 10 ** 6
    assert abs(lat.mean()) < 0.01
    assert abs(lat.var() - 1) < 0.02
    np.testing.assert_array_equal(lat, sample_latents(77, 40, 25, 1000))


def test_sample_latents_differ_between_seeds():
    for seed in range(100):
        a = sample_latents(2 * seed, 4, 5, 6)
        b = sample_latents(2 * seed + 1, 4, 5, 6)
        assert np.any(a != b)


def test_latent_fill_order():
    flat = sample_latents(5, 3, 4, 2).ravel()
    np.testing.assert_array_equal(flat[:8], sample_latents(5, 1, 4, 2).ravel())


@pytest.mark.parametrize("s, c, expected", [
    ("a b c d e f g h i j".split(), "a b c d e f g h i j".split(), 1.0),
    ("a b c d e f g h i j".split(), "a b c d e f g h i x".split(), 0.9),
    ("a b c".split(), "x y z".split(), 0.0),
    ("a b c".split(), "a b c d".split(), 0.75),
])
def test_similarity(s, c, expected):
    assert similarity(s, c) == pytest.approx(expected)


def test_hide_extract_roundtrip(codec16):
    rnd = random.Random(4)
    for _ in range(30):
        payload = random_bits(rnd, rnd.randrange(1, 400))
        stego = codec16.hide(frame_payload(payload))
        assert unframe_payload(codec16.extract(stego.sentences)) == payload


def test_hide_empty(codec16):
    stego = codec16.hide("")
    assert stego.sentences == [] and stego.pad_bits == 0
    assert codec16.extract([]) == ""


def test_module_level_helpers(codec16):
    bits = "1011001110100101"
    assert extract(hide(bits, codec16.session).sentences, codec16.session) == bits


def test_extraction_includes_padding(codec16):
    stego = codec16.hide("101")
    assert stego.pad_bits == 5
    assert codec16.extract(stego.sentences) == "10100000"


def test_sentences_follow_table_prompts_and_seed_lengths(codec16):
    stego = codec16.hide(random_bits(random.Random(1), 160))
    lengths = codec16.lengths(len(stego.sentences))
    for s, length, (p, _) in zip(stego.sentences, lengths, stego.indices):
        assert len(s) == length
        assert tuple(s[:3]) == codec16.session.table.entry(p)


def test_extraction_is_pure(codec16, model, table16):
    stego = codec16.hide(random_bits(random.Random(2), 200))
    fresh = Codec(SessionConfig(seed=1, k=16, table=table16, model=model))
    assert fresh.extract(stego.sentences) == codec16.extract(stego.sentences)


def test_workers_do_not_change_output(model, table16):
    bits = random_bits(random.Random(8), 240)
    outs = []
    for workers in (1, 4):
        codec = Codec(SessionConfig(seed=3, k=64, table=table16, model=model, workers=workers))
        outs.append(codec.hide(bits).sentences)
    assert outs[0] == outs[1]


def test_attack_similarity_property(codec16):
    """Replacing n tokens scores (l-n)/l against the true candidate; extraction errs
    exactly when brute-force scoring finds a rival at least that good and lower."""
    rnd = random.Random(6)
    vocab = codec16.session.model.vocab
    stego = codec16.hide(random_bits(rnd, 8 * 120))
    lengths = codec16.lengths(len(stego.sentences))
    for s, length, (p, b) in zip(stego.sentences, lengths, stego.indices):
        n = rnd.randrange(0, length - 3 + 1)
        attacked = list(s)
        for pos in rnd.sample(range(3, length), n):
            attacked[pos] = rnd.choice([w for w in vocab if w != s[pos]])
        cands = codec16.candidates(p, length)
        assert similarity(attacked, cands[b]) == pytest.approx((length - n) / length)
        scores = [similarity(attacked, c) for c in cands]
        got = codec16.extract_one(attacked, length)
        assert got == (p, scores.index(max(scores)))
        rival = any(sc >= scores[b] for sc in scores[:b]) or any(sc > scores[b] for sc in scores[b + 1:])
        assert (got[1] == b) == (not rival)


def test_collision_detected(model, table16, monkeypatch):
    codec = Codec(SessionConfig(seed=1, k=4, table=table16, model=model))
    dup = np.array([[1, 2, 3, 4, 5], [1, 2, 3, 4, 6], [1, 2, 3, 4, 5], [1, 2, 3, 4, 7]])
    monkeypatch.setattr(codec, "batch", lambda p, length: dup[:, :length])
    monkeypatch.setattr(codec, "lengths", lambda count: [5] * count)
    with pytest.raises(CollisionDetected) as info:
        codec.hide("000010")  # m_p = 4 bits, m_b = 2 bits: candidate 2
    assert info.value.index == 2 and info.value.duplicate_of == 0
    assert codec.hide("000011").sentences  # candidate 3 is unique


def test_audit_reports_duplicates(model, table16, monkeypatch):
    codec = Codec(SessionConfig(seed=1, k=4, table=table16, model=model))
    dup = np.array([[1, 2, 3, 4, 5], [1, 2, 3, 4, 6], [1, 2, 3, 4, 5], [1, 2, 3, 4, 5]])
    monkeypatch.setattr(codec, "batch", lambda p, length: dup)
    found = codec.audit(lengths=[5])
    assert (0, 5, 2, 0) in found and (0, 5, 3, 0) in found and len(found) == 32


def test_length_mismatch_is_per_sentence_error(codec16):
    stego = codec16.hide(random_bits(random.Random(3), 32))
    broken = [s + ["movie"] if i == 2 else s for i, s in enumerate(stego.sentences)]
    report = codec16.extract_report(broken)
    assert isinstance(report[2], SentenceError) and report[2].ordinal == 2
    assert isinstance(report[2].cause, LengthMismatch)
    assert all(not isinstance(r, SentenceError) for i, r in enumerate(report) if i != 2)
    with pytest.raises(SentenceError):
        codec16.extract(broken)


def test_unknown_prompt_is_reported(codec16):
    stego = codec16.hide("0" * 16)
    bad = ["zz", "zz", "zz"] + stego.sentences[0][3:]
    report = codec16.extract_report([bad, stego.sentences[1]])
    assert isinstance(report[0], SentenceError) and report[0].ordinal == 0


def test_cosine_similarity_option(model, table16):
    codec = Codec(SessionConfig(seed=1, k=16, table=table16, model=model, similarity="cosine"))
    bits = random_bits(random.Random(5), 80)
    assert codec.extract(codec.hide(bits).sentences) == bits


def test_worked_example(model):
    # prompt index 534 = "good luck to", candidate 2
    others = [t for t in model.vocab if t not in ("good", "luck", "to")][:11]
    triples = list(itertools.product(others, repeat=3))[:1023]
    triples.insert(534, ("good", "luck", "to"))
    table = PromptTable(triples, model.vocab)
    codec = Codec(SessionConfig(seed=11, k=1024, table=table, model=model))
    stego = codec.hide("1000010110" + "0000000010")
    (sentence,) = stego.sentences
    assert stego.indices == [(534, 2)]
    assert sentence[:3] == ["good", "luck", "to"]
    length = codec.lengths(1)[0]
    assert sentence == codec.candidates(534, length)[2]
    assert codec.extract(stego.sentences) == "10000101100000000010"


def test_session_validation(model, table16):
    with pytest.raises(TableMismatch):
        SessionConfig(seed=1, k=12, table=table16, model=model)
    with pytest.raises(BadRange):
        SessionConfig(seed=1, k=16, table=table16, model=model, l_min=4)
    with pytest.raises(BadRange):
        SessionConfig(seed=1, k=16, table=table16, model=model, l_max=26)
    with pytest.raises(ModelMissing):
        SessionConfig(seed=1, k=16, table=table16, model=None)


def test_session_file(tmp_path, model_file, table16):
    write_table(table16, tmp_path / "table.txt")
    write_session_file(tmp_path / "s.session", {
        "seed": 5, "k": 16, "l_min": 6, "l_max": 20, "steps": 25,
        "table": "table.txt", "model": str(model_file),
    })
    values = parse_session_file(tmp_path / "s.session")
    assert values["table"] == str(tmp_path / "table.txt")
    session = load_session(int(values["seed"]), int(values["k"]), values["table"], values["model"],
                           int(values["l_min"]), int(values["l_max"]), values["steps"])
    assert len(session.steps) == 25 and session.l_min == 6
    explicit = load_session(1, 16, values["table"], values["model"], steps="900,500,100")
    assert explicit.steps == [900, 500, 100]
    (tmp_path / "bad.session").write_text("colour=blue\n")
    with pytest.raises(SessionFileError):
        parse_session_file(tmp_path / "bad.session")
