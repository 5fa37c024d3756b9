"""Bundled toy corpus: loading, vocabulary building and the template grammar
that produced it."""

from __future__ import annotations

import random
from collections import Counter
from importlib import resources
from pathlib import Path

from .errors import EmptyCorpus

_SUBJECTS = [
    "i", "we", "my wife", "my husband", "my friend", "my brother", "my sister",
    "my kids", "the audience", "everyone", "my dad", "my mom", "our group",
    "the critics", "my roommate", "my cousin", "the whole family", "nobody",
]
_ADVERBS = [
    "really", "truly", "honestly", "absolutely", "totally", "simply", "genuinely",
    "completely", "actually", "definitely", "surprisingly", "mostly", "somewhat",
]
_VERBS_POS = ["liked", "loved", "enjoyed", "adored", "admired", "appreciated", "recommend"]
_VERBS_NEG = ["hated", "disliked", "regretted", "resented", "endured", "tolerated"]
_THINGS = [
    "movie", "film", "story", "plot", "script", "cast", "acting", "ending",
    "soundtrack", "music", "dialogue", "direction", "photography", "pacing",
    "sequel", "premise", "characters", "villain", "hero", "humor", "romance",
    "visuals", "effects", "score", "editing", "costumes", "setting", "twist",
    "finale", "opening", "performance", "director", "writing", "comedy", "drama",
    "thriller", "documentary", "cartoon", "remake", "trailer",
]
_ADJ_POS = [
    "great", "wonderful", "brilliant", "excellent", "amazing", "charming",
    "clever", "moving", "beautiful", "funny", "powerful", "delightful",
    "gripping", "stunning", "superb", "touching", "memorable", "fresh",
    "smart", "warm", "thrilling", "solid", "elegant", "inventive", "hilarious",
    "haunting", "sweet", "bold", "gorgeous", "tight",
]
_ADJ_NEG = [
    "boring", "awful", "terrible", "dull", "weak", "silly", "clumsy", "bland",
    "predictable", "messy", "tedious", "shallow", "flat", "lazy", "forgettable",
    "painful", "confusing", "cheap", "slow", "noisy", "stale", "pointless",
    "clunky", "lifeless", "overlong", "awkward", "hollow", "tired", "dreary",
    "sloppy",
]
_DEGREE = ["very", "quite", "rather", "so", "too", "pretty", "fairly", "incredibly", "oddly", "almost"]
_DET = ["the", "this", "that", "its", "their", "every"]
_PEOPLE = [
    "actors", "actress", "actor", "writers", "producers", "kids", "fans",
    "parents", "teenagers", "students", "couples", "viewers", "crowd", "critic",
    "children", "adults", "friends", "strangers", "neighbors", "colleagues",
]
_TIMES = [
    "yesterday", "tonight", "last night", "last week", "on sunday", "on friday",
    "this morning", "twice", "again", "at home", "in theaters", "on tv",
    "with friends", "with family", "on a plane", "after work",
]
_CONNECT = ["and", "but", "although", "because", "while", "yet", "so", "since"]
_OPENERS = [
    "good luck to", "hats off to", "shout out to", "thanks a lot", "what a shame",
    "what a ride", "what a mess", "what a joy", "not bad at", "do not miss",
    "do not watch", "please skip this", "go see this", "never again will",
    "all in all", "to be honest", "in my opinion", "at the end", "for the record",
    "from the start", "by the way", "on the whole", "as a fan",
]
_TAILS = [
    "watch this film", "see it twice", "enjoy the show", "bring some popcorn",
    "take the kids", "skip the trailer", "stay until the end", "read the book first",
    "ignore the reviews", "grab a friend", "find a good seat", "keep an open mind",
    "turn off your phone", "watch it again", "buy the soundtrack", "sit through it",
]
_VERDICTS = [
    "ten out of ten", "two thumbs up", "one star", "five stars", "a total waste",
    "worth every penny", "a real gem", "a missed chance", "pure gold", "a disaster",
    "a classic", "an instant favorite", "a guilty pleasure", "a cult hit",
]


def _adj(rng: random.Random, positive: bool) -> list[str]:
    pool = _ADJ_POS if positive else _ADJ_NEG
    words = []
    if rng.random() < 0.4:
        words.append(rng.choice(_DEGREE))
    words.append(rng.choice(pool))
    return words


def _clause(rng: random.Random) -> list[str]:
    positive = rng.random() < 0.55
    kind = rng.randrange(7)
    if kind == 0:
        verb = rng.choice(_VERBS_POS if positive else _VERBS_NEG)
        out = rng.choice(_SUBJECTS).split() + [rng.choice(_ADVERBS), verb, rng.choice(_DET), rng.choice(_THINGS)]
    elif kind == 1:
        out = [rng.choice(_DET), rng.choice(_THINGS), rng.choice(["was", "is", "felt", "seemed", "looked"])]
        out += _adj(rng, positive)
    elif kind == 2:
        out = ["the", rng.choice(_PEOPLE), rng.choice(["were", "seemed", "looked", "felt"])] + _adj(rng, positive)
    elif kind == 3:
        out = rng.choice(_SUBJECTS).split() + ["watched", "it", *rng.choice(_TIMES).split()]
    elif kind == 4:
        out = rng.choice(_OPENERS).split() + rng.choice(_TAILS).split()
    elif kind == 5:
        out = ["overall", "it", "was", *rng.choice(_VERDICTS).split()]
    else:
        out = ["a", *_adj(rng, positive), rng.choice(_THINGS), "with", "a", *_adj(rng, positive), rng.choice(_THINGS)]
    return out


def generate_sentences(count: int, seed: int = 0, min_len: int = 5, max_len: int = 25) -> list[list[str]]:
    """Sample ``count`` review-like sentences from the template grammar."""
    rng = random.Random(seed)
    sentences = []
    while len(sentences) < count:
        words = _clause(rng)
        while rng.random() < 0.45 and len(words) < max_len:
            words += [rng.choice(_CONNECT), *_clause(rng)]
        if min_len <= len(words) <= max_len:
            sentences.append(words)
    return sentences


def load_corpus(path: str | Path | None = None) -> list[list[str]]:
    """Read one whitespace-tokenised sentence per line; default is the bundled corpus."""
    if path is None:
        text = resources.files("diffstego.data").joinpath("toy_corpus.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    sentences = [line.split() for line in text.splitlines() if line.strip()]
    if not sentences:
        raise EmptyCorpus("corpus contains no sentences")
    return sentences


def build_vocab(sentences: list[list[str]]) -> list[str]:
    """Tokens ordered by descending frequency, ties alphabetical."""
    counts = Counter(tok for s in sentences for tok in s)
    return sorted(counts, key=lambda tok: (-counts[tok], tok))


def opening_triples(sentences: list[list[str]]) -> list[tuple[str, str, str]]:
    """Distinct first-three-token triples, most frequent first."""
    counts = Counter(tuple(s[:3]) for s in sentences if len(s) >= 3)
    return sorted(counts, key=lambda t: (-counts[t], t))
