"""Command-line interface.

Exit codes: 0 success, 2 configuration or input error, 3 collision while
hiding, 4 extraction failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import bits as bitcodec
from .codec import Codec, SessionConfig, load_session, parse_session_file
from .corpus import build_vocab, load_corpus, opening_triples
from .diffusion.model import DiffusionModel
from .diffusion.sampling import embed_sentence, sample_batch_ids
from .diffusion.train import TrainConfig, train
from .errors import CollisionDetected, SentenceError, StegoError
from .metrics import (
    AttackConfig,
    MetricReport,
    acer,
    attack_round_counts,
    bpw,
    kld,
    random_replace,
    regime_label,
)
from .prompts import ConditionalPrompt, PromptTable, read_table, write_table

EXIT_OK, EXIT_CONFIG, EXIT_COLLISION, EXIT_EXTRACT = 0, 2, 3, 4
ATTACK_META = "attack.txt"

log = logging.getLogger("diffstego")


class ConfigError(Exception):
    pass


def read_sentences(path) -> list[list[str]]:
    text = Path(path).read_text("utf-8")
    return [line.split(" ") for line in text.splitlines() if line]


def write_sentences(path, sentences) -> None:
    Path(path).write_text("".join(" ".join(s) + "\n" for s in sentences), encoding="utf-8")


def _require(path, what: str) -> Path:
    if path is None:
        raise ConfigError(f"--{what} is required")
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{what} file not found: {path}")
    return path


def session_from_args(args) -> SessionConfig:
    values = parse_session_file(args.session) if args.session else {}
    pick = lambda flag, key: flag if flag is not None else values.get(key)  # noqa: E731
    seed = pick(args.seed, "seed")
    if seed is None:
        raise ConfigError("a session seed is required (--seed or session file)")
    model = _require(pick(args.model, "model"), "model")
    table = _require(pick(args.table, "table"), "table")
    return load_session(
        seed=int(seed),
        k=int(pick(args.k, "k") or 16),
        table_path=table,
        model_path=model,
        l_min=int(pick(args.lmin, "l_min") or 5),
        l_max=int(pick(args.lmax, "l_max") or 25),
        steps=pick(args.steps, "steps"),
        similarity=values.get("similarity", "positional"),
        workers=args.workers,
    )


# subcommands

def cmd_train(args) -> int:
    corpus_path = args.corpus
    if corpus_path is not None and not Path(corpus_path).exists():
        raise ConfigError(f"corpus not found: {corpus_path}")
    corpus = load_corpus(corpus_path)
    cfg = TrainConfig(d=args.d, hidden=args.hidden, max_len=args.max_len, T=args.T,
                      epochs=args.epochs, batch_size=args.batch_size, lr=args.lr)
    model = train(corpus, cfg, seed=args.seed, vocab=build_vocab(corpus),
                  on_epoch=lambda e, loss: print(f"epoch {e} loss {loss:.6f}"))
    model.save(args.model)
    print(f"wrote {args.model} (V={model.V}, d={model.d}, L={model.L}, T={model.T})")
    return EXIT_OK


def cmd_make_table(args) -> int:
    model = DiffusionModel.load(_require(args.model, "model"))
    corpus = load_corpus(args.corpus)
    vocab = set(model.vocab)
    triples = [t for t in opening_triples(corpus) if all(tok in vocab for tok in t)]
    if len(triples) < args.size:
        raise ConfigError(f"corpus has only {len(triples)} distinct openings, need {args.size}")
    table = PromptTable(triples[:args.size], model.vocab)
    write_table(table, args.out)
    print(f"wrote {args.out} with {table.capacity} prompts")
    return EXIT_OK


def cmd_filter(args) -> int:
    from .codec import filter_table

    model = DiffusionModel.load(_require(args.model, "model"))
    table = read_table(_require(args.table, "table"), model.vocab)
    if not isinstance(table, PromptTable):
        raise ConfigError("filtration works on plain prompt tables only")
    kept = filter_table(model, table, args.seed or 0, args.k or 16, args.trials)
    write_table(kept, args.out)
    print(f"kept {kept.capacity} of {table.capacity} prompts -> {args.out}")
    return EXIT_OK


def cmd_hide(args) -> int:
    session = session_from_args(args)
    payload = _require(args.payload, "payload").read_bytes()
    if args.stego is None:
        raise ConfigError("--stego output path is required")
    try:
        payload_bits = bitcodec.bits_from_bytes(payload, args.bits)
    except bitcodec.BitCountOverflow as exc:
        raise ConfigError(str(exc)) from None
    codec = Codec(session)
    start = time.perf_counter()
    try:
        stego = codec.hide(bitcodec.frame_payload(payload_bits))
    except CollisionDetected as exc:
        print(f"collision at segment {exc.segment}: {exc}; choose a different session seed",
              file=sys.stderr)
        return EXIT_COLLISION
    elapsed = time.perf_counter() - start
    write_sentences(args.stego, stego.sentences)
    print(f"sentences={len(stego.sentences)}")
    print(f"pad_bits={stego.pad_bits}")
    print(f"bpw={bpw(stego.sentences, session.spec):.6f}")
    print(f"mean_seconds_per_sentence={elapsed / max(len(stego.sentences), 1):.3f}")
    return EXIT_OK


def cmd_extract(args) -> int:
    session = session_from_args(args)
    sentences = read_sentences(_require(args.stego, "stego"))
    if args.payload is None:
        raise ConfigError("--payload output path is required")
    codec = Codec(session)
    report = codec.extract_report(sentences)
    failures = [item for item in report if isinstance(item, SentenceError)]
    spec = session.spec
    parts = []
    for item in report:
        if isinstance(item, SentenceError):
            parts.append("0" * spec.width)
        else:
            parts.append(codec.indices_to_bits([item]))
    recovered = "".join(parts)
    try:
        payload_bits = bitcodec.unframe_payload(recovered)
    except StegoError as exc:
        failures.append(exc)
        payload_bits = ""
    Path(args.payload).write_bytes(bitcodec.bytes_from_bits(payload_bits))
    for exc in failures:
        print(f"error: {exc}", file=sys.stderr)
    print(f"sentences={len(sentences)} failed={len(failures)} bits={len(payload_bits)}")
    return EXIT_EXTRACT if failures else EXIT_OK


def cmd_attack(args) -> int:
    sentences = read_sentences(_require(args.stego, "stego"))
    model = DiffusionModel.load(_require(args.model, "model"))
    cfg = AttackConfig(args.n, args.protect_prompt, args.rounds, args.seed or 0)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    skipped = 0
    for r in range(cfg.rounds):
        rng = cfg.rng(r)
        attacked = []
        for i, s in enumerate(sentences):
            try:
                attacked.append(random_replace(s, cfg, rng, model.vocab))
            except StegoError as exc:
                print(f"round {r + 1} sentence {i}: {exc}; passed through", file=sys.stderr)
                skipped += 1
                attacked.append(list(s))
        write_sentences(out_dir / f"round_{r + 1:02d}.txt", attacked)
    (out_dir / ATTACK_META).write_text(
        f"n={cfg.n}\nprotect_prompt={int(cfg.protect_prompt)}\nrounds={cfg.rounds}\nseed={cfg.seed}\n",
        encoding="utf-8",
    )
    print(f"wrote {cfg.rounds} rounds to {out_dir} ({skipped} sentences passed through)")
    return EXIT_OK


def _sentence_vectors(sentences, model: DiffusionModel):
    vecs = []
    for s in sentences:
        known = [tok for tok in s if tok in model.token_index]
        if known:
            vecs.append(embed_sentence(known, model))
    return vecs


def _read_meta(path: Path) -> dict[str, str]:
    meta = {}
    for line in path.read_text("utf-8").splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()
    return meta


def cmd_eval(args) -> int:
    session = session_from_args(args)
    model = session.model
    stego = read_sentences(_require(args.stego, "stego"))
    codec = Codec(session)
    report = MetricReport()
    if stego:
        report.bpw = bpw(stego, session.spec)
    if args.cover:
        cover = read_sentences(_require(args.cover, "cover"))
        cv, sv = _sentence_vectors(cover, model), _sentence_vectors(stego, model)
        report.kld_standard = kld(cv, sv, "standard")
        report.kld_paper = kld(cv, sv, "paper")
    truth = codec.extract_report(stego)
    bad = [t for t in truth if isinstance(t, SentenceError)]
    if bad:
        raise ConfigError(f"unattacked stego does not extract cleanly: {bad[0]}")
    for attacked_dir in args.attacked or []:
        attacked_dir = Path(attacked_dir)
        meta = _read_meta(_require(attacked_dir / ATTACK_META, "attack metadata"))
        label = regime_label(int(meta["n"]), meta["protect_prompt"] == "1")
        counts = []
        for path in sorted(attacked_dir.glob("round_*.txt")):
            got = codec.extract_report(read_sentences(path))
            counts.append(sum(1 for g, w in zip(got, truth)
                              if not isinstance(g, SentenceError) and g == w))
        report.counts[label] = counts
        report.acer[label] = acer(counts, len(stego))
    if stego:
        fresh = Codec(session)
        lengths = fresh.lengths(len(stego))
        start = time.perf_counter()
        for (p, _), length in zip(truth, lengths):
            cond = ConditionalPrompt(session.table.entry(p), length)
            sample_batch_ids(model, cond, fresh.latents, session.steps, session.workers)
        report.mean_seconds_per_sentence = (time.perf_counter() - start) / len(stego)
    text = report.to_text()
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_acer(args) -> int:
    """In-process attack sweep: hide-free ACER of an existing stego file per (n, regime)."""
    session = session_from_args(args)
    stego = read_sentences(_require(args.stego, "stego"))
    codec = Codec(session)
    truth = codec.extract_report(stego)
    if any(isinstance(t, SentenceError) for t in truth):
        raise ConfigError("unattacked stego does not extract cleanly")
    report = MetricReport(bpw=bpw(stego, session.spec))
    for protect in (True, False):
        for n in args.n_values:
            cfg = AttackConfig(n, protect, args.rounds, args.attack_seed)
            counts = attack_round_counts(codec, stego, truth, cfg)
            label = regime_label(n, protect)
            report.counts[label] = counts
            report.acer[label] = acer(counts, len(stego))
    text = report.to_text(with_timing=False)
    if args.report:
        Path(args.report).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _session_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--session", help="key=value session file (flags override it)")
    p.add_argument("--model")
    p.add_argument("--table")
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--lmin", type=int)
    p.add_argument("--lmax", type=int)
    p.add_argument("--steps", help="inference step count, or comma-separated timesteps")
    p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diffstego", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a toy diffusion model")
    p.add_argument("--corpus", help="one sentence per line (default: bundled toy corpus)")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--hidden", type=int, default=32)
    p.add_argument("--max-len", type=int, default=25)
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-3)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("make-table", help="prompt table from frequent corpus openings")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus")
    p.add_argument("--size", type=int, default=16)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_make_table)

    p = sub.add_parser("filter", help="drop prompts the model does not preserve")
    p.add_argument("--model", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("hide", help="hide a payload file in generated sentences")
    _session_flags(p)
    p.add_argument("--payload", required=True)
    p.add_argument("--stego", required=True, help="output stego text file")
    p.add_argument("--bits", type=int, help="hide only the first BITS bits of the payload")
    p.set_defaults(func=cmd_hide)

    p = sub.add_parser("extract", help="recover a payload from stego text")
    _session_flags(p)
    p.add_argument("--stego", required=True)
    p.add_argument("--payload", required=True, help="output payload file")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("attack", help="write randomly word-replaced copies of a stego file")
    p.add_argument("--stego", required=True)
    p.add_argument("--model", required=True, help="model whose vocabulary supplies replacements")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--protect-prompt", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("eval", help="bpw, KLD, ACER and timing report")
    _session_flags(p)
    p.add_argument("--stego", required=True)
    p.add_argument("--cover")
    p.add_argument("--attacked", nargs="*", help="directories written by the attack command")
    p.add_argument("--report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("acer", help="in-process replacement-attack sweep over n and both regimes")
    _session_flags(p)
    p.add_argument("--stego", required=True)
    p.add_argument("--n-values", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--attack-seed", type=int, default=0)
    p.add_argument("--report")
    p.set_defaults(func=cmd_acer)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CollisionDetected as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COLLISION
    except (ConfigError, StegoError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
