"""Command-line entry point: ``bpemolgan <command> ...``.

Exit codes: 0 success, 1 domain error (bad data, divergence, mismatched
artifacts), 2 usage error (bad arguments, missing files, bad config).
Set ``BPEMOLGAN_LOG`` to DEBUG, INFO (default), WARNING or ERROR.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .gan.config import ConfigError, DiscriminatorConfig, from_dict
from .gan.models import Discriminator
from .gan.training import Trainer, checkpoint_path, load_generator, train
from .metrics import MetricsError, embed_and_project, evaluate, uniqueness_rate
from .neural.checkpoint import CheckpointError, file_hash
from .neural.checkpoint import load as load_checkpoint
from .neural.functional import DivergenceError
from .properties import crippen_logp, property_histogram, write_histogram_csv
from .runconfig import load_run_config
from .smiles import SmilesError, check_valence, is_valid, parse_smiles
from .svgplot import histogram_svg, scatter_svg
from .tokenizer import Tokenizer, TokenizerError

log = logging.getLogger("bpemolgan")

METRICS_COLUMNS = [
    "step", "d_loss", "g_loss", "baseline", "mean_reward", "reward_min", "reward_max", "validity", "uniqueness",
]
SAMPLE_CHUNK = 1000
EMBEDDING_POOLING = "mean over unpadded positions of the bidirectional LSTM states"


class UsageError(Exception):
    pass


class DomainError(Exception):
    pass


# shared helpers


def _require(path: Path, what: str) -> Path:
    if not Path(path).is_file():
        raise UsageError(f"{what} not found: {path}")
    return Path(path)


def read_lines(path: Path) -> list[str]:
    """Non-blank, non-comment lines with surrounding whitespace removed (LF or CRLF)."""
    text = Path(path).read_bytes().decode("utf-8")
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]


def read_generated(path: Path) -> list[str]:
    """Every line after the leading ``#`` header block, blank ones included.

    An empty sample is an invalid sample, and a sample may itself start with
    ``#`` (a triple bond), so only the header block is skipped.
    """
    lines = Path(path).read_bytes().decode("utf-8").splitlines()
    k = 0
    while k < len(lines) and lines[k].startswith("#"):
        k += 1
    return [ln.strip() for ln in lines[k:]]


def artifact_header(command: str, params: dict, inputs: list[Path], seed: int | None = None) -> dict:
    """Provenance for an output artifact.

    The config hash covers the command, its parameters and the bytes of its
    inputs, so equal headers imply equal deterministic outputs. Output paths
    are deliberately not part of it.
    """
    h = hashlib.sha256()
    h.update(json.dumps({"command": command, "params": params}, sort_keys=True, default=str).encode())
    for p in inputs:
        h.update(file_hash(p).encode())
    return {"tool": "bpemolgan", "version": __version__, "command": command, "config": h.hexdigest()[:16], "seed": seed}


def header_text(header: dict) -> str:
    return " ".join(f"{k}={header[k]}" for k in ("tool", "version", "command", "config", "seed"))


def _write_text(path: Path, lines: list[str]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("".join(ln + "\n" for ln in lines), encoding="utf-8")


# ingest


def cmd_ingest(args) -> int:
    src = _require(args.input, "corpus")
    raw = src.read_bytes().decode("utf-8").splitlines()
    stats = {"lines": 0, "blank": 0, "comments": 0, "invalid": 0, "duplicates": 0, "too_long": 0, "kept": 0}
    kept, seen = [], set()
    tok = Tokenizer.load(_require(args.vocab, "vocabulary")) if args.vocab else None
    for line in raw:
        s = line.strip()
        if not s:
            stats["blank"] += 1
            continue
        if s.startswith("#"):
            stats["comments"] += 1
            continue
        stats["lines"] += 1
        if not is_valid(s):
            stats["invalid"] += 1
            log.debug("dropping invalid line %r", s)
            continue
        if s in seen:
            stats["duplicates"] += 1
            continue
        if tok is not None and len(tok.encode(s)) > args.max_len:
            stats["too_long"] += 1
            continue
        seen.add(s)
        kept.append(s)
    if not kept:
        raise DomainError(f"{src}: no valid SMILES lines")
    stats["kept"] = len(kept)
    stats["byte_alphabet"] = "".join(sorted({chr(b) for s in kept for b in s.encode()}))
    if tok is not None:
        stats["max_token_length"] = max(len(tok.encode(s)) for s in kept)
    params = {"max_len": args.max_len if tok else None}
    inputs = [src] + ([Path(args.vocab)] if tok else [])
    header = artifact_header("ingest", params, inputs)
    _write_text(args.output, ["# " + header_text(header)] + kept)
    log.info(
        "kept %d of %d lines (%d invalid, %d duplicates, %d too long)",
        stats["kept"], stats["lines"], stats["invalid"], stats["duplicates"], stats["too_long"],
    )
    print(json.dumps(stats, sort_keys=True))
    return 0


# tokenizer


def cmd_tok_train(args) -> int:
    src = _require(args.corpus, "corpus")
    corpus = read_lines(src)
    if not corpus:
        raise DomainError(f"{src}: empty corpus")
    tok = Tokenizer.train(corpus, args.vocab_size)
    header = artifact_header("tok-train", {"vocab_size": args.vocab_size}, [src])
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    tok.save(args.output, header)
    print(f"vocab size {tok.size}")
    for a, b, new in tok.merges.merges[:10]:
        print(f"merge {new}: {tok.vocab.token_text(a)!r} + {tok.vocab.token_text(b)!r} -> {tok.vocab.token_text(new)!r}")
    return 0


def _split_keep_ends(path: Path) -> list[str]:
    return path.read_bytes().decode("utf-8").split("\n")


ENCODED_HEADER = "#@ "


def cmd_tok_encode(args) -> int:
    """One line of space-separated ids per input line (EOS included).

    Comment lines pass through unchanged so decoding restores them.
    """
    vocab = _require(args.vocab, "vocabulary")
    src = _require(args.input, "input")
    tok = Tokenizer.load(vocab)
    pieces = _split_keep_ends(src)
    out = [ENCODED_HEADER + header_text(artifact_header("tok-encode", {}, [vocab, src]))]
    for k, line in enumerate(pieces):
        if k == len(pieces) - 1 and line == "":
            continue  # text after the final newline
        if line.startswith("#"):
            out.append(line)
        else:
            out.append(" ".join(map(str, tok.encode(line).ids)))
    trailing = pieces[-1] != ""
    if trailing:
        out.append(ENCODED_HEADER + "no-final-newline")
    _write_text(args.output, out)
    return 0


def cmd_tok_decode(args) -> int:
    vocab = _require(args.vocab, "vocabulary")
    src = _require(args.input, "input")
    tok = Tokenizer.load(vocab)
    lines = []
    final_newline = True
    for line in src.read_text(encoding="utf-8").splitlines():
        if line.startswith(ENCODED_HEADER):
            final_newline = final_newline and line != ENCODED_HEADER + "no-final-newline"
            continue
        if line.startswith("#"):
            lines.append(line)
            continue
        try:
            ids = [int(x) for x in line.split()]
        except ValueError as exc:
            raise DomainError(f"not a token id line: {line!r}") from exc
        lines.append(tok.decode(ids))
    text = "\n".join(lines) + ("\n" if final_newline and lines else "")
    Path(args.output).parent.mkdir(parents=True, exist_ok=True)
    Path(args.output).write_bytes(text.encode("utf-8"))
    return 0


# training


def _latest_checkpoint(directory: Path) -> Path | None:
    found = sorted(directory.glob("step_*.ckpt"))
    return found[-1] if found else None


def _load_corpus_ids(tok: Tokenizer, corpus: list[str], max_len: int):
    keep = [s for s in corpus if len(tok.encode(s)) <= max_len]
    if len(keep) < len(corpus):
        log.info("dropped %d sequences longer than %d tokens", len(corpus) - len(keep), max_len)
    if not keep:
        raise DomainError("no training sequences fit within max_len")
    return tok.encode_batch(keep, max_len)


def _fmt(x) -> str:
    return repr(float(x))


def _sample_smiles(gen, tok: Tokenizer, n: int, seed: int, stream: str) -> list[str]:
    out = []
    for chunk, lo in enumerate(range(0, n, SAMPLE_CHUNK)):
        batch = gen.sample(min(SAMPLE_CHUNK, n - lo), seed, chunk, stream=stream)
        out.extend(tok.decode(row) for row in batch.tokens)
    return out


def sample_quality(smiles: list[str]) -> tuple[float, float]:
    valid = [s for s in smiles if is_valid(s)]
    validity = len(valid) / len(smiles) if smiles else 0.0
    return validity, (uniqueness_rate(valid) if valid else 0.0)


def cmd_train(args) -> int:
    cfg = load_run_config(_require(args.config, "config"))
    if args.max_steps is not None:
        cfg.train = replace(cfg.train, max_steps=args.max_steps)
    paths = cfg.paths
    corpus_path = _require(paths["corpus"], "corpus")
    vocab_path = _require(paths["vocab"], "vocabulary")
    tok = Tokenizer.load(vocab_path)
    gcfg = cfg.generator_config(tok.size)
    dcfg = cfg.discriminator_config(tok.size)
    ids, lens = _load_corpus_ids(tok, read_lines(corpus_path), gcfg.max_len)

    params = {k: v for k, v in cfg.to_dict().items() if k != "paths"}
    header = artifact_header("train", params, [corpus_path, vocab_path], cfg.seed)
    ckdir = Path(paths["checkpoints"])
    ckdir.mkdir(parents=True, exist_ok=True)
    latest = _latest_checkpoint(ckdir)
    if latest is not None:
        trainer = Trainer.load(latest, ids, lens, cfg.train)
        if trainer.gen_cfg.vocab_size != tok.size:
            raise DomainError(f"checkpoint vocabulary size {trainer.gen_cfg.vocab_size} != {tok.size}")
        log.info("resuming from %s at step %d", latest, trainer.step)
    else:
        trainer = Trainer(gcfg, dcfg, cfg.train, ids, lens)
        trainer.pretrain()
        trainer.save(checkpoint_path(ckdir, 0), {"header": header})

    metrics_path = Path(paths["metrics"])
    metrics_path.parent.mkdir(parents=True, exist_ok=True)
    rows = []
    if latest is not None and metrics_path.exists():
        with open(metrics_path, encoding="utf-8") as fh:
            body = [ln for ln in fh if not ln.startswith("#")]
        rows = [r for r in csv.DictReader(body) if int(r["step"]) <= trainer.step]
    with open(metrics_path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# " + header_text(header) + "\n")
        w = csv.DictWriter(fh, METRICS_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)

    def evaluate_fn(tr: Trainer) -> dict:
        smiles = _sample_smiles(tr.gen, tok, tr.cfg.eval_samples, tr.seed, f"eval.{tr.step}")
        validity, uniqueness = sample_quality(smiles)
        return {"validity": validity, "uniqueness": uniqueness}

    def log_row(tr: Trainer, rec) -> None:
        if "validity" not in rec.extra:
            return
        # reward bounds cover every step since the start of adversarial training
        lo, hi = tr.reward_bounds
        row = [rec.step, _fmt(rec.d_loss), _fmt(rec.g_loss), _fmt(rec.baseline), _fmt(rec.mean_reward),
               _fmt(lo), _fmt(hi), _fmt(rec.extra["validity"]), _fmt(rec.extra["uniqueness"])]
        with open(metrics_path, "a", newline="", encoding="utf-8") as fh:
            csv.writer(fh, lineterminator="\n").writerow(row)
        log.info("step %d: d_loss %.4f g_loss %.4f validity %.3f uniqueness %.3f",
                 rec.step, rec.d_loss, rec.g_loss, rec.extra["validity"], rec.extra["uniqueness"])

    try:
        for _ in train(trainer, ckdir, evaluate_fn, (log_row,), {"header": header}):
            pass
    except DivergenceError as exc:
        last = _latest_checkpoint(ckdir)
        raise DomainError(f"training diverged ({exc}); last good checkpoint: {last}") from exc
    return 0


# sampling


def cmd_sample(args) -> int:
    ckpt = _require(args.checkpoint, "checkpoint")
    vocab = _require(args.vocab, "vocabulary")
    if args.n < 0:
        raise UsageError("-n must be non-negative")
    tok = Tokenizer.load(vocab)
    gen, _ = load_generator(ckpt)
    if gen.cfg.vocab_size != tok.size:
        raise DomainError(f"checkpoint expects {gen.cfg.vocab_size} tokens but the vocabulary has {tok.size}")
    header = artifact_header("sample", {"n": args.n}, [ckpt, vocab], args.seed)
    smiles = _sample_smiles(gen, tok, args.n, args.seed, "sample")
    _write_text(args.output, ["# " + header_text(header), f"#seed={args.seed}", f"#checkpoint-hash={file_hash(ckpt)}"] + smiles)
    return 0


# evaluation


def _load_discriminator(path: Path) -> Discriminator:
    stores, meta = load_checkpoint(path)
    if "discriminator" not in stores:
        raise DomainError(f"{path} holds no discriminator")
    return Discriminator(from_dict(DiscriminatorConfig, meta["discriminator"]), stores["discriminator"])


def _logps(smiles: list[str]) -> list[float]:
    out = []
    for s in smiles:
        try:
            g = parse_smiles(s)
        except SmilesError:
            continue
        if not check_valence(g):
            out.append(crippen_logp(g))
    return out


def cmd_eval(args) -> int:
    gen_path = _require(args.generated, "generated file")
    train_path = _require(args.training, "training file")
    generated = read_generated(gen_path)
    training = read_lines(train_path)
    if not generated:
        raise DomainError(f"{gen_path}: no generated molecules")
    if not training:
        raise DomainError(f"{train_path}: no training molecules")
    inputs = [gen_path, train_path]
    if args.checkpoint:
        inputs += [_require(args.checkpoint, "checkpoint"), _require(args.vocab, "vocabulary")]
    params = {"bins": args.bins, "dims": args.dims, "max_pairs": args.max_pairs, "svg": args.svg}
    header = artifact_header("eval", params, inputs, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    report = evaluate(generated, training, args.max_pairs, args.seed)
    gen_logp, train_logp = _logps(generated), _logps(training)
    if not gen_logp:
        raise DomainError("no valid generated molecules to score")
    hist_g = property_histogram(gen_logp, args.bins)
    hist_t = property_histogram(train_logp, args.bins)
    write_histogram_csv(out / "logp_histogram.csv", hist_g, hist_t, [header_text(header)])

    embedding = None
    if args.checkpoint:
        tok = Tokenizer.load(args.vocab)
        disc = _load_discriminator(Path(args.checkpoint))
        if disc.cfg.vocab_size != tok.size:
            raise DomainError("checkpoint and vocabulary sizes differ")
        proj = embed_and_project(disc, tok, generated, training, args.dims, args.seed)
        proj.write_csv(out / "projection.csv", [header_text(header), f"pooling: {EMBEDDING_POOLING}"])
        embedding = {"pooling": EMBEDDING_POOLING, "dims": args.dims, "variances": proj.variances.tolist(), "rows": len(proj.labels)}
        if args.svg:
            (out / "projection.svg").write_text(
                scatter_svg(proj.labels, proj.coords[:, 0], proj.coords[:, 1], "Discriminator embeddings"), encoding="utf-8"
            )
    if args.svg:
        (out / "logp_histogram.svg").write_text(
            histogram_svg(hist_g.bin_edges, {"generated": hist_g.counts, "training": hist_t.counts}, "Scaled logP"),
            encoding="utf-8",
        )
    doc = {
        "header": header,
        "metrics": report.to_dict(),
        "properties": {"logp": {"generated": hist_g.summary(), "training": hist_t.summary()}, "qed": None, "sa": None},
        "embedding": embedding,
        "config": params,
    }
    (out / "report.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bpemolgan", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"bpemolgan {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("ingest", help="clean a SMILES corpus")
    s.add_argument("input", type=Path)
    s.add_argument("-o", "--output", type=Path, required=True)
    s.add_argument("--vocab", type=Path, help="also drop lines longer than --max-len tokens")
    s.add_argument("--max-len", type=int, default=64)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("tok-train", help="train the byte-pair vocabulary")
    s.add_argument("corpus", type=Path)
    s.add_argument("-o", "--output", type=Path, required=True)
    s.add_argument("--vocab-size", type=int, default=1024)
    s.set_defaults(func=cmd_tok_train)

    for name, func, what in (("tok-encode", cmd_tok_encode, "SMILES to token ids"), ("tok-decode", cmd_tok_decode, "token ids to SMILES")):
        s = sub.add_parser(name, help=what)
        s.add_argument("input", type=Path)
        s.add_argument("--vocab", type=Path, required=True)
        s.add_argument("-o", "--output", type=Path, required=True)
        s.set_defaults(func=func)

    s = sub.add_parser("train", help="pretrain and adversarially train from an INI config")
    s.add_argument("--config", type=Path, required=True)
    s.add_argument("--max-steps", type=int, help="override [train] max_steps")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("sample", help="draw SMILES from a checkpoint")
    s.add_argument("--checkpoint", type=Path, required=True)
    s.add_argument("--vocab", type=Path, required=True)
    s.add_argument("-n", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", type=Path, required=True)
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("eval", help="metrics, logP histograms and embedding projection")
    s.add_argument("generated", type=Path)
    s.add_argument("training", type=Path)
    s.add_argument("--out-dir", type=Path, required=True)
    s.add_argument("--checkpoint", type=Path, help="discriminator for the embedding projection")
    s.add_argument("--vocab", type=Path)
    s.add_argument("--dims", type=int, choices=(2, 3), default=2)
    s.add_argument("--bins", type=int, default=20)
    s.add_argument("--max-pairs", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--svg", action="store_true", help="also write SVG plots")
    s.set_defaults(func=cmd_eval)
    return p


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("BPEMOLGAN_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "checkpoint", None) and args.command == "eval" and not args.vocab:
        print("bpemolgan: error: --checkpoint needs --vocab", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"bpemolgan: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, SmilesError, TokenizerError, CheckpointError, MetricsError, DivergenceError, ValueError) as exc:
        print(f"bpemolgan: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
