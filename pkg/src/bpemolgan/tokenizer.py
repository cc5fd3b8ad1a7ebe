"""Byte-level BPE over SMILES strings.

The initial vocabulary is the four special tokens followed by every byte that
occurs in the training corpus (sorted). Training repeatedly merges the most
frequent adjacent pair, breaking ties by the smaller (left bytes, right bytes)
pair, and stops at the target size or when no pair occurs twice. Bytes never
seen in training encode to UNK; the GPT-2 alternative of seeding with all 256
byte values is not used.
"""

from __future__ import annotations

import heapq
import json
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIAL_NAMES = ("<pad>", "<bos>", "<eos>", "<unk>")
FORMAT_VERSION = 1


class TokenizerError(ValueError):
    pass


@dataclass(frozen=True)
class Vocab:
    id_to_token: tuple[bytes, ...]  # specials hold b"" and are looked up by id
    n_initial: int

    @property
    def size(self) -> int:
        return len(self.id_to_token)

    @property
    def specials(self) -> dict[str, int]:
        return dict(zip(SPECIAL_NAMES, (PAD, BOS, EOS, UNK)))

    @property
    def token_to_id(self) -> dict[bytes, int]:
        return {tok: i for i, tok in enumerate(self.id_to_token) if i >= len(SPECIAL_NAMES)}

    def token_text(self, idx: int) -> str:
        if idx < len(SPECIAL_NAMES):
            return SPECIAL_NAMES[idx]
        return self.id_to_token[idx].decode("latin-1")


@dataclass(frozen=True)
class MergeTable:
    merges: tuple[tuple[int, int, int], ...]  # (left id, right id, new id) in training order

    def __len__(self) -> int:
        return len(self.merges)

    @property
    def ranks(self) -> dict[tuple[int, int], int]:
        return {(a, b): k for k, (a, b, _) in enumerate(self.merges)}


@dataclass
class TokenSequence:
    ids: list[int]
    max_len: int | None = None
    length: int = field(init=False)

    def __post_init__(self) -> None:
        self.length = len(self.ids)
        if self.max_len is not None and self.length > self.max_len:
            raise TokenizerError(f"sequence of {self.length} tokens exceeds T={self.max_len}")

    def padded(self, max_len: int | None = None) -> list[int]:
        t = max_len or self.max_len or self.length
        return self.ids + [PAD] * (t - self.length)

    def __len__(self) -> int:
        return self.length


def _merge_pair(seq: list[int], a: int, b: int, new: int) -> list[int]:
    out = []
    i = 0
    n = len(seq)
    while i < n:
        if i + 1 < n and seq[i] == a and seq[i + 1] == b:
            out.append(new)
            i += 2
        else:
            out.append(seq[i])
            i += 1
    return out


def _initial_vocab(corpus: list[str]) -> tuple[list[bytes], dict[int, int]]:
    alphabet = sorted({byte for s in corpus for byte in s.encode("utf-8")})
    tokens = [b""] * len(SPECIAL_NAMES) + [bytes([c]) for c in alphabet]
    byte_id = {c: len(SPECIAL_NAMES) + k for k, c in enumerate(alphabet)}
    return tokens, byte_id


def train_bpe(corpus: list[str], target_size: int) -> tuple[Vocab, MergeTable]:
    """Learn a vocabulary of at most ``target_size`` tokens from ``corpus``."""
    if not corpus:
        raise TokenizerError("corpus is empty")
    tokens, byte_id = _initial_vocab(corpus)
    if target_size < len(tokens):
        raise TokenizerError(
            f"vocab size {target_size} is smaller than the initial vocabulary ({len(tokens)})"
        )

    # each distinct string is a "word" weighted by its multiplicity
    counts = Counter(corpus)
    words = [[byte_id[c] for c in s.encode("utf-8")] for s in counts]
    weights = list(counts.values())

    pair_counts: Counter = Counter()
    where: dict[tuple[int, int], set[int]] = {}
    for w, (seq, wt) in enumerate(zip(words, weights)):
        for pair in zip(seq, seq[1:]):
            pair_counts[pair] += wt
            where.setdefault(pair, set()).add(w)

    # lazy max-heap keyed by (-count, left bytes, right bytes); stale entries
    # are skipped when their count no longer matches
    heap = [(-c, tokens[p[0]], tokens[p[1]], p) for p, c in pair_counts.items()]
    heapq.heapify(heap)

    merges = []
    while len(tokens) < target_size:
        best = None
        while heap:
            neg, _, _, pair = heapq.heappop(heap)
            if pair_counts.get(pair, 0) == -neg:
                best = pair
                break
        if best is None or pair_counts[best] < 2:
            break
        a, b = best
        new = len(tokens)
        tokens.append(tokens[a] + tokens[b])
        merges.append((a, b, new))
        touched = set()
        for w in sorted(where.get(best, ())):
            seq, wt = words[w], weights[w]
            merged = _merge_pair(seq, a, b, new)
            if len(merged) == len(seq):
                continue
            before = Counter(zip(seq, seq[1:]))
            after = Counter(zip(merged, merged[1:]))
            words[w] = merged
            for pair, c in before.items():
                d = after.get(pair, 0) - c
                if d:
                    pair_counts[pair] += d * wt
                    touched.add(pair)
            for pair, c in after.items():
                if pair not in before:
                    pair_counts[pair] += c * wt
                    where.setdefault(pair, set()).add(w)
                    touched.add(pair)
        where.pop(best, None)
        for pair in touched:
            c = pair_counts[pair]
            if c <= 0:
                del pair_counts[pair]
            else:
                heapq.heappush(heap, (-c, tokens[pair[0]], tokens[pair[1]], pair))
    return Vocab(tuple(tokens), len(SPECIAL_NAMES) + len(byte_id)), MergeTable(tuple(merges))


class Tokenizer:
    """A trained vocabulary plus its merge table, with encode/decode."""

    def __init__(self, vocab: Vocab, merges: MergeTable):
        self.vocab = vocab
        self.merges = merges
        self._ranks = merges.ranks
        self._new_id = {(a, b): new for a, b, new in merges.merges}
        self._byte_id = {
            tok[0]: i
            for i, tok in enumerate(vocab.id_to_token[: vocab.n_initial])
            if i >= len(SPECIAL_NAMES)
        }
        self._encode_cached = lru_cache(maxsize=65536)(self._encode_ids)

    @classmethod
    def train(cls, corpus: list[str], target_size: int) -> Tokenizer:
        return cls(*train_bpe(corpus, target_size))

    @property
    def size(self) -> int:
        return self.vocab.size

    def _encode_ids(self, text: str) -> tuple[int, ...]:
        seq = [self._byte_id.get(c, UNK) for c in text.encode("utf-8")]
        ranks = self._ranks
        while len(seq) >= 2:
            best_rank, best = None, None
            for pair in zip(seq, seq[1:]):
                r = ranks.get(pair)
                if r is not None and (best_rank is None or r < best_rank):
                    best_rank, best = r, pair
            if best is None:
                break
            seq = _merge_pair(seq, best[0], best[1], self._new_id[best])
        return tuple(seq)

    def encode(self, text: str, max_len: int | None = None) -> TokenSequence:
        """Token ids for ``text`` followed by EOS."""
        return TokenSequence(list(self._encode_cached(text)) + [EOS], max_len)

    def decode(self, ids) -> str:
        """Concatenate token bytes up to the first EOS, skipping PAD/BOS."""
        if isinstance(ids, TokenSequence):
            ids = ids.ids
        out = bytearray()
        size = self.vocab.size
        for i in ids:
            i = int(i)
            if i < 0 or i >= size:
                raise TokenizerError(f"token id {i} outside vocabulary of size {size}")
            if i == EOS:
                break
            if i in (PAD, BOS):
                continue
            if i == UNK:
                out += b"?"
                continue
            out += self.vocab.id_to_token[i]
        return out.decode("utf-8", errors="replace")

    def encode_batch(self, texts: list[str], max_len: int) -> tuple[np.ndarray, np.ndarray]:
        """(ids, lengths) padded to ``max_len``; raises if any text is too long."""
        ids = np.full((len(texts), max_len), PAD, dtype=np.int64)
        lengths = np.zeros(len(texts), dtype=np.int64)
        for r, text in enumerate(texts):
            seq = self.encode(text, max_len)
            ids[r, : seq.length] = seq.ids
            lengths[r] = seq.length
        return ids, lengths

    # persistence

    def to_json(self, header: dict | None = None) -> str:
        tokens = [
            SPECIAL_NAMES[i] if i < len(SPECIAL_NAMES) else escape_bytes(tok)
            for i, tok in enumerate(self.vocab.id_to_token)
        ]
        doc = {
            "version": FORMAT_VERSION,
            "specials": self.vocab.specials,
            "n_initial": self.vocab.n_initial,
            "tokens": tokens,
            "merges": [[a, b] for a, b, _ in self.merges.merges],
        }
        if header is not None:
            doc["header"] = header
        return json.dumps(doc, indent=1, ensure_ascii=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> Tokenizer:
        doc = json.loads(text)
        if doc.get("version") != FORMAT_VERSION:
            raise TokenizerError(f"unsupported vocabulary format version {doc.get('version')!r}")
        if doc["specials"] != dict(zip(SPECIAL_NAMES, (PAD, BOS, EOS, UNK))):
            raise TokenizerError("unexpected special token ids")
        raw = doc["tokens"]
        tokens = [b""] * len(SPECIAL_NAMES) + [unescape_bytes(t) for t in raw[len(SPECIAL_NAMES) :]]
        n_initial = doc["n_initial"]
        merges = []
        for k, (a, b) in enumerate(doc["merges"]):
            new = n_initial + k
            if not (a < new and b < new) or tokens[new] != tokens[a] + tokens[b]:
                raise TokenizerError(f"merge {k} is inconsistent with the token table")
            merges.append((a, b, new))
        if n_initial + len(merges) != len(tokens):
            raise TokenizerError("token count does not match initial vocabulary plus merges")
        return cls(Vocab(tuple(tokens), n_initial), MergeTable(tuple(merges)))

    def save(self, path: str | Path, header: dict | None = None) -> None:
        Path(path).write_text(self.to_json(header), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> Tokenizer:
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def escape_bytes(tok: bytes) -> str:
    r"""Printable ASCII other than backslash stays literal; the rest is \xNN."""
    return "".join(chr(c) if 0x21 <= c <= 0x7E and c != 0x5C else f"\\x{c:02x}" for c in tok)


def unescape_bytes(text: str) -> bytes:
    out = bytearray()
    i = 0
    while i < len(text):
        if text[i] == "\\":
            if text[i + 1] != "x":
                raise TokenizerError(f"bad escape in token {text!r}")
            out.append(int(text[i + 2 : i + 4], 16))
            i += 4
        else:
            out.append(ord(text[i]))
            i += 1
    return bytes(out)
