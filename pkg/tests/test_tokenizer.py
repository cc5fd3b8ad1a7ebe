import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bpe_oracle import brute_force_merges, random_corpus
from bpemolgan.tokenizer import (
    BOS,
    EOS,
    PAD,
    UNK,
    Tokenizer,
    TokenizerError,
    escape_bytes,
    train_bpe,
    unescape_bytes,
)

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def zinc_tok():
    corpus = (DATA / "zinc_toy500.smi").read_text().split()
    return Tokenizer.train(corpus, 256), corpus


def test_first_merge_is_cc():
    tok = Tokenizer.train(["CCO", "CCN"], 20)
    a, b, new = tok.merges.merges[0]
    assert tok.vocab.id_to_token[new] == b"CC"
    # (C,C) was the only pair seen twice
    assert len(tok.merges) == 1


def test_single_byte_corpus_has_no_merges():
    tok = Tokenizer.train(["C"], 10)
    assert len(tok.merges) == 0
    assert tok.size == 5


def test_target_below_initial_vocab_raises():
    with pytest.raises(TokenizerError):
        train_bpe(["CNO"], 6)
    with pytest.raises(TokenizerError):
        train_bpe([], 10)


def test_encode_examples():
    tok = Tokenizer.train(["CCO", "CCN"], 20)
    cc = tok.vocab.token_to_id[b"CC"]
    o = tok.vocab.token_to_id[b"O"]
    assert tok.encode("CCO").ids == [cc, o, EOS]
    assert tok.encode("").ids == [EOS]
    assert UNK in tok.encode("CCBr").ids


def test_encode_respects_max_len():
    tok = Tokenizer.train(["CCO"], 20)
    assert tok.encode("CCO", max_len=4).padded() == tok.encode("CCO").ids + [PAD] * (4 - len(tok.encode("CCO")))
    with pytest.raises(TokenizerError):
        tok.encode("OOOOOO", max_len=3)


def test_decode_examples():
    tok = Tokenizer.train(["CCO", "CCN", "c1ccccc1"], 30)
    cc = tok.vocab.token_to_id[b"CC"]
    o = tok.vocab.token_to_id[b"O"]
    assert tok.decode(tok.encode("c1ccccc1")) == "c1ccccc1"
    assert tok.decode([EOS]) == ""
    assert tok.decode([BOS, cc, EOS, o]) == "CC"
    assert tok.decode([BOS, cc, PAD, o]) == "CCO"
    assert tok.decode([UNK]) == "?"
    with pytest.raises(TokenizerError):
        tok.decode([tok.size])


def test_training_is_deterministic():
    corpus = random_corpus(3)
    a = Tokenizer.train(corpus, 200).to_json()
    b = Tokenizer.train(list(corpus), 200).to_json()
    assert a == b


@pytest.mark.parametrize("seed", range(25))
def test_merges_match_brute_force(seed):
    corpus = random_corpus(seed)
    target = len({c for s in corpus for c in s.encode()}) + 4 + 60
    tok = Tokenizer.train(corpus, target)
    assert list(tok.merges.merges) == brute_force_merges(corpus, target)


def test_merges_match_brute_force_on_zinc():
    corpus = (DATA / "zinc_toy500.smi").read_text().split()[:100]
    assert list(Tokenizer.train(corpus, 160).merges.merges) == brute_force_merges(corpus, 160)


def test_vocab_soundness(zinc_tok):
    tok, _ = zinc_tok
    table = tok.vocab.id_to_token
    assert all(len(t) == 1 for t in table[4 : tok.vocab.n_initial])
    for a, b, new in tok.merges.merges:
        assert a < new and b < new and a >= 4 and b >= 4
        assert table[new] == table[a] + table[b]

    def expand(i):
        if i < tok.vocab.n_initial:
            return table[i]
        a, b, _ = tok.merges.merges[i - tok.vocab.n_initial]
        return expand(a) + expand(b)

    assert all(expand(i) == table[i] for i in range(4, tok.size))


def test_monotone_compression(zinc_tok):
    tok, corpus = zinc_tok
    lengths = []
    for k in range(0, len(tok.merges) + 1, 16):
        sub = Tokenizer(tok.vocab, type(tok.merges)(tok.merges.merges[:k]))
        lengths.append([len(sub.encode(s)) for s in corpus[:50]])
    for prev, cur in zip(lengths, lengths[1:]):
        assert all(c <= p for p, c in zip(prev, cur))


def test_corpus_round_trip(zinc_tok):
    tok, corpus = zinc_tok
    assert all(tok.decode(tok.encode(s)) == s for s in corpus)


def test_json_round_trip(zinc_tok, tmp_path):
    tok, corpus = zinc_tok
    path = tmp_path / "vocab.json"
    tok.save(path, header={"seed": 1})
    back = Tokenizer.load(path)
    assert back.vocab == tok.vocab and back.merges == tok.merges
    assert back.to_json() == tok.to_json()
    doc = json.loads(path.read_text())
    assert {"version", "specials", "tokens", "merges"} <= doc.keys()


def test_json_rejects_tampering(zinc_tok):
    tok, _ = zinc_tok
    doc = json.loads(tok.to_json())
    doc["tokens"][-1] = "XX"
    with pytest.raises(TokenizerError):
        Tokenizer.from_json(json.dumps(doc))
    doc = json.loads(tok.to_json())
    doc["version"] = 99
    with pytest.raises(TokenizerError):
        Tokenizer.from_json(json.dumps(doc))


def test_encode_batch_pads(zinc_tok):
    tok, corpus = zinc_tok
    ids, lengths = tok.encode_batch(corpus[:5], 64)
    for row, n, s in zip(ids, lengths, corpus[:5]):
        assert row[n - 1] == EOS and (row[n:] == PAD).all()
        assert tok.decode(row) == s


@given(st.binary(max_size=12))
def test_escape_round_trip(raw):
    assert unescape_bytes(escape_bytes(raw)) == raw


@settings(max_examples=100, deadline=None)
@given(st.lists(st.text(alphabet="CNOc1()=#[]+H", min_size=1, max_size=30), min_size=1, max_size=20))
def test_round_trip_property(corpus):
    tok = Tokenizer.train(corpus, 60)
    for s in corpus:
        seq = tok.encode(s)
        assert seq.ids[-1] == EOS and UNK not in seq.ids
        assert tok.decode(seq) == s
