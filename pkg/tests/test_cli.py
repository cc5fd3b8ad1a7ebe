import csv
import json
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from bpemolgan import __version__, cli
from bpemolgan.neural.checkpoint import load as load_checkpoint
from bpemolgan.neural.functional import DivergenceError
from bpemolgan.tokenizer import Tokenizer

DATA = Path(__file__).parent / "data"

SUMMARY = {
    "name": str, "n": int, "mean": float, "median": float, "raw_mean": float,
    "window": list, "bin_edges": list, "counts": list, "qed": type(None), "sa": type(None),
}
# the report.json layout documented in the README
REPORT_SCHEMA = {
    "header": {"tool": str, "version": str, "command": str, "config": str, "seed": int},
    "metrics": {
        "validity": float, "uniqueness": float, "novelty": float, "diversity": float,
        "n_generated": int, "n_valid": int, "n_unique": int, "n_novel": int, "diversity_pairs": int,
    },
    "properties": {"logp": {"generated": SUMMARY, "training": SUMMARY}, "qed": type(None), "sa": type(None)},
    "embedding": (type(None), {"pooling": str, "dims": int, "variances": list, "rows": int}),
    "config": {"bins": int, "dims": int, "max_pairs": int, "svg": bool},
}


def conforms(value, schema, where="$"):
    """Exact-key structural check; a tuple lists alternatives."""
    if isinstance(schema, tuple):
        errors = [conforms(value, alt, where) for alt in schema]
        return "" if "" in errors else errors[0]
    if isinstance(schema, dict):
        if not isinstance(value, dict):
            return f"{where}: expected object"
        if set(value) != set(schema):
            return f"{where}: keys {sorted(value)} != {sorted(schema)}"
        for k, sub in schema.items():
            err = conforms(value[k], sub, f"{where}.{k}")
            if err:
                return err
        return ""
    if schema is float and isinstance(value, int) and not isinstance(value, bool):
        return ""
    if schema is int and isinstance(value, bool):
        return f"{where}: expected int, got bool"
    return "" if isinstance(value, schema) else f"{where}: expected {schema.__name__}"


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    lines = (DATA / "zinc_toy500.smi").read_text().splitlines()[:60]
    (root / "raw.smi").write_text("\n".join(lines) + "\n")
    assert run("ingest", root / "raw.smi", "-o", root / "clean.smi") == 0
    assert run("tok-train", root / "clean.smi", "-o", root / "vocab.json", "--vocab-size", 80) == 0
    return root


def write_config(root: Path, name: str, **train) -> Path:
    opts = dict(batch_size=8, max_steps=4, pretrain_epochs=1, eval_every=2, checkpoint_every=2,
                eval_samples=20, seed=3)
    opts.update(train)
    body = "\n".join(f"{k} = {v}" for k, v in opts.items())
    path = root / f"{name}.ini"
    path.write_text(
        f"[paths]\ncorpus = clean.smi\nvocab = vocab.json\ncheckpoints = {name}/ckpt\nmetrics = {name}/metrics.csv\n\n"
        "[generator]\nhidden_size = 16\nembedding_dim = 8\nnoise_dim = 4\n\n"
        "[discriminator]\nhidden_size = 8\nembedding_dim = 8\n\n"
        f"[train]\n{body}\n"
    )
    return path


def csv_rows(path: Path):
    return list(csv.DictReader(ln for ln in path.read_text().splitlines() if not ln.startswith("#")))


# ingest


def test_ingest_counts(tmp_path, capsys):
    src = tmp_path / "in.smi"
    src.write_text("CCO\nc1ccccc1\nC1CC\nCC(=O)O\n")
    assert run("ingest", src, "-o", tmp_path / "out.smi") == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["kept"] == 3 and stats["invalid"] == 1
    lines = (tmp_path / "out.smi").read_text().splitlines()
    assert lines[0].startswith("# tool=bpemolgan") and lines[1:] == ["CCO", "c1ccccc1", "CC(=O)O"]


def test_ingest_is_idempotent(workspace, tmp_path, capsys):
    capsys.readouterr()
    assert run("ingest", workspace / "clean.smi", "-o", tmp_path / "again.smi") == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["invalid"] == 0 and stats["duplicates"] == 0
    assert cli.read_lines(tmp_path / "again.smi") == cli.read_lines(workspace / "clean.smi")


def test_ingest_line_endings(tmp_path):
    (tmp_path / "lf.smi").write_bytes(b"CCO\nCCN\n")
    (tmp_path / "crlf.smi").write_bytes(b"CCO\r\nCCN\r\n")
    assert run("ingest", tmp_path / "lf.smi", "-o", tmp_path / "a.smi") == 0
    assert run("ingest", tmp_path / "crlf.smi", "-o", tmp_path / "b.smi") == 0
    assert cli.read_lines(tmp_path / "a.smi") == cli.read_lines(tmp_path / "b.smi") == ["CCO", "CCN"]


def test_ingest_all_invalid_is_domain_error(tmp_path):
    (tmp_path / "bad.smi").write_text("C1CC\nxyz\n")
    assert run("ingest", tmp_path / "bad.smi", "-o", tmp_path / "o.smi") == 1


# tokenizer commands


def test_tok_train_output(workspace, tmp_path, capsys):
    assert run("tok-train", workspace / "clean.smi", "-o", tmp_path / "v.json", "--vocab-size", 1024) == 0
    out = capsys.readouterr().out.splitlines()
    size = int(out[0].split()[-1])
    assert size <= 1024 and Tokenizer.load(tmp_path / "v.json").size == size
    assert 1 <= len(out) - 1 <= 10 and all(ln.startswith("merge ") for ln in out[1:])


def test_tok_round_trip_is_byte_exact(workspace, tmp_path):
    src = tmp_path / "text.smi"
    # comment, blank line and no final newline all survive
    src.write_bytes(b"# a comment\nCCO\n\nc1ccccc1\nCC(=O)O")
    assert run("tok-encode", src, "--vocab", workspace / "vocab.json", "-o", tmp_path / "ids.txt") == 0
    assert run("tok-decode", tmp_path / "ids.txt", "--vocab", workspace / "vocab.json", "-o", tmp_path / "back.smi") == 0
    assert (tmp_path / "back.smi").read_bytes() == src.read_bytes()
    clean = workspace / "clean.smi"
    assert run("tok-encode", clean, "--vocab", workspace / "vocab.json", "-o", tmp_path / "c.txt") == 0
    assert run("tok-decode", tmp_path / "c.txt", "--vocab", workspace / "vocab.json", "-o", tmp_path / "c.smi") == 0
    assert (tmp_path / "c.smi").read_bytes() == clean.read_bytes()


def test_missing_vocab_is_usage_error(workspace, tmp_path, capsys):
    assert run("tok-encode", workspace / "clean.smi", "--vocab", tmp_path / "nope.json", "-o", tmp_path / "x") == 2
    assert "vocabulary not found" in capsys.readouterr().err


def test_bad_arguments_exit_2():
    with pytest.raises(SystemExit) as exc:
        run("sample")
    assert exc.value.code == 2


# training, sampling and evaluation


@pytest.fixture(scope="module")
def trained(workspace):
    assert run("train", "--config", write_config(workspace, "run")) == 0
    return workspace / "run"


def test_train_outputs(trained):
    rows = csv_rows(trained / "metrics.csv")
    assert [int(r["step"]) for r in rows] == [2, 4]
    assert list(rows[0]) == cli.METRICS_COLUMNS
    assert all(0.0 <= float(r["validity"]) <= 1.0 for r in rows)
    first = (trained / "metrics.csv").read_text().splitlines()[0]
    assert first.startswith("# tool=bpemolgan") and f"version={__version__}" in first and "seed=3" in first
    names = sorted(p.name for p in (trained / "ckpt").iterdir())
    assert names == ["step_000000.ckpt", "step_000002.ckpt", "step_000004.ckpt"]


def test_train_resume_matches_uninterrupted(workspace, trained):
    cfg = write_config(workspace, "resumed")
    assert run("train", "--config", cfg, "--max-steps", 2) == 0
    assert len(csv_rows(workspace / "resumed" / "metrics.csv")) == 1
    assert run("train", "--config", cfg) == 0
    assert (workspace / "resumed" / "metrics.csv").read_bytes() == (trained / "metrics.csv").read_bytes()
    name = "step_000004.ckpt"
    assert (workspace / "resumed" / "ckpt" / name).read_bytes() == (trained / "ckpt" / name).read_bytes()
    # the interrupted run wrote step 2 under max_steps=2, so only its header differs
    a, meta_a = load_checkpoint(workspace / "resumed" / "ckpt" / "step_000002.ckpt")
    b, meta_b = load_checkpoint(trained / "ckpt" / "step_000002.ckpt")
    assert meta_a["train"]["max_steps"] == 2 and meta_b["train"]["max_steps"] == 4
    for store in ("generator", "discriminator"):
        assert all((a[store][n] == b[store][n]).all() for n in a[store])


def test_resume_drops_rows_past_the_checkpoint(workspace):
    cfg = write_config(workspace, "truncate", checkpoint_every=4)
    assert run("train", "--config", cfg, "--max-steps", 3) == 0
    assert [int(r["step"]) for r in csv_rows(workspace / "truncate" / "metrics.csv")] == [2, 3]
    # losing the step-3 checkpoint leaves step 0 as the newest, so rows 2 and 3 are redone
    (workspace / "truncate" / "ckpt" / "step_000003.ckpt").unlink()
    assert run("train", "--config", cfg, "--max-steps", 4) == 0
    assert [int(r["step"]) for r in csv_rows(workspace / "truncate" / "metrics.csv")] == [2, 4]


def test_divergence_names_last_checkpoint(workspace, monkeypatch, capsys):
    cfg = write_config(workspace, "diverge")
    real_step = cli.Trainer.adversarial_step

    def flaky(self):
        if self.step == 3:
            raise DivergenceError("non-finite generator loss")
        return real_step(self)

    monkeypatch.setattr(cli.Trainer, "adversarial_step", flaky)
    assert run("train", "--config", cfg) == 1
    err = capsys.readouterr().err
    assert "diverged" in err and "step_000002.ckpt" in err
    assert (workspace / "diverge" / "ckpt" / "step_000002.ckpt").exists()


def test_bad_config_is_usage_error(workspace):
    path = workspace / "bad.ini"
    path.write_text("[paths]\ncorpus = clean.smi\n")
    assert run("train", "--config", path) == 2
    path.write_text(write_config(workspace, "bad2").read_text() + "bogus = 1\n")
    assert run("train", "--config", path) == 2


def test_sample(workspace, trained, tmp_path):
    ck = trained / "ckpt" / "step_000004.ckpt"
    vocab = workspace / "vocab.json"
    assert run("sample", "--checkpoint", ck, "--vocab", vocab, "-n", 25, "--seed", 1, "-o", tmp_path / "a.smi") == 0
    assert run("sample", "--checkpoint", ck, "--vocab", vocab, "-n", 25, "--seed", 1, "-o", tmp_path / "b.smi") == 0
    a = (tmp_path / "a.smi").read_text()
    assert a == (tmp_path / "b.smi").read_text()
    lines = a.split("\n")[:-1]
    assert lines[1] == "#seed=1" and lines[2].startswith("#checkpoint-hash=")
    body = lines[3:]
    assert len(body) == 25 and not any("?" in s for s in body)


def test_sample_zero_is_header_only(workspace, trained, tmp_path):
    ck = trained / "ckpt" / "step_000004.ckpt"
    assert run("sample", "--checkpoint", ck, "--vocab", workspace / "vocab.json", "-n", 0, "-o", tmp_path / "z.smi") == 0
    assert all(ln.startswith("#") for ln in (tmp_path / "z.smi").read_text().splitlines())


def test_sample_vocab_mismatch(workspace, trained, tmp_path):
    Tokenizer.train(["CCO", "CCN"], 10).save(tmp_path / "small.json")
    ck = trained / "ckpt" / "step_000004.ckpt"
    assert run("sample", "--checkpoint", ck, "--vocab", tmp_path / "small.json", "-n", 3, "-o", tmp_path / "o") == 1


def test_eval_report(workspace, trained, tmp_path):
    gen = tmp_path / "gen.smi"
    gen.write_text("# header\nCCO\nOCC\nc1ccccc1\nC1CC\n\nCCN\n")
    out = tmp_path / "eval"
    ck = trained / "ckpt" / "step_000004.ckpt"
    assert run("eval", gen, workspace / "clean.smi", "--out-dir", out, "--checkpoint", ck,
               "--vocab", workspace / "vocab.json", "--svg") == 0
    doc = json.loads((out / "report.json").read_text())
    assert conforms(doc, REPORT_SCHEMA) == ""
    m = doc["metrics"]
    assert (m["n_generated"], m["n_valid"], m["n_unique"]) == (6, 4, 3)
    n_train = len(cli.read_lines(workspace / "clean.smi"))
    assert doc["embedding"]["rows"] == 6 + n_train
    proj = [ln for ln in (out / "projection.csv").read_text().splitlines() if not ln.startswith("#")]
    assert len(proj) == 1 + 6 + n_train
    hist = [ln for ln in (out / "logp_histogram.csv").read_text().splitlines() if not ln.startswith("#")]
    assert len(hist) == 1 + 20
    for name in ("logp_histogram.svg", "projection.svg"):
        root = ET.parse(out / name).getroot()
        assert root.tag.endswith("svg")


def test_eval_without_embedding(workspace, tmp_path):
    out = tmp_path / "e"
    assert run("eval", workspace / "clean.smi", workspace / "clean.smi", "--out-dir", out) == 0
    doc = json.loads((out / "report.json").read_text())
    assert conforms(doc, REPORT_SCHEMA) == ""
    assert doc["metrics"]["novelty"] == 0.0 and doc["embedding"] is None


def test_eval_empty_generated(workspace, tmp_path):
    (tmp_path / "empty.smi").write_text("# header only\n")
    assert run("eval", tmp_path / "empty.smi", workspace / "clean.smi", "--out-dir", tmp_path / "o") == 1


def test_equal_headers_mean_equal_bytes(workspace, tmp_path):
    for name in ("a", "b"):
        assert run("eval", workspace / "clean.smi", workspace / "clean.smi", "--out-dir", tmp_path / name) == 0
    a, b = (tmp_path / "a" / "report.json").read_bytes(), (tmp_path / "b" / "report.json").read_bytes()
    assert a == b


def test_schema_checker_rejects_drift():
    good = {"bins": 1, "dims": 2, "max_pairs": 3, "svg": False}
    assert conforms(good, REPORT_SCHEMA["config"]) == ""
    assert conforms({**good, "extra": 1}, REPORT_SCHEMA["config"]) != ""
    assert conforms({**good, "svg": "no"}, REPORT_SCHEMA["config"]) != ""


def test_console_script_runs():
    exe = shutil.which("bpemolgan")
    cmd = [exe] if exe else [sys.executable, "-m", "bpemolgan.cli"]
    res = subprocess.run(cmd + ["--version"], capture_output=True, text=True)
    assert res.returncode == 0 and __version__ in res.stdout


def test_empty_sections_give_default_hyperparameters(tmp_path):
    from bpemolgan.runconfig import load_run_config

    path = tmp_path / "c.ini"
    path.write_text("[paths]\ncorpus = a\nvocab = b\ncheckpoints = c\nmetrics = d\n[train]\n")
    cfg = load_run_config(path)
    g, d, t = cfg.generator_config(100), cfg.discriminator_config(100), cfg.train
    assert (g.learning_rate, d.learning_rate, t.batch_size) == (5e-6, 5e-6, 256)
    assert (g.dropout, d.dropout, g.grad_clip, d.grad_clip, d.l2_coefficient) == (0.1, 0.1, 0.1, 0.1, 1e-6)
    assert cfg.paths["corpus"] == tmp_path / "a" and cfg.vocab_size == 1024
