"""Set-level quality metrics and the embedding projection used for scatter plots.

Uniqueness and novelty compare canonical SMILES. Diversity is one minus the
mean pairwise Tanimoto similarity of path fingerprints.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .neural.rng import rng_for
from .smiles import canonical_smiles, fingerprint, is_valid, parse_smiles

DEFAULT_MAX_PAIRS = 100_000


class MetricsError(ValueError):
    pass


def validity_rate(generated: list[str]) -> float:
    if not generated:
        raise MetricsError("validity of an empty list is undefined")
    return sum(1 for s in generated if is_valid(s)) / len(generated)


def canonical_set(smiles: list[str]) -> set[str]:
    """Canonical forms of the valid entries."""
    out = set()
    for s in smiles:
        c = canonical_smiles(s)
        if c is not None:
            out.add(c)
    return out


def uniqueness_rate(valid: list[str]) -> float:
    if not valid:
        raise MetricsError("uniqueness of an empty list is undefined")
    canon = [canonical_smiles(s) for s in valid]
    if any(c is None for c in canon):
        raise MetricsError("uniqueness_rate expects valid molecules only")
    return len(set(canon)) / len(canon)


def novelty_rate(unique: set[str], training: set[str]) -> float:
    if not unique:
        raise MetricsError("novelty of an empty set is undefined")
    return len(unique - training) / len(unique)


def n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def unrank_pairs(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map pair indices 0..C(n,2)-1 to (i, j), i < j, ordered by j then i."""
    k = np.asarray(k, dtype=np.int64)
    j = ((1 + np.sqrt(1 + 8 * k.astype(np.float64))) // 2).astype(np.int64)
    # float rounding can land one off near triangular numbers
    j -= (j * (j - 1) // 2) > k
    j += ((j + 1) * j // 2) <= k
    return k - j * (j - 1) // 2, j


def _popcounts(bits: list[int]) -> list[int]:
    return [b.bit_count() for b in bits]


def diversity(valid: list[str], max_pairs: int | None = DEFAULT_MAX_PAIRS, seed: int = 0) -> tuple[float, int]:
    """1 - mean pairwise Tanimoto; returns (value, number of pairs used).

    All pairs are used when there are at most ``max_pairs`` of them (or
    ``max_pairs`` is None); otherwise a seeded uniform sample of distinct
    pairs is drawn.
    """
    if len(valid) < 2:
        raise MetricsError("diversity needs at least two molecules")
    bits = [fingerprint(parse_smiles(s)).bits for s in valid]
    pop = _popcounts(bits)
    total = n_pairs(len(bits))
    if max_pairs is None or total <= max_pairs:
        pairs = ((i, j) for j in range(1, len(bits)) for i in range(j))
        used = total
    else:
        k = rng_for(seed, 0, "diversity.pairs").choice(total, size=max_pairs, replace=False)
        ii, jj = unrank_pairs(np.sort(k))
        pairs = zip(ii.tolist(), jj.tolist())
        used = max_pairs
    acc = math.fsum(_tanimoto_bits(bits[i], bits[j], pop[i], pop[j]) for i, j in pairs)
    return 1.0 - acc / used, used


def _tanimoto_bits(a: int, b: int, pa: int, pb: int) -> float:
    inter = (a & b).bit_count()
    union = pa + pb - inter
    return 1.0 if union == 0 else inter / union


@dataclass
class MetricsReport:
    validity: float
    uniqueness: float
    novelty: float
    diversity: float
    n_generated: int
    n_valid: int
    n_unique: int
    n_novel: int
    diversity_pairs: int

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(
    generated: list[str],
    training: list[str] | set[str],
    max_pairs: int | None = DEFAULT_MAX_PAIRS,
    seed: int = 0,
) -> MetricsReport:
    """All four metrics. Fractions are 0.0 when their denominator is empty."""
    if not generated:
        raise MetricsError("no generated molecules")
    canon = [canonical_smiles(s) for s in generated]
    valid = [s for s, c in zip(generated, canon) if c is not None]
    unique = {c for c in canon if c is not None}
    train_set = training if isinstance(training, set) else canonical_set(training)
    novel = unique - train_set
    if len(valid) >= 2:
        div, used = diversity(valid, max_pairs, seed)
    else:
        div, used = 0.0, 0
    return MetricsReport(
        validity=len(valid) / len(generated),
        uniqueness=len(unique) / len(valid) if valid else 0.0,
        novelty=len(novel) / len(unique) if unique else 0.0,
        diversity=div,
        n_generated=len(generated),
        n_valid=len(valid),
        n_unique=len(unique),
        n_novel=len(novel),
        diversity_pairs=used,
    )


# principal components


class RankError(MetricsError):
    def __init__(self, rank: int, dims: int):
        super().__init__(f"embedding covariance has rank {rank}, fewer than the {dims} requested components")
        self.rank = rank
        self.dims = dims


def power_iteration(C: np.ndarray, rng: np.random.Generator, tol: float = 1e-12, max_iter: int = 10_000):
    """Dominant (eigenvalue, unit eigenvector) of a symmetric PSD matrix."""
    v = rng.standard_normal(C.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = C @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v
        w /= norm
        new_lam = float(w @ C @ w)
        if abs(new_lam - lam) <= tol * max(abs(new_lam), 1e-300) and np.linalg.norm(w - v) < 1e-9:
            v, lam = w, new_lam
            break
        v, lam = w, new_lam
    # sign convention: largest-magnitude component positive
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return lam, v


def principal_components(X: np.ndarray, dims: int, seed: int = 0, rel_tol: float = 1e-10):
    """Top ``dims`` covariance eigenpairs via power iteration with deflation.

    Returns (mean, components (dims, D), variances (dims,)). Raises RankError
    when the covariance has fewer than ``dims`` non-negligible eigenvalues.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or len(X) < 2:
        raise MetricsError("need at least two samples for a covariance")
    mean = X.mean(axis=0)
    Xc = X - mean
    C = Xc.T @ Xc / (len(X) - 1)
    rng = rng_for(seed, 0, "pca.start")
    comps, lams = [], []
    scale = float(np.trace(C))
    for k in range(dims):
        lam, v = power_iteration(C, rng)
        if scale <= 0.0 or lam <= rel_tol * scale:
            raise RankError(k, dims)
        comps.append(v)
        lams.append(lam)
        C = C - lam * np.outer(v, v)
    return mean, np.array(comps), np.array(lams)


@dataclass
class Projection:
    labels: list[str]
    coords: np.ndarray  # (N, dims)
    variances: np.ndarray  # eigenvalues of the pooled covariance

    def write_csv(self, path: str | Path, header: list[str] = ()) -> None:
        dims = self.coords.shape[1]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            for line in header:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["label", *"xyz"[:dims]])
            for label, row in zip(self.labels, self.coords):
                w.writerow([label, *(repr(float(x)) for x in row)])


def project(generated: np.ndarray, training: np.ndarray, dims: int = 2, seed: int = 0) -> Projection:
    """Fit PCA on both sets together and project each row."""
    if dims not in (2, 3):
        raise MetricsError("dims must be 2 or 3")
    if len(generated) == 0 or len(training) == 0:
        raise MetricsError("both sets must be non-empty")
    X = np.vstack([generated, training])
    mean, comps, lams = principal_components(X, dims, seed)
    coords = (X - mean) @ comps.T
    labels = ["generated"] * len(generated) + ["trained"] * len(training)
    return Projection(labels, coords, lams)


def discriminator_embeddings(disc, tokenizer, smiles: list[str], batch: int = 256) -> np.ndarray:
    """Mean-pooled bidirectional states of the frozen discriminator, one row per string."""
    out = []
    for lo in range(0, len(smiles), batch):
        chunk = smiles[lo : lo + batch]
        T = max(len(tokenizer.encode(s)) for s in chunk)
        ids, lens = tokenizer.encode_batch(chunk, T)
        out.append(disc.embed(ids, lens))
    return np.vstack(out) if out else np.zeros((0, 2 * disc.cfg.hidden_size))


def embed_and_project(disc, tokenizer, generated: list[str], training: list[str], dims: int = 2, seed: int = 0) -> Projection:
    return project(
        discriminator_embeddings(disc, tokenizer, generated),
        discriminator_embeddings(disc, tokenizer, training),
        dims,
        seed,
    )
