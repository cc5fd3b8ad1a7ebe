"""Scaling to [0, 1] and histogram reports."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

LOGP_WINDOW = (-4.0, 8.0)


def scale_to_unit(raw, lo: float = LOGP_WINDOW[0], hi: float = LOGP_WINDOW[1]):
    """Clamp to [lo, hi] and map linearly onto [0, 1]. Works on scalars and arrays."""
    if not lo < hi:
        raise ValueError(f"scale window must satisfy lo < hi, got [{lo}, {hi}]")
    out = (np.clip(raw, lo, hi) - lo) / (hi - lo)
    return float(out) if np.ndim(out) == 0 else out


def histogram_counts(scaled: np.ndarray, bins: int) -> np.ndarray:
    """Equal-width bins over [0, 1]; the last bin is closed on the right."""
    idx = np.minimum((np.asarray(scaled) * bins).astype(np.int64), bins - 1)
    return np.bincount(idx, minlength=bins)


@dataclass
class PropertyReport:
    name: str
    raw: list[float]
    scaled: list[float]
    mean: float
    median: float
    bin_edges: list[float]
    counts: list[int]
    window: tuple[float, float]
    # not computed; kept so reports have a fixed shape
    qed: None = None
    sa: None = None
    extra: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "n": len(self.raw),
            "mean": self.mean,
            "median": self.median,
            "raw_mean": float(np.mean(self.raw)),
            "window": list(self.window),
            "bin_edges": self.bin_edges,
            "counts": self.counts,
            "qed": self.qed,
            "sa": self.sa,
        }


def property_histogram(
    raw_scores, bins: int = 20, name: str = "logp", window: tuple[float, float] = LOGP_WINDOW
) -> PropertyReport:
    raw = np.asarray(raw_scores, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("no scores to summarise")
    if bins < 1:
        raise ValueError("bins must be at least 1")
    scaled = scale_to_unit(raw, *window)
    return PropertyReport(
        name=name,
        raw=raw.tolist(),
        scaled=scaled.tolist(),
        mean=float(scaled.mean()),
        median=float(np.median(scaled)),
        bin_edges=np.linspace(0.0, 1.0, bins + 1).tolist(),
        counts=histogram_counts(scaled, bins).tolist(),
        window=tuple(window),
    )


def write_histogram_csv(
    path: str | Path, generated: PropertyReport, training: PropertyReport, header: list[str] = ()
) -> None:
    if generated.bin_edges != training.bin_edges:
        raise ValueError("reports use different bins")
    edges = generated.bin_edges
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_lo", "bin_hi", "count_generated", "count_training"])
        for k in range(len(edges) - 1):
            w.writerow([repr(edges[k]), repr(edges[k + 1]), generated.counts[k], training.counts[k]])
