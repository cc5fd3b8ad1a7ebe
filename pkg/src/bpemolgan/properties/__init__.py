"""Crippen logP, [0, 1] scaling and distribution reports."""

from ..smiles import parse_smiles
from .crippen import CrippenResult, crippen_contributions, crippen_logp, load_table
from .report import (
    LOGP_WINDOW,
    PropertyReport,
    histogram_counts,
    property_histogram,
    scale_to_unit,
    write_histogram_csv,
)
from .smarts import SmartsError, parse_smarts


def logp_of(smiles: str) -> float:
    return crippen_logp(parse_smiles(smiles))


__all__ = [
    "CrippenResult",
    "LOGP_WINDOW",
    "PropertyReport",
    "SmartsError",
    "crippen_contributions",
    "crippen_logp",
    "histogram_counts",
    "load_table",
    "logp_of",
    "parse_smarts",
    "property_histogram",
    "scale_to_unit",
    "write_histogram_csv",
]
