"""SMILES parsing, validity, canonical form and fingerprints."""

from .canon import canonicalize, write_smiles
from .fingerprint import FP_BITS, Fingerprint, fingerprint, tanimoto
from .graph import Atom, Bond, BondOrder, Diagnostic, MolGraph, SmilesError
from .parser import parse_smiles
from .valence import check_valence, implicit_hydrogens, is_valid, total_hydrogens


def canonical_smiles(text: str) -> str | None:
    """Canonical form of ``text``, or None if it is not a valid molecule."""
    try:
        g = parse_smiles(text)
    except SmilesError:
        return None
    if check_valence(g):
        return None
    return canonicalize(g)


__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "Diagnostic",
    "FP_BITS",
    "Fingerprint",
    "MolGraph",
    "SmilesError",
    "canonical_smiles",
    "canonicalize",
    "check_valence",
    "fingerprint",
    "implicit_hydrogens",
    "is_valid",
    "parse_smiles",
    "tanimoto",
    "total_hydrogens",
    "write_smiles",
]
