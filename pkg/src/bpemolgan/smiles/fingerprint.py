"""Path fingerprints and Tanimoto similarity."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .graph import BondOrder, MolGraph

FP_BITS = 2048
MAX_PATH_BONDS = 7

_BOND_CHAR = {BondOrder.SINGLE: "-", BondOrder.DOUBLE: "=", BondOrder.TRIPLE: "#", BondOrder.AROMATIC: ":"}


@dataclass(frozen=True)
class Fingerprint:
    bits: int  # bit i of the int is fingerprint position i
    width: int = FP_BITS

    def count(self) -> int:
        return self.bits.bit_count()

    def on_bits(self) -> list[int]:
        return [i for i in range(self.width) if self.bits >> i & 1]

    def to_hex(self) -> str:
        """Hex dump with position 0 as the most significant bit of the first digit."""
        as_text = "".join("1" if self.bits >> i & 1 else "0" for i in range(self.width))
        return format(int(as_text, 2), f"0{self.width // 4}x")

    @classmethod
    def from_hex(cls, text: str) -> Fingerprint:
        width = len(text) * 4
        as_text = format(int(text, 16), f"0{width}b")
        bits = sum(1 << i for i, c in enumerate(as_text) if c == "1")
        return cls(bits, width)


def _atom_label(g: MolGraph, idx: int) -> str:
    a = g.atoms[idx]
    return a.element.lower() if a.aromatic else a.element


def _bit_for(key: str, width: int) -> int:
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little") % width


def path_keys(g: MolGraph, max_bonds: int = MAX_PATH_BONDS) -> set[str]:
    """Direction-normalized keys of every simple path with 0..max_bonds bonds."""
    labels = [_atom_label(g, i) for i in range(len(g))]
    keys: set[str] = set()

    def extend(path: list[int], seq: list[str]) -> None:
        fwd = "".join(seq)
        rev = "".join(reversed(seq))
        keys.add(min(fwd, rev))
        if len(path) > max_bonds:
            return
        for v, bond in g.neighbors[path[-1]]:
            if v in path:
                continue
            path.append(v)
            seq.extend((_BOND_CHAR[bond.order], labels[v]))
            extend(path, seq)
            del seq[-2:]
            path.pop()

    for start in range(len(g)):
        extend([start], [labels[start]])
    return keys


def fingerprint(g: MolGraph, width: int = FP_BITS) -> Fingerprint:
    bits = 0
    for key in path_keys(g):
        bits |= 1 << _bit_for(key, width)
    return Fingerprint(bits, width)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    if a.width != b.width:
        raise ValueError(f"fingerprint widths differ: {a.width} vs {b.width}")
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 1.0
    return (a.bits & b.bits).bit_count() / union
