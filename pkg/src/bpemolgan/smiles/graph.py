"""Molecular graph types shared by the parser, validator and writers."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property


class BondOrder(Enum):
    SINGLE = "single"
    DOUBLE = "double"
    TRIPLE = "triple"
    AROMATIC = "aromatic"

    @property
    def valence(self) -> int:
        # aromatic bonds count 1; the extra pi electron is handled per atom
        return _BOND_VALENCE[self]


_BOND_VALENCE = {
    BondOrder.SINGLE: 1,
    BondOrder.DOUBLE: 2,
    BondOrder.TRIPLE: 3,
    BondOrder.AROMATIC: 1,
}


# fmt: off
ELEMENTS = (
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S",
    "Cl", "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga",
    "Ge", "As", "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd",
    "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm",
    "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os",
    "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa",
    "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg",
    "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
)
# fmt: on

ATOMIC_NUMBER = {sym: i + 1 for i, sym in enumerate(ELEMENTS)}


@dataclass(frozen=True)
class Atom:
    element: str
    charge: int = 0
    explicit_h: int | None = None  # None for organic-subset atoms (implicit H)
    isotope: int | None = None
    aromatic: bool = False
    chirality: str | None = None
    atom_class: int | None = None
    offset: int = 0

    @property
    def bracket(self) -> bool:
        return self.explicit_h is not None

    @property
    def atomic_number(self) -> int:
        return ATOMIC_NUMBER[self.element]


@dataclass(frozen=True)
class Bond:
    begin: int
    end: int
    order: BondOrder = BondOrder.SINGLE
    direction: str | None = None  # "/" or "\\" as written
    offset: int = 0

    def other(self, idx: int) -> int:
        return self.end if idx == self.begin else self.begin


@dataclass(frozen=True)
class Diagnostic:
    """A problem found in a SMILES string, anchored at a byte offset."""

    offset: int
    message: str

    def __str__(self) -> str:
        return f"offset {self.offset}: {self.message}"


class SmilesError(ValueError):
    def __init__(self, offset: int, message: str):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset
        self.message = message

    @property
    def diagnostic(self) -> Diagnostic:
        return Diagnostic(self.offset, self.message)


@dataclass(frozen=True)
class MolGraph:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    source_text: str = ""

    def __len__(self) -> int:
        return len(self.atoms)

    @cached_property
    def neighbors(self) -> tuple[tuple[tuple[int, Bond], ...], ...]:
        """Per atom, the (neighbor index, bond) pairs in bond order."""
        adj: list[list[tuple[int, Bond]]] = [[] for _ in self.atoms]
        for bond in self.bonds:
            adj[bond.begin].append((bond.end, bond))
            adj[bond.end].append((bond.begin, bond))
        return tuple(tuple(a) for a in adj)

    def degree(self, idx: int) -> int:
        return len(self.neighbors[idx])

    def bond_between(self, a: int, b: int) -> Bond | None:
        for nbr, bond in self.neighbors[a]:
            if nbr == b:
                return bond
        return None

    def components(self) -> list[list[int]]:
        """Connected components as sorted atom-index lists, ordered by first atom."""
        seen = [False] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in self.neighbors[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
            out.append(sorted(comp))
        return out

    def subgraph(self, indices: list[int]) -> MolGraph:
        remap = {old: new for new, old in enumerate(indices)}
        atoms = tuple(self.atoms[i] for i in indices)
        bonds = tuple(
            Bond(remap[b.begin], remap[b.end], b.order, b.direction, b.offset)
            for b in self.bonds
            if b.begin in remap and b.end in remap
        )
        return MolGraph(atoms, bonds, self.source_text)

    def permuted(self, order: list[int]) -> MolGraph:
        """Relabel atoms so that new atom i is old atom order[i]."""
        if sorted(order) != list(range(len(self.atoms))):
            raise ValueError("order must be a permutation of atom indices")
        g = self.subgraph(order)
        return MolGraph(g.atoms, g.bonds, self.source_text)
