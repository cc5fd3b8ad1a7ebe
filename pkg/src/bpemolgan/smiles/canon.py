"""Canonical SMILES.

Atoms are ranked by Morgan-style iterative refinement of local invariants.
Ties that refinement cannot split are broken by individualizing each member
of the first tied class in turn and keeping the lexicographically smallest
emitted string, so the result does not depend on input atom order. Stereo
marks are dropped.
"""

from __future__ import annotations

import sys

from .graph import BondOrder, MolGraph
from .parser import AROMATIC_ORGANIC, ORGANIC
from .valence import implicit_hydrogens, total_hydrogens

_BOND_CODE = {BondOrder.SINGLE: 1, BondOrder.DOUBLE: 2, BondOrder.TRIPLE: 3, BondOrder.AROMATIC: 4}

# symmetric scaffolds can branch a lot; past this many leaves we stop exploring
_MAX_LEAVES = 50_000


def _dense_rank(keys: list) -> list[int]:
    table = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [table[k] for k in keys]


def atom_invariants(g: MolGraph) -> list[tuple]:
    return [
        (
            a.atomic_number,
            g.degree(i),
            total_hydrogens(g, i),
            a.charge,
            a.aromatic,
            a.isotope or 0,
        )
        for i, a in enumerate(g.atoms)
    ]


def _refine(ranks: list[int], adj: list[list[tuple[int, int]]]) -> list[int]:
    n_classes = len(set(ranks))
    while True:
        sigs = [
            (ranks[i], tuple(sorted((ranks[j], code) for j, code in adj[i])))
            for i in range(len(ranks))
        ]
        new = _dense_rank(sigs)
        k = len(set(new))
        ranks = new
        if k == n_classes:
            return ranks
        n_classes = k


def morgan_ranks(g: MolGraph) -> list[int]:
    """Refined (possibly tied) atom ranks."""
    adj = [[(j, _BOND_CODE[b.order]) for j, b in g.neighbors[i]] for i in range(len(g))]
    return _refine(_dense_rank(atom_invariants(g)), adj)


def _charge_str(charge: int) -> str:
    if charge == 0:
        return ""
    sign = "+" if charge > 0 else "-"
    return sign if abs(charge) == 1 else f"{sign}{abs(charge)}"


def atom_token(g: MolGraph, idx: int) -> str:
    a = g.atoms[idx]
    symbol = a.element.lower() if a.aromatic else a.element
    hs = total_hydrogens(g, idx)
    organic_ok = (
        (symbol in AROMATIC_ORGANIC if a.aromatic else symbol in ORGANIC)
        and a.charge == 0
        and a.isotope is None
        and implicit_hydrogens(g, idx, as_organic=True) == hs
    )
    if organic_ok:
        return symbol
    iso = str(a.isotope) if a.isotope else ""
    h = "" if hs == 0 else ("H" if hs == 1 else f"H{hs}")
    return f"[{iso}{symbol}{h}{_charge_str(a.charge)}]"


def bond_token(g: MolGraph, bond) -> str:
    both_aromatic = g.atoms[bond.begin].aromatic and g.atoms[bond.end].aromatic
    if bond.order is BondOrder.DOUBLE:
        return "="
    if bond.order is BondOrder.TRIPLE:
        return "#"
    if bond.order is BondOrder.AROMATIC:
        return "" if both_aromatic else ":"
    return "-" if both_aromatic else ""


def _ring_label(d: int) -> str:
    return str(d) if d < 10 else f"%{d}"


def write_smiles(
    g: MolGraph,
    ranks: list[int] | None = None,
    atom_tokens: list[str] | None = None,
    bond_tokens: dict[int, str] | None = None,
) -> str:
    """Emit SMILES, walking from the lowest-ranked atom of each component.

    ``ranks`` defaults to input order. Components are joined with '.' in
    the order of their lowest-ranked atom. Token tables may be passed in to
    skip recomputing them.
    """
    n = len(g)
    if ranks is None:
        ranks = list(range(n))
    if atom_tokens is None:
        atom_tokens = [atom_token(g, i) for i in range(n)]
    if bond_tokens is None:
        bond_tokens = {id(b): bond_token(g, b) for b in g.bonds}
    nbrs = [sorted(g.neighbors[i], key=lambda nb: ranks[nb[0]]) for i in range(n)]
    visited = [False] * n
    children: list[list] = [[] for _ in range(n)]
    rings_at: list[list] = [[] for _ in range(n)]  # (partner, bond, is_opener)
    seen_edges: set[int] = set()

    def walk(u: int, via: int) -> None:
        visited[u] = True
        for v, bond in nbrs[u]:
            key = id(bond)
            if key in seen_edges:
                continue
            seen_edges.add(key)
            if visited[v]:
                rings_at[v].append((u, bond, True))
                rings_at[u].append((v, bond, False))
            else:
                children[u].append((v, bond))
                walk(v, u)

    free_digits = list(range(1, 100))
    open_digit: dict[int, int] = {}

    def emit(u: int, out: list[str]) -> None:
        out.append(atom_tokens[u])
        released = []
        for v, bond, opener in sorted(rings_at[u], key=lambda r: ranks[r[0]]):
            if opener:
                d = free_digits.pop(0)
                open_digit[id(bond)] = d
                out.append(bond_tokens[id(bond)] + _ring_label(d))
            else:
                d = open_digit.pop(id(bond))
                out.append(_ring_label(d))
                released.append(d)
        for d in released:
            free_digits.append(d)
        free_digits.sort()
        kids = children[u]
        for k, (v, bond) in enumerate(kids):
            last = k == len(kids) - 1
            if not last:
                out.append("(")
            out.append(bond_tokens[id(bond)])
            emit(v, out)
            if not last:
                out.append(")")

    limit = sys.getrecursionlimit()
    if 2 * n + 100 > limit:
        sys.setrecursionlimit(2 * n + 100)
    parts = []
    for root in sorted(range(n), key=lambda i: ranks[i]):
        if visited[root]:
            continue
        walk(root, -1)
        out: list[str] = []
        emit(root, out)
        parts.append("".join(out))
    return ".".join(parts)


class _Search:
    def __init__(self, g: MolGraph):
        self.g = g
        self.adj = [[(j, _BOND_CODE[b.order]) for j, b in g.neighbors[i]] for i in range(len(g))]
        self.atom_tokens = [atom_token(g, i) for i in range(len(g))]
        self.bond_tokens = {id(b): bond_token(g, b) for b in g.bonds}
        self.leaves = 0

    def best(self, ranks: list[int]) -> str:
        ranks = _refine(ranks, self.adj)
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = [r for r, c in counts.items() if c > 1]
        if not tied:
            self.leaves += 1
            return write_smiles(self.g, ranks, self.atom_tokens, self.bond_tokens)
        target = min(tied)
        best = None
        for v in (i for i, r in enumerate(ranks) if r == target):
            if best is not None and self.leaves >= _MAX_LEAVES:
                break
            split = _dense_rank([(r, 0 if i == v else 1) for i, r in enumerate(ranks)])
            s = self.best(split)
            if best is None or s < best:
                best = s
        return best


def canonicalize(g: MolGraph) -> str:
    """Canonical SMILES for a parsed graph (stereo dropped)."""
    pieces = []
    for comp in g.components():
        sub = g.subgraph(comp)
        pieces.append(_Search(sub).best(_dense_rank(atom_invariants(sub))))
    return ".".join(sorted(pieces))
