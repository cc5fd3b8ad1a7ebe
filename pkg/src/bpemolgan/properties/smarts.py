"""A small SMARTS subset, enough for the atom-typing table.

Supported: bracket atoms with element symbols, ``#n``, ``a``/``A``, ``H<n>``,
``X<n>`` and charges, combined with ``!``, ``&``, implicit and, ``,`` and
``;``; unbracketed organic symbols; bonds ``- = # : ~`` (unmarked means
single or aromatic); branches. No ring closures or recursive patterns.

Matching runs on an :class:`ExpandedGraph` where every hydrogen is a
node, so ``H<n>`` counts attached hydrogens and ``X<n>`` counts all
neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..smiles import BondOrder, MolGraph, total_hydrogens
from ..smiles.graph import ATOMIC_NUMBER

AtomKey = tuple[int, bool, int, int, int]  # atomic number, aromatic, H count, degree, charge
AtomPred = Callable[[AtomKey], bool]

_ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
_AROMATIC = {"c": 6, "n": 7, "o": 8, "s": 16, "p": 15, "b": 5}


class SmartsError(ValueError):
    pass


@dataclass
class ExpandedGraph:
    """Heavy atoms first (same indices as the source graph), then one node per hydrogen."""

    keys: list[AtomKey]
    adj: list[list[tuple[int, BondOrder]]]
    n_heavy: int

    @classmethod
    def from_graph(cls, g: MolGraph) -> ExpandedGraph:
        n = len(g.atoms)
        adj: list[list[tuple[int, BondOrder]]] = [[] for _ in range(n)]
        for b in g.bonds:
            adj[b.begin].append((b.end, b.order))
            adj[b.end].append((b.begin, b.order))
        hs = [total_hydrogens(g, i) for i in range(n)]
        for i, count in enumerate(hs):
            for _ in range(count):
                adj.append([(i, BondOrder.SINGLE)])
                adj[i].append((len(adj) - 1, BondOrder.SINGLE))
        keys = []
        for i, nbrs in enumerate(adj):
            if i < n:
                a = g.atoms[i]
                z, arom, charge = a.atomic_number, a.aromatic, a.charge
            else:
                z, arom, charge = 1, False, 0
            h = sum(1 for j, _ in nbrs if (j >= n or g.atoms[j].atomic_number == 1))
            keys.append((z, arom, h, len(nbrs), charge))
        return cls(keys, adj, n)


def _bond_pred(symbol: str | None) -> Callable[[BondOrder], bool]:
    if symbol is None:
        return lambda o: o is BondOrder.SINGLE or o is BondOrder.AROMATIC
    if symbol == "~":
        return lambda o: True
    want = {"-": BondOrder.SINGLE, "=": BondOrder.DOUBLE, "#": BondOrder.TRIPLE, ":": BondOrder.AROMATIC}[symbol]
    return lambda o: o is want


@dataclass
class Pattern:
    text: str
    atoms: list[AtomPred]
    # for atom k >= 1: (parent index, bond predicate)
    edges: list[tuple[int, Callable[[BondOrder], bool]]]

    def root_matches(self, key: AtomKey) -> bool:
        return self.atoms[0](key)

    def matches_at(self, eg: ExpandedGraph, root: int) -> bool:
        """True if some embedding maps the first pattern atom onto ``root``."""
        if not self.atoms[0](eg.keys[root]):
            return False
        mapping = [root] + [-1] * (len(self.atoms) - 1)
        used = {root}

        def extend(k: int) -> bool:
            if k == len(self.atoms):
                return True
            parent, bond_ok = self.edges[k - 1]
            pred = self.atoms[k]
            for j, order in eg.adj[mapping[parent]]:
                if j in used or not bond_ok(order) or not pred(eg.keys[j]):
                    continue
                mapping[k] = j
                used.add(j)
                if extend(k + 1):
                    return True
                used.discard(j)
            return False

        return extend(1)


# parsing


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, msg: str) -> SmartsError:
        return SmartsError(f"{msg} at offset {self.pos} in {self.text!r}")

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def number(self, default: int | None = None) -> int:
        start = self.pos
        while self.peek().isdigit():
            self.pos += 1
        if start == self.pos:
            if default is None:
                raise self.error("expected a number")
            return default
        return int(self.text[start : self.pos])

    def pattern(self) -> Pattern:
        atoms: list[AtomPred] = []
        edges = []
        stack: list[int] = []
        prev = -1
        bond: str | None = None
        while self.pos < len(self.text):
            ch = self.peek()
            if ch == "(":
                if prev < 0:
                    raise self.error("branch before any atom")
                stack.append(prev)
                self.pos += 1
            elif ch == ")":
                if not stack:
                    raise self.error("unmatched ')'")
                prev = stack.pop()
                self.pos += 1
            elif ch in "-=#:~":
                bond = ch
                self.pos += 1
            else:
                atoms.append(self.atom())
                if prev >= 0:
                    edges.append((prev, _bond_pred(bond)))
                elif bond is not None:
                    raise self.error("bond before any atom")
                prev = len(atoms) - 1
                bond = None
        if stack:
            raise self.error("unclosed branch")
        if not atoms:
            raise self.error("empty pattern")
        return Pattern(self.text, atoms, edges)

    def atom(self) -> AtomPred:
        if self.peek() == "[":
            self.pos += 1
            pred = self.low_and()
            if self.peek() != "]":
                raise self.error("expected ']'")
            self.pos += 1
            return pred
        for sym in _ORGANIC:
            if self.text.startswith(sym, self.pos):
                self.pos += len(sym)
                z = ATOMIC_NUMBER[sym]
                return lambda k, z=z: k[0] == z and not k[1]
        ch = self.peek()
        if ch in _AROMATIC:
            self.pos += 1
            z = _AROMATIC[ch]
            return lambda k, z=z: k[0] == z and k[1]
        if ch in "aA":
            self.pos += 1
            return (lambda k: k[1]) if ch == "a" else (lambda k: not k[1])
        raise self.error(f"unsupported atom {ch!r}")

    # precedence, loosest first: ';'  ','  '&' or implicit  '!'

    def low_and(self) -> AtomPred:
        parts = [self.or_()]
        while self.peek() == ";":
            self.pos += 1
            parts.append(self.or_())
        return parts[0] if len(parts) == 1 else (lambda k, ps=tuple(parts): all(p(k) for p in ps))

    def or_(self) -> AtomPred:
        parts = [self.high_and()]
        while self.peek() == ",":
            self.pos += 1
            parts.append(self.high_and())
        return parts[0] if len(parts) == 1 else (lambda k, ps=tuple(parts): any(p(k) for p in ps))

    def high_and(self) -> AtomPred:
        parts = [self.unary()]
        while self.peek() not in ("", "]", ";", ","):
            if self.peek() == "&":
                self.pos += 1
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else (lambda k, ps=tuple(parts): all(p(k) for p in ps))

    def unary(self) -> AtomPred:
        if self.peek() == "!":
            self.pos += 1
            inner = self.unary()
            return lambda k: not inner(k)
        return self.primitive()

    def primitive(self) -> AtomPred:
        t, p = self.text, self.pos
        ch = self.peek()
        if ch == "#":
            self.pos += 1
            z = self.number()
            return lambda k: k[0] == z
        if ch in "+-":
            sign = 1 if ch == "+" else -1
            self.pos += 1
            if self.peek().isdigit():
                mag = self.number()
            else:
                mag = 1
                while self.peek() == ch:
                    mag += 1
                    self.pos += 1
            q = sign * mag
            return lambda k: k[4] == q
        if ch == "H":
            self.pos += 1
            n = self.number(default=1)
            return lambda k: k[2] == n
        if ch == "X":
            self.pos += 1
            n = self.number(default=1)
            return lambda k: k[3] == n
        if ch == "a":
            self.pos += 1
            return lambda k: k[1]
        if ch == "A":
            self.pos += 1
            return lambda k: not k[1]
        if ch in _AROMATIC:
            self.pos += 1
            z = _AROMATIC[ch]
            return lambda k: k[0] == z and k[1]
        if ch.isupper():
            two = t[p : p + 2]
            sym = two if len(two) == 2 and two[1].islower() and two in ATOMIC_NUMBER else ch
            if sym not in ATOMIC_NUMBER:
                raise self.error(f"unknown element {sym!r}")
            self.pos += len(sym)
            z = ATOMIC_NUMBER[sym]
            return lambda k: k[0] == z and not k[1]
        raise self.error(f"unsupported primitive {ch!r}")


def parse_smarts(text: str) -> Pattern:
    return _Parser(text).pattern()
