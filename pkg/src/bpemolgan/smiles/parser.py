"""SMILES reader following the OpenSMILES grammar (minus reaction syntax)."""

from __future__ import annotations

import re

from .graph import ELEMENTS, Atom, Bond, BondOrder, MolGraph, SmilesError

ORGANIC = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC_ORGANIC = ("b", "c", "n", "o", "p", "s")
AROMATIC_BRACKET = ("se", "as", "te", "b", "c", "n", "o", "p", "s")

_BOND_SYMBOLS = {
    "-": (BondOrder.SINGLE, None),
    "=": (BondOrder.DOUBLE, None),
    "#": (BondOrder.TRIPLE, None),
    ":": (BondOrder.AROMATIC, None),
    "/": (BondOrder.SINGLE, "/"),
    "\\": (BondOrder.SINGLE, "\\"),
}

_BRACKET_RE = re.compile(
    r"""
    (?P<isotope>\d+)?
    (?P<symbol>[A-Z][a-z]?|se|as|te|[bcnops])
    (?P<chiral>@(?:@|TH[12]|AL[12]|SP[123]|TB\d{1,2}|OH\d{1,2})?)?
    (?P<hcount>H\d*)?
    (?P<charge>\+\+|--|[+-]\d*)?
    (?::(?P<cls>\d+))?
    $""",
    re.VERBOSE,
)


def _parse_bracket(body: str, offset: int) -> Atom:
    m = _BRACKET_RE.match(body)
    if m is None:
        raise SmilesError(offset, f"malformed bracket atom [{body}]")
    symbol = m["symbol"]
    aromatic = symbol[0].islower()
    element = symbol.capitalize() if aromatic else symbol
    if aromatic and symbol not in AROMATIC_BRACKET:
        raise SmilesError(offset, f"unknown element {symbol!r}")
    if element not in ELEMENTS:
        # e.g. "[Cu]" parses fine but "[Xx]" does not; "[CH]" is C with one H
        raise SmilesError(offset, f"unknown element {symbol!r}")
    isotope = int(m["isotope"]) if m["isotope"] else None
    if isotope == 0:
        raise SmilesError(offset, "isotope must be positive")
    hcount = m["hcount"]
    explicit_h = 0 if hcount is None else (int(hcount[1:]) if len(hcount) > 1 else 1)
    ch = m["charge"]
    if ch is None:
        charge = 0
    elif ch == "++":
        charge = 2
    elif ch == "--":
        charge = -2
    else:
        charge = (1 if ch[0] == "+" else -1) * (int(ch[1:]) if len(ch) > 1 else 1)
    if abs(charge) > 15:
        raise SmilesError(offset, f"charge {charge} out of range")
    return Atom(
        element=element,
        charge=charge,
        explicit_h=explicit_h,
        isotope=isotope,
        aromatic=aromatic,
        chirality=m["chiral"],
        atom_class=int(m["cls"]) if m["cls"] else None,
        offset=offset,
    )


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.atoms: list[Atom] = []
        self.bonds: list[Bond] = []
        self.pairs: set[frozenset[int]] = set()
        # ring number -> (atom index, bond symbol or None, offset of digit)
        self.open_rings: dict[int, tuple[int, str | None, int]] = {}

    def add_bond(self, a: int, b: int, sym: str | None, offset: int) -> None:
        if a == b:
            raise SmilesError(offset, "ring closure bonds an atom to itself")
        key = frozenset((a, b))
        if key in self.pairs:
            raise SmilesError(offset, "duplicate bond between the same atoms")
        self.pairs.add(key)
        if sym is None:
            both_aromatic = self.atoms[a].aromatic and self.atoms[b].aromatic
            order, direction = (BondOrder.AROMATIC if both_aromatic else BondOrder.SINGLE), None
        else:
            order, direction = _BOND_SYMBOLS[sym]
        self.bonds.append(Bond(a, b, order, direction, offset))

    def read(self) -> MolGraph:
        text = self.text
        n = len(text)
        if n == 0:
            raise SmilesError(0, "empty SMILES")
        prev: int | None = None
        branches: list[tuple[int, int]] = []  # (atom index, offset of "(")
        bond_sym: str | None = None
        bond_pos = -1
        i = 0
        while i < n:
            ch = text[i]
            if ch in _BOND_SYMBOLS:
                if bond_sym is not None:
                    raise SmilesError(i, "two consecutive bond symbols")
                if prev is None:
                    raise SmilesError(i, "bond symbol without a preceding atom")
                bond_sym, bond_pos = ch, i
                i += 1
                continue
            if ch == "(":
                if prev is None:
                    raise SmilesError(i, "branch without a preceding atom")
                if bond_sym is not None:
                    raise SmilesError(bond_pos, "dangling bond symbol before branch")
                if i + 1 < n and text[i + 1] == ")":
                    raise SmilesError(i, "empty branch")
                if i > 0 and text[i - 1] == "(":
                    raise SmilesError(i, "branch must start with an atom or bond")
                branches.append((prev, i))
                i += 1
                continue
            if ch == ")":
                if bond_sym is not None:
                    raise SmilesError(bond_pos, "dangling bond symbol")
                if not branches:
                    raise SmilesError(i, "unmatched closing parenthesis")
                prev = branches.pop()[0]
                i += 1
                continue
            if ch == ".":
                if bond_sym is not None:
                    raise SmilesError(bond_pos, "dangling bond symbol")
                if prev is None:
                    raise SmilesError(i, "component separator without a preceding atom")
                prev = None
                i += 1
                continue
            if ch.isdigit() or ch == "%":
                if prev is None:
                    raise SmilesError(i, "ring closure without a preceding atom")
                start = i
                if ch == "%":
                    digits = text[i + 1 : i + 3]
                    if len(digits) != 2 or not digits.isdigit():
                        raise SmilesError(i, "ring closure '%' needs two digits")
                    num = int(digits)
                    i += 3
                else:
                    num = int(ch)
                    i += 1
                self._ring(num, prev, bond_sym, start)
                bond_sym = None
                continue

            # atoms
            if ch == "[":
                close = text.find("]", i + 1)
                if close < 0:
                    raise SmilesError(i, "malformed bracket atom: missing ']'")
                atom = _parse_bracket(text[i + 1 : close], i)
                nxt = close + 1
            else:
                sym = None
                for cand in ORGANIC + AROMATIC_ORGANIC:
                    if text.startswith(cand, i):
                        sym = cand
                        break
                if sym is None:
                    raise SmilesError(i, f"unknown element {ch!r}")
                aromatic = sym in AROMATIC_ORGANIC
                atom = Atom(
                    element=sym.upper() if aromatic else sym,
                    aromatic=aromatic,
                    offset=i,
                )
                nxt = i + len(sym)
            idx = len(self.atoms)
            self.atoms.append(atom)
            if prev is not None:
                self.add_bond(prev, idx, bond_sym, bond_pos if bond_sym else i)
            elif bond_sym is not None:
                raise SmilesError(bond_pos, "dangling bond symbol")
            bond_sym = None
            prev = idx
            i = nxt

        if bond_sym is not None:
            raise SmilesError(bond_pos, "dangling bond symbol")
        if branches:
            raise SmilesError(branches[-1][1], "unclosed branch")
        if self.open_rings:
            num, (_, _, pos) = min(self.open_rings.items(), key=lambda kv: kv[1][2])
            raise SmilesError(pos, f"unmatched ring-closure digit {num}")
        if text[-1] == ".":
            raise SmilesError(n - 1, "trailing component separator")
        return MolGraph(tuple(self.atoms), tuple(self.bonds), text)

    def _ring(self, num: int, atom: int, sym: str | None, offset: int) -> None:
        if num not in self.open_rings:
            self.open_rings[num] = (atom, sym, offset)
            return
        other, open_sym, _ = self.open_rings.pop(num)
        if open_sym is not None and sym is not None and open_sym != sym:
            # "/" vs "\" on the two ends is legal and common; orders must agree
            if _BOND_SYMBOLS[open_sym][0] != _BOND_SYMBOLS[sym][0]:
                raise SmilesError(offset, f"conflicting bond symbols for ring {num}")
        self.add_bond(other, atom, sym if sym is not None else open_sym, offset)


def parse_smiles(text: str) -> MolGraph:
    """Parse ``text`` into a :class:`MolGraph`.

    Raises :class:`SmilesError` with the byte offset of the problem when the
    string is not well formed. Chemistry (valence, aromatic rings) is not
    checked here; see :func:`check_valence`.
    """
    if not isinstance(text, str):
        raise TypeError("SMILES must be a str")
    return _Reader(text).read()
