"""Valence rules, implicit hydrogens and the aromatic-ring sanity check.

Aromatic bonds count 1 towards an atom's bond-order sum and every aromatic
atom that can take one gets +1 for its share of the ring's pi bond. Carbon
and boron must take it unless an exocyclic double bond already supplies it;
heteroatoms (n, o, s, p, ...) may instead donate a lone pair, which is what
pyrrole-type [nH], furan o and thiophene s do. There is no kekulization.
"""

from __future__ import annotations

from .graph import BondOrder, Diagnostic, MolGraph, SmilesError
from .parser import parse_smiles

VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
    "H": (1,),
    "Si": (4,),
    "Se": (2, 4, 6),
    "As": (3, 5),
    "Te": (2, 4, 6),
}

_LONE_PAIR_DONORS = {"N", "O", "S", "P", "Se", "Te", "As"}


def allowed_valences(element: str, charge: int) -> tuple[int, ...] | None:
    """Allowed bond-order sums (H included) after the charge shift.

    Cations on N/O/S/P gain +charge; anions lose |charge|, except boron which
    becomes carbon-like. Unknown elements (metals, noble gases) return None
    and are not checked.
    """
    base = VALENCES.get(element)
    if base is None:
        return None
    if charge == 0:
        return base
    if element == "B" and charge < 0:
        shift = -charge
    elif charge > 0 and element in ("N", "O", "S", "P", "Se", "As", "Te"):
        shift = charge
    else:
        shift = -abs(charge)
    out = tuple(v + shift for v in base if v + shift >= 0)
    return out or (0,)


def bond_order_sum(g: MolGraph, idx: int) -> int:
    return sum(bond.order.valence for _, bond in g.neighbors[idx])


def _has_exocyclic_double(g: MolGraph, idx: int) -> bool:
    return any(b.order in (BondOrder.DOUBLE, BondOrder.TRIPLE) for _, b in g.neighbors[idx])


def _pi_share(g: MolGraph, idx: int, base: int, limit: int) -> int:
    """+1 for an aromatic atom's pi bond when it fits (see module docstring)."""
    atom = g.atoms[idx]
    if not atom.aromatic or _has_exocyclic_double(g, idx):
        return 0
    if base + 1 <= limit:
        return 1
    return 0


def implicit_hydrogens(g: MolGraph, idx: int, as_organic: bool = False) -> int:
    """Implicit H on an organic-subset atom; bracket atoms carry their own.

    With ``as_organic`` the count is computed as if the atom were written
    without brackets, which is what the SMILES writer needs.
    """
    atom = g.atoms[idx]
    if atom.bracket and not as_organic:
        return 0
    vals = VALENCES.get(atom.element)
    if vals is None:
        return 0
    base = bond_order_sum(g, idx)
    if atom.aromatic:
        # aromatic organic atoms only fill up to their lowest valence
        low = vals[0]
        pi = _pi_share(g, idx, base, low)
        return max(0, low - base - pi)
    for v in vals:
        if v >= base:
            return v - base
    return 0


def total_hydrogens(g: MolGraph, idx: int) -> int:
    atom = g.atoms[idx]
    return atom.explicit_h if atom.bracket else implicit_hydrogens(g, idx)


def _bridges(g: MolGraph, edges: list[tuple[int, int]]) -> set[frozenset[int]]:
    """Bridges of the subgraph given by ``edges`` (Tarjan, iterative)."""
    adj: dict[int, list[int]] = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    out: set[frozenset[int]] = set()
    counter = 0
    for root in adj:
        if root in disc:
            continue
        disc[root] = low[root] = counter
        counter += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            u, parent, it = stack[-1]
            advanced = False
            for v in it:
                if v == parent:
                    continue
                if v in disc:
                    low[u] = min(low[u], disc[v])
                else:
                    disc[v] = low[v] = counter
                    counter += 1
                    stack.append((v, u, iter(adj[v])))
                    advanced = True
                    break
            if advanced:
                continue
            stack.pop()
            if parent >= 0:
                low[parent] = min(low[parent], low[u])
                if low[u] > disc[parent]:
                    out.add(frozenset((u, parent)))
    return out


def check_valence(g: MolGraph) -> list[Diagnostic]:
    """Chemical sanity diagnostics for a parsed graph; empty means valid."""
    diags: list[Diagnostic] = []
    for idx, atom in enumerate(g.atoms):
        allowed = allowed_valences(atom.element, atom.charge)
        if allowed is None:
            continue
        limit = max(allowed)
        base = bond_order_sum(g, idx) + (atom.explicit_h or 0)
        need_pi = atom.aromatic and atom.element not in _LONE_PAIR_DONORS
        if need_pi and not _has_exocyclic_double(g, idx):
            base += 1
        if base > limit:
            symbol = atom.element.lower() if atom.aromatic else atom.element
            diags.append(
                Diagnostic(atom.offset, f"atom {idx} ({symbol}) has valence {base} > {limit}")
            )

    aromatic_edges = [
        (b.begin, b.end)
        for b in g.bonds
        if b.order is BondOrder.AROMATIC and g.atoms[b.begin].aromatic and g.atoms[b.end].aromatic
    ]
    bridges = _bridges(g, aromatic_edges)
    on_ring = set()
    for a, b in aromatic_edges:
        if frozenset((a, b)) not in bridges:
            on_ring.update((a, b))
    for idx, atom in enumerate(g.atoms):
        if atom.aromatic and idx not in on_ring:
            diags.append(Diagnostic(atom.offset, f"aromatic atom {idx} is not in an aromatic ring"))
    for b in g.bonds:
        if b.order is BondOrder.AROMATIC and not (g.atoms[b.begin].aromatic and g.atoms[b.end].aromatic):
            diags.append(Diagnostic(b.offset, "aromatic bond between non-aromatic atoms"))
    return diags


def is_valid(text: str) -> bool:
    """True iff ``text`` parses and passes :func:`check_valence`."""
    if not isinstance(text, str) or not text:
        return False
    try:
        g = parse_smiles(text)
    except SmilesError:
        return False
    return not check_valence(g)
