"""Wildman-Crippen logP from atomic contributions.

Each atom, hydrogens included, takes the contribution of the first pattern
in the table (file order) whose first atom it matches. The table ships as
``data/crippen.txt`` and is checked against a pinned digest on load.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from ..smiles import Diagnostic, MolGraph
from .smarts import AtomKey, ExpandedGraph, Pattern, parse_smarts

TABLE_FILE = "crippen.txt"
TABLE_SHA256 = "ebb7bfeda56f6fb5a7dc30d9e2749517e0060e15737b092ba18525946e6772c2"


class TableError(RuntimeError):
    pass


@dataclass(frozen=True)
class Rule:
    type_id: str
    pattern: Pattern
    logp: float


@dataclass
class CrippenResult:
    logp: float
    types: list[str]  # per expanded-graph node; "" when untyped
    diagnostics: list[Diagnostic] = field(default_factory=list)


def parse_table(text: str) -> list[Rule]:
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if line.startswith("#") or not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < 3:
            raise TableError(f"line {lineno}: expected at least 3 tab-separated columns")
        rules.append(Rule(cols[0], parse_smarts(cols[1]), float(cols[2])))
    return rules


@lru_cache(maxsize=1)
def load_table() -> tuple[Rule, ...]:
    raw = resources.files(__package__).joinpath("data", TABLE_FILE).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    if digest != TABLE_SHA256:
        raise TableError(f"contribution table checksum mismatch: {digest}")
    return tuple(parse_table(raw.decode("utf-8")))


@lru_cache(maxsize=4096)
def _candidates(key: AtomKey) -> tuple[Rule, ...]:
    return tuple(r for r in load_table() if r.pattern.root_matches(key))


def crippen_contributions(g: MolGraph) -> CrippenResult:
    eg = ExpandedGraph.from_graph(g)
    total = 0.0
    types = []
    diags = []
    for i, key in enumerate(eg.keys):
        for rule in _candidates(key):
            if rule.pattern.matches_at(eg, i):
                total += rule.logp
                types.append(rule.type_id)
                break
        else:
            # no published class fits; the atom contributes nothing
            types.append("")
            where = g.atoms[i].offset if i < eg.n_heavy else g.atoms[eg.adj[i][0][0]].offset
            diags.append(Diagnostic(where, f"atom {i} matches no contribution pattern"))
    return CrippenResult(total, types, diags)


def crippen_logp(g: MolGraph) -> float:
    return crippen_contributions(g).logp
