import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bpemolgan.smiles import (
    BondOrder,
    Fingerprint,
    SmilesError,
    canonical_smiles,
    canonicalize,
    check_valence,
    fingerprint,
    implicit_hydrogens,
    is_valid,
    parse_smiles,
    tanimoto,
    write_smiles,
)
from smiles_fixtures import CANON_SET, INVALID, VALID


def _permute(g, seed):
    order = list(range(len(g.atoms)))
    random.Random(seed).shuffle(order)
    return g.permuted(order)


def _signature(g):
    """Cheap isomorphism check: canonical string plus element and bond-order multisets."""
    return (
        canonicalize(g),
        sorted(a.element for a in g.atoms),
        sorted(b.order.value for b in g.bonds),
    )


# parsing


def test_parse_ethanol():
    g = parse_smiles("CCO")
    assert [a.element for a in g.atoms] == ["C", "C", "O"]
    assert len(g.bonds) == 2
    assert all(b.order is BondOrder.SINGLE for b in g.bonds)


def test_parse_ring():
    g = parse_smiles("C1CC1")
    assert len(g.atoms) == 3 and len(g.bonds) == 3
    assert all(g.degree(i) == 2 for i in range(3))


def test_unclosed_branch_offset():
    with pytest.raises(SmilesError) as exc:
        parse_smiles("C(")
    assert exc.value.offset == 1
    assert "unclosed branch" in exc.value.message


def test_bracket_atom_fields():
    g = parse_smiles("[13CH3-:7]")
    a = g.atoms[0]
    assert (a.isotope, a.element, a.explicit_h, a.charge, a.atom_class) == (13, "C", 3, -1, 7)


def test_percent_ring_closure():
    g = parse_smiles("C%12CCC%12")
    assert len(g.bonds) == 4


def test_aromatic_bonds_inferred():
    g = parse_smiles("c1ccccc1")
    assert all(b.order is BondOrder.AROMATIC for b in g.bonds)
    g = parse_smiles("c1ccccc1-c1ccccc1")
    assert sum(b.order is BondOrder.SINGLE for b in g.bonds) == 1


def test_stereo_parsed_but_ignored():
    assert canonical_smiles("N[C@@H](C)C(=O)O") == canonical_smiles("N[C@H](C)C(=O)O")
    assert canonical_smiles("F/C=C/F") == canonical_smiles("FC=CF")


@pytest.mark.parametrize("smiles,why", VALID)
def test_valid_fixtures(smiles, why):
    assert is_valid(smiles), why


@pytest.mark.parametrize("smiles,why,offset", INVALID)
def test_invalid_fixtures(smiles, why, offset):
    assert not is_valid(smiles), why
    if offset is None:
        return
    try:
        diags = check_valence(parse_smiles(smiles))
        got = diags[0].offset
    except SmilesError as exc:
        got = exc.offset
    assert got == offset


def test_every_diagnostic_has_offset_inside_input():
    for smiles, _, _ in INVALID:
        if not smiles:
            continue
        try:
            diags = check_valence(parse_smiles(smiles))
        except SmilesError as exc:
            diags = [exc.diagnostic]
        assert diags
        for d in diags:
            assert 0 <= d.offset < len(smiles)


# valence


def test_valence_examples():
    assert is_valid("O=C=O")
    assert not is_valid("C#C#C")
    g = parse_smiles("C")
    assert not check_valence(g) and implicit_hydrogens(g, 0) == 4


def test_is_valid_rejects_non_strings():
    assert not is_valid(None)
    assert not is_valid("")


@pytest.mark.parametrize("smiles", ["CC(C)(C)C", "C(F)(F)(F)F", "O=C=O", "N(C)(C)C", "FC"])
def test_adding_bond_to_saturated_atom_invalidates(smiles):
    assert is_valid(smiles)
    g = parse_smiles(smiles)
    sat = [i for i in range(len(g.atoms)) if implicit_hydrogens(g, i) == 0]
    assert sat
    assert not is_valid(_add_methyl(smiles, sat[0]))


def _add_methyl(smiles, atom):
    """Attach a carbon to ``atom`` by rewriting the SMILES with a branch after it."""
    g = parse_smiles(smiles)
    a = g.atoms[atom]
    end = a.offset + (1 if a.element not in ("Cl", "Br") else 2)
    if smiles[a.offset] == "[":
        end = smiles.index("]", a.offset) + 1
    return smiles[:end] + "(C)" + smiles[end:]


def test_multi_component_validity():
    assert is_valid("CCO.O")
    assert not is_valid("CCO.C#C#C")


def test_charge_shifts_valence():
    assert is_valid("C[N+](C)(C)C")
    assert not is_valid("CN(C)(C)C")
    assert is_valid("C[O-]")
    assert not is_valid("C[O-]C")


# writer and canonical form


@pytest.mark.parametrize("smiles", [s for s, _ in VALID])
def test_write_parse_round_trip(smiles):
    g = parse_smiles(smiles)
    g2 = parse_smiles(write_smiles(g))
    assert _signature(g) == _signature(g2)


def test_canonical_examples():
    assert canonicalize(parse_smiles("OCC")) == canonicalize(parse_smiles("CCO"))
    assert canonicalize(parse_smiles("C")) == "C"
    assert canonical_smiles("C1CC") is None


@pytest.mark.parametrize("smiles", CANON_SET[:20])
def test_canonical_permutation_invariance(smiles):
    g = parse_smiles(smiles)
    forms = {canonicalize(_permute(g, seed)) for seed in range(100)}
    assert len(forms) == 1


@pytest.mark.parametrize("smiles", CANON_SET[:20])
def test_canonical_idempotent(smiles):
    c = canonical_smiles(smiles)
    assert canonical_smiles(c) == c


def test_distinct_molecules_distinct_canonical_forms():
    forms = [canonical_smiles(s) for s in CANON_SET]
    assert len(CANON_SET) == 50
    assert len(set(forms)) == 50


def test_components_sorted():
    assert canonical_smiles("O.CCO") == canonical_smiles("CCO.O")


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(CANON_SET), st.integers(0, 2**32 - 1))
def test_canonical_invariance_property(smiles, seed):
    g = parse_smiles(smiles)
    assert canonicalize(_permute(g, seed)) == canonicalize(g)


# fingerprints


def test_fingerprint_examples():
    g = parse_smiles("CCO")
    assert fingerprint(g) == fingerprint(g)
    assert fingerprint(parse_smiles("C")).bits != fingerprint(parse_smiles("CC")).bits


@pytest.mark.parametrize("smiles", CANON_SET[:10])
def test_fingerprint_permutation_invariance(smiles):
    g = parse_smiles(smiles)
    assert fingerprint(_permute(g, 3)) == fingerprint(g)


def test_tanimoto_examples():
    a = Fingerprint(0b1100, 4)
    b = Fingerprint(0b1010, 4)
    assert tanimoto(a, b) == pytest.approx(1 / 3, abs=0)
    assert tanimoto(a, a) == 1.0
    assert tanimoto(Fingerprint(0b1100, 4), Fingerprint(0b0011, 4)) == 0.0
    assert tanimoto(Fingerprint(0, 4), Fingerprint(0, 4)) == 1.0
    with pytest.raises(ValueError):
        tanimoto(Fingerprint(1, 4), Fingerprint(1, 8))


def test_hex_round_trip():
    fp = fingerprint(parse_smiles("c1ccccc1O"))
    text = fp.to_hex()
    assert len(text) == 512
    assert Fingerprint.from_hex(text) == fp


@settings(max_examples=200)
@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1))
def test_tanimoto_symmetric_and_bounded(x, y):
    a, b = Fingerprint(x, 64), Fingerprint(y, 64)
    t = tanimoto(a, b)
    assert t == tanimoto(b, a)
    assert 0.0 <= t <= 1.0
    assert tanimoto(a, a) == 1.0
