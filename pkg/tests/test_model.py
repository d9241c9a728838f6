import pytest
from hypothesis import given, strategies as st

from erkit.model import (
    BILATERAL,
    DEDUP,
    CandidateSet,
    Dataset,
    Entity,
    EntityPair,
    ERError,
    GroundTruth,
    Literal,
    OmegaTooLargeError,
    SchemaError,
    SelfPairError,
    UnknownEntityError,
    canonicalize_pair,
    conform,
    exhaustive_pairs,
    omega_size,
)

from conftest import names_dataset


def test_literal_datatypes():
    assert Literal("42", "integer").lexical == "42"
    assert Literal("3.25", "decimal").datatype == "decimal"
    assert Literal("1998-04-02", "date")
    for lex, dt in [("4x2", "integer"), ("nan", "decimal"), ("1998-4-2", "date"), ("1998-02-30", "date")]:
        with pytest.raises(SchemaError):
            Literal(lex, dt)
    with pytest.raises(SchemaError):
        Literal("x", "boolean")


def test_dataset_rejects_duplicates_and_ragged_rows():
    e = Entity("a", "A", (None,))
    with pytest.raises(SchemaError):
        Dataset("d", ("name",), (e, e))
    with pytest.raises(SchemaError):
        Dataset("d", ("name",), (Entity("b", "B", (None, None)),))
    with pytest.raises(SchemaError):
        Dataset("d", ("name", "name"), ())


def test_dataset_lookup():
    d = names_dataset("d", {"x": "X", "y": "Y"})
    assert d.get("y").label == "Y"
    assert "x" in d and "z" not in d
    with pytest.raises(UnknownEntityError):
        d.get("z")


def test_dedup_canonical_order_is_bytewise():
    assert canonicalize_pair("b", "a", DEDUP) == EntityPair("a", "b")
    # 'é' (U+00E9) sorts after 'z' in UTF-8 bytes
    assert canonicalize_pair("é", "z", DEDUP) == EntityPair("z", "é")
    assert canonicalize_pair("b", "a", BILATERAL) == EntityPair("b", "a")
    with pytest.raises(SelfPairError):
        canonicalize_pair("a", "a", DEDUP)


@given(st.text(min_size=1, max_size=8), st.text(min_size=1, max_size=8))
def test_dedup_canonicalization_symmetric(a, b):
    if a == b:
        return
    p, q = canonicalize_pair(a, b, DEDUP), canonicalize_pair(b, a, DEDUP)
    assert p == q
    assert p.left.encode() < p.right.encode()


def test_omega_sizes():
    d1 = names_dataset("a", {str(i): "x" for i in range(4)})
    d2 = names_dataset("b", {str(i): "x" for i in range(3)})
    assert omega_size(d1, d2) == 12
    assert omega_size(d1) == 6
    assert len(exhaustive_pairs(d1, d2)) == 12
    assert len(exhaustive_pairs(d1)) == 6
    assert omega_size(names_dataset("e", {}), d2) == 0
    with pytest.raises(OmegaTooLargeError):
        exhaustive_pairs(d1, d2, cap=11)


def test_candidate_validation():
    d1 = names_dataset("a", {"a1": "x"})
    d2 = names_dataset("b", {"b1": "x"})
    CandidateSet(frozenset({EntityPair("a1", "b1")})).validate(d1, d2)
    with pytest.raises(UnknownEntityError):
        CandidateSet(frozenset({EntityPair("b1", "a1")})).validate(d1, d2)
    dd = names_dataset("d", {"p": "x", "q": "y"})
    with pytest.raises(ERError):
        GroundTruth(frozenset({EntityPair("q", "p")})).validate(dd)
    GroundTruth.from_pairs([("q", "p")], DEDUP).validate(dd)


def test_conform_fills_missing():
    lit = Literal("v")
    assert conform({"b": lit}, ("a", "b")) == (None, lit)
    with pytest.raises(SchemaError):
        conform({"c": lit}, ("a", "b"))
