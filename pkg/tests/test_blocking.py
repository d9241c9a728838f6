import random
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from erkit.blocking import (
    Block,
    CanopyParams,
    MinHasher,
    MinHashParams,
    apply_key,
    block_purge,
    build_canopies,
    canopies,
    collision_probability,
    minhash_lsh,
    parse_key,
    sensitivity,
    signature_agreement,
    sorted_neighborhood,
    stream_pairs,
    traditional_block,
)
from erkit.blocking.blocks import LEFT, RIGHT
from erkit.blocking.methods import sorted_neighborhood_blocks, sorted_records, traditional_blocks
from erkit.ingest import PropertyMap, parse_ntriples, triples_to_entities
from erkit.model import DEDUP, EntityPair, ERError, SchemaError, canonicalize_pair, exhaustive_pairs

from conftest import KG1, KG2, KG2_MAP, make_dataset, names_dataset, random_instance

KEY_EX1 = "tokens(@label) | year(date_of_birth)"
KEY_SN = "concat(initials(name), first(zipcode, 2))"


def pkgs():
    d1 = triples_to_entities(parse_ntriples(KG1), name="kg1", label_property="name")
    d2 = triples_to_entities(parse_ntriples(KG2), PropertyMap(KG2_MAP), name="kg2", label_property="name")
    return d1, d2


def fig3_table():
    # Sorting keys AB10 < AB12 < BC20 < BC21 < CD30 put the records in id order.
    rows = {
        "1": {"name": "Alice Brown", "zipcode": "10001"},
        "2": {"name": "Alan Burke", "zipcode": "12345"},
        "3": {"name": "Bob Carter", "zipcode": "20001"},
        "4": {"name": "Betty Cole", "zipcode": "21000"},
        "5": {"name": "Carl Dunn", "zipcode": "30000"},
    }
    return make_dataset("people", rows, ("name", "zipcode"))


# ----------------------------------------------------------------------------
# keys

def test_example1_blocking_key_values():
    d1, d2 = pkgs()
    key = parse_key(KEY_EX1)
    john = d1.get("http://kg1.example.org/John_Adams")
    jk = d2.get("http://kg2.example.org/p/17")
    assert apply_key(key, john, d1.schema) == {"John", "Adams", "1998"}
    assert apply_key(key, jk, d2.schema) == {"J", "K", "Adams", "1998"}
    c = traditional_block(key, d1, d2)
    assert EntityPair(john.id, jk.id) in c


def test_local_name_label_gives_same_tokens():
    d1 = triples_to_entities(parse_ntriples(KG1))
    john = d1.get("http://kg1.example.org/John_Adams")
    assert apply_key(parse_key(KEY_EX1), john, d1.schema) == {"John", "Adams", "1998"}


def test_key_parser_round_trip_and_errors():
    key = parse_key(KEY_SN, single_value=True)
    assert str(key) == KEY_SN
    assert parse_key(str(parse_key(KEY_EX1))) == parse_key(KEY_EX1)
    for bad in ["", "tokens(", "soundex(name)", "first(name)", "concat(concat(exact(a)))", "tokens(a) tokens(b)"]:
        with pytest.raises(SchemaError):
            parse_key(bad)
    with pytest.raises(SchemaError):
        parse_key(KEY_EX1, single_value=True)
    # a lone clause is accepted as a single-value key
    assert parse_key("exact(name)", single_value=True).single_value


def test_key_lowercase_and_fallback():
    d = make_dataset("d", {"x": {"name": "Ann LEE", "zipcode": ""}}, ("name", "zipcode"))
    e = d.get("x")
    assert apply_key(parse_key("tokens(name)", lowercase=True), e, d.schema) == {"ann", "lee"}
    assert apply_key(parse_key(KEY_SN, single_value=True), e, d.schema) == {"AL"}
    # no value at all: the entity id keeps the BKV set non-empty
    assert apply_key(parse_key("exact(zipcode)"), e, d.schema) == {"x"}


def test_key_rejects_unknown_field():
    with pytest.raises(SchemaError):
        traditional_block(parse_key("tokens(surname)"), names_dataset("d", {"a": "x"}))


# ----------------------------------------------------------------------------
# traditional

def test_traditional_dedup_and_bilateral():
    d = names_dataset("d", {"a": "ann lee", "b": "lee fox", "c": "kai"})
    c = traditional_block(parse_key("tokens(name)"), d)
    assert c.pairs == {EntityPair("a", "b")}
    d2 = names_dataset("e", {"a": "lee", "z": "kai"})
    c2 = traditional_block(parse_key("tokens(name)"), d, d2)
    # same id on both sides is a legitimate bilateral pair
    assert c2.pairs == {EntityPair("a", "a"), EntityPair("b", "a"), EntityPair("c", "z")}


def test_purging_drops_oversized_blocks():
    d = names_dataset("d", {str(i): f"common n{i % 2}" for i in range(6)})
    full = traditional_block(parse_key("tokens(name)"), d)
    assert len(full) == 15
    purged = traditional_block(parse_key("tokens(name)"), d, max_block_size=3)
    assert len(purged) == 6
    assert purged.meta["purged_blocks"] == 1
    with pytest.raises(ERError):
        block_purge([], 1)


# ----------------------------------------------------------------------------
# Sorted Neighborhood

def test_example2_sorted_neighborhood():
    d = fig3_table()
    key = parse_key(KEY_SN, single_value=True)
    assert [r[2] for r in sorted_records(key, d)] == ["1", "2", "3", "4", "5"]
    blocks = sorted_neighborhood_blocks(key, 4, d)
    first = {canonicalize_pair(a, b, DEDUP) for (_, a), (_, b) in combinations(blocks[0].members, 2)}
    assert first == {EntityPair(*p) for p in [("1", "2"), ("1", "3"), ("1", "4"), ("2", "3"), ("2", "4"), ("3", "4")]}
    c = sorted_neighborhood(key, 4, d)
    assert c.pairs - first == {EntityPair("2", "5"), EntityPair("3", "5"), EntityPair("4", "5")}
    assert len(c) == 9


def test_sn_window_larger_than_pool():
    d = fig3_table()
    key = parse_key(KEY_SN, single_value=True)
    assert sorted_neighborhood(key, 50, d).pairs == exhaustive_pairs(d).pairs
    with pytest.raises(ERError):
        sorted_neighborhood(key, 1, d)
    assert len(sorted_neighborhood(key, 4, make_dataset("e", {}, ("name", "zipcode")))) == 0


def _sn_oracle(key, w, d1, d2):
    recs = sorted_records(key, d1, d2)
    out = set()
    for i in range(len(recs)):
        for j in range(i + 1, min(len(recs), i + max(w, 1))):
            (_, ta, a), (_, tb, b) = recs[i], recs[j]
            if d2 is None:
                out.add(canonicalize_pair(a, b, DEDUP))
            elif ta != tb:
                out.add(EntityPair(a, b) if ta == LEFT else EntityPair(b, a))
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 8), st.booleans())
def test_sn_matches_sliding_window_oracle(seed, w, dedup):
    d1, d2 = random_instance(random.Random(seed), dedup)
    key = parse_key("concat(first(name, 2), exact(year))", single_value=True)
    assert sorted_neighborhood(key, w, d1, d2).pairs == _sn_oracle(key, w, d1, d2)


def test_sn_bilateral_pairs_cross_only():
    d1 = make_dataset("l", {"l1": {"name": "aa"}, "l2": {"name": "ab"}})
    d2 = make_dataset("r", {"r1": {"name": "aa"}, "r2": {"name": "zz"}})
    c = sorted_neighborhood(parse_key("exact(name)", single_value=True), 2, d1, d2)
    assert all(p.left.startswith("l") and p.right.startswith("r") for p in c.pairs)
    assert EntityPair("l1", "r1") in c


# ----------------------------------------------------------------------------
# Canopies

def test_canopy_hand_trace():
    d = names_dataset("d", {
        "e1": "Ann Lee", "e2": "Ann Lee Cruz", "e3": "Ann Bob",
        "e4": "Bob Fox", "e5": "Fox Bob", "e6": "Bob Fox Gil",
    })
    built = build_canopies(CanopyParams(tight=0.3, loose=0.6), d, None, "@label")
    got = [(c.seed[1], sorted(m[1] for m in c.members)) for c in built]
    assert got == [
        ("e1", ["e1", "e2"]),
        ("e2", ["e2"]),
        ("e3", ["e3"]),
        ("e4", ["e4", "e5", "e6"]),  # e5 is within tight distance and never seeds
        ("e6", ["e6"]),
    ]
    c = canopies(CanopyParams(0.3, 0.6), d)
    assert c.pairs == {EntityPair(*p) for p in [("e1", "e2"), ("e4", "e5"), ("e4", "e6"), ("e5", "e6")]}


def test_canopy_params_validation():
    with pytest.raises(ERError):
        CanopyParams(tight=0.7, loose=0.6)
    with pytest.raises(ERError):
        CanopyParams(0.1, 0.2, distance="cosine")


def test_canopy_bilateral_seeds_from_smaller_side():
    small = names_dataset("s", {"s1": "ann lee"})
    big = names_dataset("b", {"b1": "ann lee", "b2": "ann", "b3": "kai"})
    built = build_canopies(CanopyParams(0.3, 0.6), big, small, "@label")
    assert built[0].seed == (RIGHT, "s1")
    c = canopies(CanopyParams(0.3, 0.6), big, small)
    assert c.pairs == {EntityPair("b1", "s1"), EntityPair("b2", "s1")}


def test_canopy_levenshtein_distance():
    d = names_dataset("d", {"a": "Jon Smith", "b": "John Smith", "c": "Mary Jones"})
    c = canopies(CanopyParams(0.05, 0.3, distance="levenshtein"), d)
    assert c.pairs == {EntityPair("a", "b")}


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.booleans(), st.booleans())
def test_canopy_coverage(seed, dedup, random_seeds):
    rng = random.Random(seed)
    d1, d2 = random_instance(rng, dedup)
    tight = rng.uniform(0, 0.6)
    params = CanopyParams(tight, rng.uniform(tight, 1.0), random_seeds=random_seeds, seed=seed)
    built = build_canopies(params, d1, d2, "@label")
    covered = {m for c in built for m in c.members}
    expected = {(LEFT, e.id) for e in d1} | ({(RIGHT, e.id) for e in d2} if d2 is not None else set())
    assert covered == expected


# ----------------------------------------------------------------------------
# MinHash LSH

def test_collision_probability_formula():
    assert collision_probability(0.5, 32, 8) == pytest.approx(1 - (1 - 0.5**8) ** 32)
    assert collision_probability(1.0, 4, 4) == 1.0
    assert collision_probability(0.0, 4, 4) == 0.0
    rep = sensitivity(32, 8)
    assert rep["p_r"] > rep["p_s"]
    assert rep["threshold_similarity"] == pytest.approx((1 / 32) ** (1 / 8))


def test_signature_agreement_estimates_jaccard():
    h = MinHasher(512, seed=3)
    a = [f"t{i}" for i in range(60)]
    b = [f"t{i}" for i in range(20, 80)]  # J = 40/80
    assert abs(signature_agreement(h.signature(a), h.signature(b)) - 0.5) < 0.08
    assert signature_agreement(h.signature(a), h.signature(list(reversed(a)))) == 1.0
    assert h.signature([]) is None


def test_minhash_is_seeded():
    a = MinHasher(16, seed=5).signature(["x", "y"])
    assert np.array_equal(a, MinHasher(16, seed=5).signature(["y", "x"]))
    assert not np.array_equal(a, MinHasher(16, seed=6).signature(["x", "y"]))


def test_minhash_params_validation():
    with pytest.raises(ERError):
        MinHashParams(num_hashes=100, bands=32, rows=8)


def test_minhash_identical_labels_always_collide():
    d1 = names_dataset("l", {"l1": "ann lee cruz", "l2": "kai ito"})
    d2 = names_dataset("r", {"r1": "Cruz, Ann Lee", "r2": "bob hale"})
    c = minhash_lsh(MinHashParams(), d1, d2)
    assert EntityPair("l1", "r1") in c
    assert c.meta["sensitivity"]["r"] == 0.2


# ----------------------------------------------------------------------------
# shared properties

def _shares_bkv_oracle(key, d1, d2):
    def bkvs(ds):
        return {e.id: apply_key(key, e, ds.schema) for e in ds}

    k1 = bkvs(d1)
    if d2 is None:
        return {canonicalize_pair(a, b, DEDUP) for a, b in combinations(k1, 2) if k1[a] & k1[b]}
    k2 = bkvs(d2)
    return {EntityPair(a, b) for a in k1 for b in k2 if k1[a] & k2[b]}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_traditional_equals_shared_bkv_oracle(seed, dedup):
    d1, d2 = random_instance(random.Random(seed), dedup)
    key = parse_key("tokens(name) | exact(year)")
    c = traditional_block(key, d1, d2)
    assert c.pairs == _shares_bkv_oracle(key, d1, d2)
    assert set(stream_pairs(traditional_blocks(key, d1, d2), c.mode)) == c.pairs


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_every_method_is_subset_of_omega_without_self_pairs(seed, dedup):
    d1, d2 = random_instance(random.Random(seed), dedup)
    omega = exhaustive_pairs(d1, d2).pairs
    results = [
        traditional_block(parse_key("tokens(name)"), d1, d2),
        sorted_neighborhood(parse_key("exact(name)", single_value=True), 3, d1, d2),
        canopies(CanopyParams(0.3, 0.7), d1, d2),
        minhash_lsh(MinHashParams(64, 16, 4, seed), d1, d2),
    ]
    for c in results:
        assert c.pairs <= omega
        if d2 is None:
            assert all(p.left != p.right for p in c.pairs)


def test_block_requires_members():
    with pytest.raises(ERError):
        Block("k", ())
