"""Traditional blocking, Sorted Neighborhood and Canopies.

Every method works in two modes: bilateral linkage of ``d1`` against ``d2``,
or deduplication of ``d1`` alone when ``d2`` is None.  Each method is split
into a ``*_blocks`` function (also used for streaming) and a function returning
the deduplicated :class:`~erkit.model.CandidateSet`.
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Optional

from ..model import CandidateSet, Dataset, ERError, Entity, SchemaError, mode_of
from ..text import jaccard_distance, normalized_levenshtein, token_set
from .blocks import LEFT, RIGHT, Block, Member, candidates_from_blocks
from .keys import BlockingKey, apply_key, single_bkv


def _tagged(d1: Dataset, d2: Optional[Dataset]) -> list[tuple[int, Dataset]]:
    if d2 is None:
        return [(LEFT, d1)]
    if d1.schema != d2.schema:
        raise SchemaError(
            f"datasets {d1.name!r} and {d2.name!r} are not structurally homogeneous: "
            f"{list(d1.schema)} vs {list(d2.schema)}"
        )
    return [(LEFT, d1), (RIGHT, d2)]


# ----------------------------------------------------------------------------
# traditional blocking

def traditional_blocks(key: BlockingKey, d1: Dataset, d2: Optional[Dataset] = None) -> list[Block]:
    """Inverted index BKV -> members, one block per BKV, sorted by BKV."""
    key.check_schema(d1.schema)
    index: dict[str, list[Member]] = defaultdict(list)
    for tag, ds in _tagged(d1, d2):
        for e in ds:
            for bkv in sorted(apply_key(key, e, ds.schema)):
                index[bkv].append((tag, e.id))
    return [Block(bkv, tuple(index[bkv])) for bkv in sorted(index)]


def traditional_block(
    key: BlockingKey,
    d1: Dataset,
    d2: Optional[Dataset] = None,
    *,
    max_block_size: Optional[int] = None,
) -> CandidateSet:
    blocks = traditional_blocks(key, d1, d2)
    return candidates_from_blocks(
        blocks, mode_of(d2), "traditional", max_block_size, {"key": str(key)}
    )


# ----------------------------------------------------------------------------
# Sorted Neighborhood

def sorted_records(key: BlockingKey, d1: Dataset, d2: Optional[Dataset] = None) -> list[tuple[str, int, str]]:
    """(bkv, tag, id) for every entity, sorted by BKV then dataset tag then id."""
    if not key.single_value:
        raise SchemaError("Sorted Neighborhood needs a single-value key")
    key.check_schema(d1.schema)
    recs = [(single_bkv(key, e, ds.schema), tag, e.id) for tag, ds in _tagged(d1, d2) for e in ds]
    recs.sort(key=lambda r: (r[0].encode("utf-8"), r[1], r[2].encode("utf-8")))
    return recs


def sorted_neighborhood_blocks(
    key: BlockingKey, window: int, d1: Dataset, d2: Optional[Dataset] = None
) -> list[Block]:
    """One block per window position.

    A window larger than the pooled record count covers the whole pool.
    """
    if window < 2:
        raise ERError("window must be at least 2")
    recs = sorted_records(key, d1, d2)
    if not recs:
        return []
    members = [(tag, eid) for _, tag, eid in recs]
    if len(members) <= window:
        return [Block("window:0", tuple(members))]
    return [
        Block(f"window:{start}", tuple(members[start:start + window]))
        for start in range(len(members) - window + 1)
    ]


def sorted_neighborhood(
    key: BlockingKey,
    window: int,
    d1: Dataset,
    d2: Optional[Dataset] = None,
    *,
    max_block_size: Optional[int] = None,
) -> CandidateSet:
    blocks = sorted_neighborhood_blocks(key, window, d1, d2)
    return candidates_from_blocks(
        blocks, mode_of(d2), "sorted_neighborhood", max_block_size, {"key": str(key), "window": window}
    )


# ----------------------------------------------------------------------------
# Canopies

DISTANCES = ("jaccard", "levenshtein")


@dataclass(frozen=True)
class CanopyParams:
    tight: float
    loose: float
    distance: str = "jaccard"
    random_seeds: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.tight < 0:
            raise ERError("tight must be >= 0")
        if self.loose < self.tight:
            raise ERError(f"loose ({self.loose}) must be >= tight ({self.tight})")
        if self.distance not in DISTANCES:
            raise ERError(f"unknown canopy distance {self.distance!r}; expected one of {DISTANCES}")


def _feature(entity: Entity, field: str, ds: Dataset) -> Optional[str]:
    if field == "@label":
        return entity.label
    v = entity.fields[ds.field_index(field)]
    return None if v is None else v.lexical


def _distance_fn(name: str) -> tuple[Callable, Callable]:
    if name == "jaccard":
        return (lambda text: token_set(text)), jaccard_distance

    def lev_distance(a: Optional[str], b: Optional[str]) -> float:
        if a is None or b is None:
            return 1.0
        return 1.0 - normalized_levenshtein(a, b)

    return (lambda text: None if text is None else text.lower()), lev_distance


@dataclass
class Canopy:
    seed: Member
    members: list[Member]


def build_canopies(params: CanopyParams, d1: Dataset, d2: Optional[Dataset], field: str) -> list[Canopy]:
    """Canopy clustering with cheap-distance thresholds.

    Bilateral mode seeds exclusively from the smaller dataset (ties: smaller
    dataset name), in ascending id order.  Deduplication seeds in ascending
    id order over the remaining entities, or in a seeded random order with
    ``params.random_seeds``.  Entities no seed reached end in singleton
    canopies so that every entity belongs to at least one canopy.
    """
    tagged = _tagged(d1, d2)
    prep, dist = _distance_fn(params.distance)
    reps: dict[Member, object] = {}
    order: list[Member] = []
    for tag, ds in tagged:
        for e in sorted(ds, key=lambda x: x.id.encode("utf-8")):
            reps[(tag, e.id)] = prep(_feature(e, field, ds))
            order.append((tag, e.id))

    if d2 is None:
        seed_tag = LEFT
    elif len(d1) != len(d2):
        seed_tag = LEFT if len(d1) < len(d2) else RIGHT
    else:
        seed_tag = LEFT if d1.name.encode() <= d2.name.encode() else RIGHT
    seeds = [m for m in order if m[0] == seed_tag]
    if params.random_seeds:
        random.Random(params.seed).shuffle(seeds)

    remaining = dict.fromkeys(order)  # insertion-ordered set
    assigned: set[Member] = set()
    canopies: list[Canopy] = []
    for s in seeds:
        if s not in remaining:
            continue
        members = [s]
        removed = [s]
        for m in remaining:
            if m == s:
                continue
            d = dist(reps[s], reps[m])
            if d < params.loose:
                members.append(m)
                if d < params.tight:
                    removed.append(m)
        for m in removed:
            del remaining[m]
        assigned.update(members)
        canopies.append(Canopy(s, members))
    for m in order:
        if m not in assigned:
            canopies.append(Canopy(m, [m]))
    return canopies


def canopy_blocks(params: CanopyParams, d1: Dataset, d2: Optional[Dataset], field: str) -> list[Block]:
    return [Block(f"canopy:{c.seed[0]}:{c.seed[1]}", tuple(c.members)) for c in build_canopies(params, d1, d2, field)]


def canopies(
    params: CanopyParams,
    d1: Dataset,
    d2: Optional[Dataset] = None,
    field: str = "@label",
    *,
    max_block_size: Optional[int] = None,
) -> CandidateSet:
    blocks = canopy_blocks(params, d1, d2, field)
    meta = {
        "tight": params.tight,
        "loose": params.loose,
        "distance": params.distance,
        "field": field,
        "seed_order": "random" if params.random_seeds else "ascending-id",
    }
    return candidates_from_blocks(blocks, mode_of(d2), "canopies", max_block_size, meta)

