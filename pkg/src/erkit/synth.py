"""Seeded synthetic person corpora with an exact ground truth.

The left dataset holds ``num_entities`` people.  A ``duplicate_fraction`` of
them reappear in the right dataset as corrupted copies; the rest of the right
dataset is fresh people, so both sides have ``num_entities`` records.
"""

from __future__ import annotations

import datetime as _dt
import random
from dataclasses import dataclass
from typing import Optional

from .model import DEDUP, BILATERAL, Dataset, Entity, ERError, GroundTruth, Literal, canonicalize_pair

CORRUPTIONS = ("typo", "token-drop", "initialism", "year-only-dob")
SCHEMA = ("name", "date_of_birth", "zipcode", "gender")

_FIRST = (
    "John", "Mary", "James", "Patricia", "Robert", "Jennifer", "Michael", "Linda", "William", "Elizabeth",
    "David", "Barbara", "Richard", "Susan", "Joseph", "Jessica", "Thomas", "Sarah", "Charles", "Karen",
    "Daniel", "Nancy", "Matthew", "Lisa", "Anthony", "Margaret", "Mark", "Sandra", "Paul", "Ashley",
    "Steven", "Emily", "Andrew", "Donna", "Kenneth", "Michelle", "Joshua", "Carol", "Kevin", "Amanda",
)
_MIDDLE = ("Kenneth", "Lee", "Ann", "Marie", "Ray", "Lynn", "Jo", "Grace", "Paul", "Rose", "Dean", "Jean")
_LAST = (
    "Adams", "Smith", "Johnson", "Williams", "Brown", "Jones", "Garcia", "Miller", "Davis", "Rodriguez",
    "Martinez", "Hernandez", "Lopez", "Gonzalez", "Wilson", "Anderson", "Taylor", "Moore", "Jackson",
    "Martin", "Lee", "Perez", "Thompson", "White", "Harris", "Sanchez", "Clark", "Ramirez", "Lewis",
    "Robinson", "Walker", "Young", "Allen", "King", "Wright", "Scott", "Torres", "Nguyen", "Hill", "Flores",
)
_LETTERS = "abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class SyntheticCorpusSpec:
    num_entities: int = 100
    duplicate_fraction: float = 0.3
    corruptions: tuple[str, ...] = ("typo", "initialism")
    seed: int = 0
    # Probability that a duplicate is corrupted at all; corrupted copies get at least one op.
    corruption_rate: float = 1.0
    dedup: bool = False

    def __post_init__(self) -> None:
        if self.num_entities < 0:
            raise ERError("num_entities must be >= 0")
        if not 0.0 <= self.duplicate_fraction <= 1.0:
            raise ERError("duplicate_fraction must lie in [0, 1]")
        if not 0.0 <= self.corruption_rate <= 1.0:
            raise ERError("corruption_rate must lie in [0, 1]")
        object.__setattr__(self, "corruptions", tuple(self.corruptions))
        bad = set(self.corruptions) - set(CORRUPTIONS)
        if bad:
            raise ERError(f"unknown corruption ops {sorted(bad)}; expected a subset of {CORRUPTIONS}")

    @property
    def num_duplicates(self) -> int:
        return round(self.num_entities * self.duplicate_fraction)


def _person(rng: random.Random) -> dict[str, str]:
    parts = [rng.choice(_FIRST)]
    if rng.random() < 0.5:
        parts.append(rng.choice(_MIDDLE))
    parts.append(rng.choice(_LAST))
    dob = _dt.date(1940, 1, 1) + _dt.timedelta(days=rng.randrange(365 * 65))
    return {
        "name": " ".join(parts),
        "date_of_birth": dob.isoformat(),
        "zipcode": f"{rng.randrange(10000, 99999)}",
        "gender": rng.choice(("male", "female")),
    }


def _typo(rng: random.Random, text: str) -> str:
    if len(text) < 2:
        return text + rng.choice(_LETTERS)
    i = rng.randrange(len(text))
    op = rng.choice(("substitute", "insert", "delete", "transpose"))
    if op == "substitute":
        return text[:i] + rng.choice(_LETTERS) + text[i + 1:]
    if op == "insert":
        return text[:i] + rng.choice(_LETTERS) + text[i:]
    if op == "delete":
        return text[:i] + text[i + 1:]
    i = min(i, len(text) - 2)
    return text[:i] + text[i + 1] + text[i] + text[i + 2:]


def _corrupt(rng: random.Random, rec: dict[str, str], op: str) -> None:
    tokens = rec["name"].split()
    if op == "typo":
        rec["name"] = _typo(rng, rec["name"])
    elif op == "token-drop":
        if len(tokens) > 1:
            del tokens[rng.randrange(len(tokens) - 1)]
            rec["name"] = " ".join(tokens)
    elif op == "initialism":
        # "John Kenneth Adams" -> "J. K. Adams"
        rec["name"] = " ".join([t[0] + "." for t in tokens[:-1]] + tokens[-1:])
    elif op == "year-only-dob":
        rec["date_of_birth"] = rec["date_of_birth"][:4]


def _entity(eid: str, rec: dict[str, str]) -> Entity:
    return Entity(eid, rec["name"], tuple(Literal(rec[f]) if rec.get(f) else None for f in SCHEMA))


def generate_corpus(spec: SyntheticCorpusSpec) -> tuple[Dataset, Optional[Dataset], GroundTruth]:
    """Return ``(left, right, ground_truth)``; ``right`` is None in dedup mode.

    In dedup mode the corrupted copies are appended to the single dataset.
    """
    rng = random.Random(spec.seed)
    base = [_person(rng) for _ in range(spec.num_entities)]
    dup_idx = sorted(rng.sample(range(spec.num_entities), spec.num_duplicates))
    copies = []
    for i in dup_idx:
        rec = dict(base[i])
        if spec.corruptions and rng.random() < spec.corruption_rate:
            ops = [op for op in spec.corruptions if rng.random() < 0.5]
            if not ops:
                ops = [rng.choice(spec.corruptions)]
            for op in ops:
                _corrupt(rng, rec, op)
        copies.append((i, rec))

    width = max(4, len(str(2 * spec.num_entities)))
    left_ids = [f"urn:left:{i:0{width}d}" for i in range(spec.num_entities)]
    left = [_entity(eid, rec) for eid, rec in zip(left_ids, base)]

    if spec.dedup:
        extra = [_entity(f"urn:left:{spec.num_entities + k:0{width}d}", rec) for k, (_, rec) in enumerate(copies)]
        ds = Dataset("corpus", SCHEMA, tuple(left + extra))
        gt = GroundTruth(frozenset(
            canonicalize_pair(left_ids[i], e.id, DEDUP) for (i, _), e in zip(copies, extra)
        ))
        return ds, None, gt

    right_recs = [rec for _, rec in copies] + [_person(rng) for _ in range(spec.num_entities - len(copies))]
    # Shuffle so duplicates are not positionally aligned with their originals.
    order = list(range(len(right_recs)))
    rng.shuffle(order)
    right_ids = [f"urn:right:{k:0{width}d}" for k in range(len(right_recs))]
    right = [None] * len(right_recs)
    gt_pairs = []
    for new_pos, old_pos in enumerate(order):
        right[new_pos] = _entity(right_ids[new_pos], right_recs[old_pos])
        if old_pos < len(copies):
            gt_pairs.append(canonicalize_pair(left_ids[copies[old_pos][0]], right_ids[new_pos], BILATERAL))
    return (
        Dataset("left", SCHEMA, tuple(left)),
        Dataset("right", SCHEMA, tuple(right)),
        GroundTruth(frozenset(gt_pairs)),
    )
