"""Core data model shared by every stage of the resolution workflow.

Datasets hold structurally homogeneous entities: every entity carries exactly
one (possibly missing) value per schema field, in schema order.  Pairs are
canonical: bilateral pairs keep (left dataset, right dataset) orientation,
deduplication pairs are ordered byte-lexicographically by id.
"""

from __future__ import annotations

import datetime as _dt
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Iterator, Mapping, Optional, Sequence

BILATERAL = "bilateral"
DEDUP = "dedup"
MODES = (BILATERAL, DEDUP)

DATATYPES = ("string", "integer", "decimal", "date")

# Guard for oracle use of the full cross product.
DEFAULT_OMEGA_CAP = 5_000_000


class ERError(Exception):
    """Base class for all errors raised by erkit."""


class SchemaError(ERError):
    pass


class SelfPairError(ERError):
    pass


class OmegaTooLargeError(ERError):
    pass


class UnknownEntityError(ERError):
    pass


@dataclass(frozen=True)
class Literal:
    lexical: str
    datatype: str = "string"

    def __post_init__(self) -> None:
        if self.datatype not in DATATYPES:
            raise SchemaError(f"unsupported datatype tag {self.datatype!r}")
        check_lexical(self.lexical, self.datatype)

    def __str__(self) -> str:
        return self.lexical


def check_lexical(lexical: str, datatype: str) -> None:
    """Raise SchemaError if ``lexical`` does not parse under ``datatype``."""
    try:
        if datatype == "integer":
            int(lexical.strip(), 10)
        elif datatype == "decimal":
            if not Decimal(lexical.strip()).is_finite():
                raise InvalidOperation
        elif datatype == "date":
            # ISO-8601 calendar dates only (YYYY-MM-DD).
            if len(lexical) != 10:
                raise ValueError
            _dt.date.fromisoformat(lexical)
    except (ValueError, InvalidOperation):
        raise SchemaError(f"{lexical!r} is not a valid {datatype} literal") from None


def _check_iri(value: str, role: str) -> None:
    if not isinstance(value, str) or not value:
        raise SchemaError(f"{role} must be a non-empty IRI string")
    if any(ch in value for ch in ' <>"{}|^`\\') or any(ord(ch) <= 0x20 for ch in value):
        raise SchemaError(f"{role} {value!r} contains characters not allowed in an IRI")


@dataclass(frozen=True)
class IRI:
    value: str

    def __post_init__(self) -> None:
        _check_iri(self.value, "IRI")

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Triple:
    subject: str
    property: str
    object: IRI | Literal

    def __post_init__(self) -> None:
        _check_iri(self.subject, "subject")
        _check_iri(self.property, "property")
        if not isinstance(self.object, (IRI, Literal)):
            raise SchemaError("object must be an IRI or a Literal")


@dataclass(frozen=True)
class Entity:
    id: str
    label: str
    fields: tuple[Optional[Literal], ...]

    def value(self, index: int) -> Optional[Literal]:
        return self.fields[index]


@dataclass(frozen=True, eq=True)
class Dataset:
    """An ordered, schema-conformant collection of entities."""

    name: str
    schema: tuple[str, ...]
    entities: tuple[Entity, ...]
    _index: Mapping[str, int] = field(default=None, compare=False, repr=False, hash=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "schema", tuple(self.schema))
        object.__setattr__(self, "entities", tuple(self.entities))
        if len(set(self.schema)) != len(self.schema):
            raise SchemaError(f"dataset {self.name!r}: duplicate field names in schema")
        index: dict[str, int] = {}
        n = len(self.schema)
        for pos, ent in enumerate(self.entities):
            if ent.id in index:
                raise SchemaError(f"dataset {self.name!r}: duplicate entity id {ent.id!r}")
            if len(ent.fields) != n:
                raise SchemaError(
                    f"dataset {self.name!r}: entity {ent.id!r} has {len(ent.fields)} fields, schema has {n}"
                )
            index[ent.id] = pos
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.entities)

    def __iter__(self) -> Iterator[Entity]:
        return iter(self.entities)

    def __contains__(self, entity_id: object) -> bool:
        return entity_id in self._index

    def get(self, entity_id: str) -> Entity:
        try:
            return self.entities[self._index[entity_id]]
        except KeyError:
            raise UnknownEntityError(f"{entity_id!r} is not an entity of dataset {self.name!r}") from None

    def field_index(self, name: str) -> int:
        try:
            return self.schema.index(name)
        except ValueError:
            raise SchemaError(f"field {name!r} not in schema {list(self.schema)}") from None

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.entities)

    def __hash__(self) -> int:
        return hash((self.name, self.schema, self.entities))


@dataclass(frozen=True, order=True)
class EntityPair:
    left: str
    right: str

    def __iter__(self) -> Iterator[str]:
        yield self.left
        yield self.right


def canonicalize_pair(a: str, b: str, mode: str = BILATERAL) -> EntityPair:
    if not a or not b:
        raise ERError("pair ids must be non-empty")
    if mode == BILATERAL:
        return EntityPair(a, b)
    if mode != DEDUP:
        raise ERError(f"unknown mode {mode!r}")
    if a == b:
        raise SelfPairError(f"self-pair ({a!r}, {a!r}) in deduplication mode")
    # Python str comparison on UTF-8 encodable strings agrees with byte order.
    ab, bb = a.encode("utf-8"), b.encode("utf-8")
    return EntityPair(a, b) if ab < bb else EntityPair(b, a)


def pair_sort_key(pair: EntityPair) -> tuple[bytes, bytes]:
    return pair.left.encode("utf-8"), pair.right.encode("utf-8")


def mode_of(d2: Optional[Dataset]) -> str:
    return DEDUP if d2 is None else BILATERAL


@dataclass(frozen=True)
class CandidateSet:
    """Deduplicated set of candidate pairs produced by a blocking method."""

    pairs: frozenset[EntityPair]
    method: str = "unknown"
    mode: str = BILATERAL
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "pairs", frozenset(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[EntityPair]:
        return iter(self.sorted())

    def __contains__(self, pair: object) -> bool:
        return pair in self.pairs

    def sorted(self) -> list[EntityPair]:
        return sorted(self.pairs, key=pair_sort_key)

    def validate(self, d1: Dataset, d2: Optional[Dataset] = None) -> None:
        _validate_pairs(self.pairs, d1, d2)


@dataclass(frozen=True)
class GroundTruth:
    matches: frozenset[EntityPair]

    def __post_init__(self) -> None:
        object.__setattr__(self, "matches", frozenset(self.matches))

    def __len__(self) -> int:
        return len(self.matches)

    def __contains__(self, pair: object) -> bool:
        return pair in self.matches

    def validate(self, d1: Dataset, d2: Optional[Dataset] = None) -> None:
        _validate_pairs(self.matches, d1, d2)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]], mode: str = BILATERAL) -> "GroundTruth":
        return cls(frozenset(canonicalize_pair(a, b, mode) for a, b in pairs))


def _validate_pairs(pairs: Iterable[EntityPair], d1: Dataset, d2: Optional[Dataset]) -> None:
    right = d1 if d2 is None else d2
    for p in pairs:
        if p.left not in d1:
            raise UnknownEntityError(f"pair {tuple(p)}: {p.left!r} not in {d1.name!r}")
        if p.right not in right:
            raise UnknownEntityError(f"pair {tuple(p)}: {p.right!r} not in {right.name!r}")
        if d2 is None and p.left.encode() >= p.right.encode():
            raise ERError(f"pair {tuple(p)} is not canonical for deduplication")


def omega_size(d1: Dataset, d2: Optional[Dataset] = None) -> int:
    """|D1|*|D2| for bilateral linkage, C(|D|, 2) for deduplication."""
    if d2 is None:
        return math.comb(len(d1), 2)
    return len(d1) * len(d2)


def exhaustive_pairs(d1: Dataset, d2: Optional[Dataset] = None, cap: Optional[int] = DEFAULT_OMEGA_CAP) -> CandidateSet:
    size = omega_size(d1, d2)
    if cap is not None and size > cap:
        raise OmegaTooLargeError(
            f"exhaustive set has {size} pairs, above the oracle cap of {cap}; "
            "use a blocking method instead"
        )
    if d2 is None:
        ids = d1.ids
        pairs = {
            canonicalize_pair(ids[i], ids[j], DEDUP)
            for i in range(len(ids))
            for j in range(i + 1, len(ids))
        }
        return CandidateSet(frozenset(pairs), "exhaustive", DEDUP)
    pairs = {EntityPair(a, b) for a in d1.ids for b in d2.ids}
    return CandidateSet(frozenset(pairs), "exhaustive", BILATERAL)


def conform(values: Mapping[str, Optional[Literal]], schema: Sequence[str]) -> tuple[Optional[Literal], ...]:
    """Lay out a field mapping in schema order, filling gaps with missing values."""
    unknown = set(values) - set(schema)
    if unknown:
        raise SchemaError(f"fields {sorted(unknown)} not in schema")
    return tuple(values.get(name) for name in schema)
