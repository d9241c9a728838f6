"""Two-step named entity resolution: blocking, link-specification matching, evaluation."""

__version__ = "0.1.0"

from .model import (
    BILATERAL,
    DEDUP,
    CandidateSet,
    Dataset,
    Entity,
    EntityPair,
    ERError,
    GroundTruth,
    Literal,
    Triple,
    canonicalize_pair,
    exhaustive_pairs,
    omega_size,
)
from .ingest import PropertyMap, load_dataset, parse_csv, parse_ntriples, triples_to_entities

__all__ = [
    "BILATERAL",
    "DEDUP",
    "CandidateSet",
    "Dataset",
    "Entity",
    "EntityPair",
    "ERError",
    "GroundTruth",
    "Literal",
    "PropertyMap",
    "Triple",
    "canonicalize_pair",
    "exhaustive_pairs",
    "load_dataset",
    "omega_size",
    "parse_csv",
    "parse_ntriples",
    "triples_to_entities",
]
