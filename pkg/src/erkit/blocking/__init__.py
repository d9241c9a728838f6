"""Blocking: cheap candidate generation that avoids the full cross product."""

from .blocks import Block, block_pairs, block_purge, candidates_from_blocks, stream_pairs
from .keys import BlockingKey, Clause, apply_key, parse_key
from .lsh import MinHasher, MinHashParams, collision_probability, minhash_lsh, sensitivity, signature_agreement
from .methods import (
    CanopyParams,
    build_canopies,
    canopies,
    sorted_neighborhood,
    traditional_block,
)

__all__ = [
    "Block",
    "BlockingKey",
    "CanopyParams",
    "Clause",
    "MinHashParams",
    "MinHasher",
    "apply_key",
    "block_pairs",
    "block_purge",
    "build_canopies",
    "candidates_from_blocks",
    "canopies",
    "collision_probability",
    "minhash_lsh",
    "parse_key",
    "sensitivity",
    "signature_agreement",
    "sorted_neighborhood",
    "stream_pairs",
    "traditional_block",
]
