"""MinHash signatures and banded LSH candidate generation."""

from __future__ import annotations

import hashlib
import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from ..model import CandidateSet, Dataset, ERError, mode_of
from ..text import token_set
from .blocks import LEFT, RIGHT, Block, Member, candidates_from_blocks

logger = logging.getLogger(__name__)

# Largest prime below 2**32: a*x + b < 2**64 for a, b, x < P, so uint64 math is exact.
HASH_PRIME = 4294967291


@dataclass(frozen=True)
class MinHashParams:
    num_hashes: int = 256
    bands: int = 32
    rows: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_hashes < 1 or self.bands < 1 or self.rows < 1:
            raise ERError("num_hashes, bands and rows must be positive")
        if self.bands * self.rows != self.num_hashes:
            raise ERError(f"bands * rows ({self.bands}*{self.rows}) != num_hashes ({self.num_hashes})")


def token_hash(token: str) -> int:
    """Stable 32-bit-range hash of a token (independent of PYTHONHASHSEED)."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % HASH_PRIME


class MinHasher:
    """Family of ``num_hashes`` universal hashes h(x) = (a*x + b) mod P drawn from ``seed``."""

    def __init__(self, num_hashes: int, seed: int = 0):
        rng = np.random.default_rng(seed % 2**64)
        self.num_hashes = num_hashes
        self.a = rng.integers(1, HASH_PRIME, size=num_hashes, dtype=np.uint64)
        self.b = rng.integers(0, HASH_PRIME, size=num_hashes, dtype=np.uint64)

    def signature(self, tokens: Iterable[str]) -> Optional[np.ndarray]:
        xs = np.fromiter((token_hash(t) for t in sorted(set(tokens))), dtype=np.uint64)
        if xs.size == 0:
            return None
        hashed = (np.outer(self.a, xs) + self.b[:, None]) % np.uint64(HASH_PRIME)
        return hashed.min(axis=1)


def signature_agreement(s1: np.ndarray, s2: np.ndarray) -> float:
    """Fraction of signature positions that agree; estimates Jaccard similarity."""
    return float(np.mean(s1 == s2))


def band_keys(signature: np.ndarray, bands: int, rows: int) -> list[bytes]:
    return [signature[i * rows:(i + 1) * rows].tobytes() for i in range(bands)]


def collision_probability(similarity: float, bands: int, rows: int) -> float:
    """P(pair becomes a candidate | Jaccard similarity) = 1 - (1 - s**rows)**bands."""
    return 1.0 - (1.0 - similarity ** rows) ** bands


def sensitivity(bands: int, rows: int, r: float = 0.2, s: float = 0.6) -> dict:
    """(r, s, p_r, p_s) reading of the banded family for Jaccard distance radii r < s."""
    if not 0 <= r < s <= 1:
        raise ERError("need 0 <= r < s <= 1")
    return {
        "distance": "jaccard",
        "r": r,
        "s": s,
        "p_r": collision_probability(1.0 - r, bands, rows),
        "p_s": collision_probability(1.0 - s, bands, rows),
        "threshold_similarity": (1.0 / bands) ** (1.0 / rows),
        "curve": [
            {"similarity": x / 10, "p_candidate": collision_probability(x / 10, bands, rows)}
            for x in range(11)
        ],
    }


def _text(entity, field: str, ds: Dataset) -> Optional[str]:
    if field == "@label":
        return entity.label
    v = entity.fields[ds.field_index(field)]
    return None if v is None else v.lexical


def signatures(
    params: MinHashParams, d1: Dataset, d2: Optional[Dataset], field: str
) -> tuple[dict[Member, np.ndarray], list[Member]]:
    """Signatures per (tag, id); the second value lists members with no tokens."""
    hasher = MinHasher(params.num_hashes, params.seed)
    sigs: dict[Member, np.ndarray] = {}
    empty: list[Member] = []
    tagged = [(LEFT, d1)] if d2 is None else [(LEFT, d1), (RIGHT, d2)]
    for tag, ds in tagged:
        for e in ds:
            sig = hasher.signature(token_set(_text(e, field, ds)))
            if sig is None:
                empty.append((tag, e.id))
            else:
                sigs[(tag, e.id)] = sig
    if empty:
        logger.warning("%d entities have no tokens in %r and get no signature", len(empty), field)
    return sigs, empty


def lsh_blocks(params: MinHashParams, d1: Dataset, d2: Optional[Dataset], field: str) -> list[Block]:
    sigs, _ = signatures(params, d1, d2, field)
    buckets: dict[tuple[int, bytes], list[Member]] = defaultdict(list)
    for member in sorted(sigs, key=lambda m: (m[0], m[1].encode("utf-8"))):
        for band, key in enumerate(band_keys(sigs[member], params.bands, params.rows)):
            buckets[(band, key)].append(member)
    return [
        Block(f"band{band}:{key.hex()}", tuple(members))
        for (band, key), members in sorted(buckets.items())
        if len(members) > 1
    ]


def minhash_lsh(
    params: MinHashParams,
    d1: Dataset,
    d2: Optional[Dataset] = None,
    field: str = "@label",
    *,
    max_block_size: Optional[int] = None,
) -> CandidateSet:
    if d2 is not None and d1.schema != d2.schema:
        raise ERError("datasets are not structurally homogeneous")
    blocks = lsh_blocks(params, d1, d2, field)
    meta = {
        "num_hashes": params.num_hashes,
        "bands": params.bands,
        "rows": params.rows,
        "seed": params.seed,
        "field": field,
        "sensitivity": sensitivity(params.bands, params.rows),
    }
    return candidates_from_blocks(blocks, mode_of(d2), "minhash_lsh", max_block_size, meta)

