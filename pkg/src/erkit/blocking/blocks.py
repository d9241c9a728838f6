"""Blocks, purging and pair emission shared by all blocking methods."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Iterator, Optional

from ..model import BILATERAL, DEDUP, CandidateSet, ERError, EntityPair, canonicalize_pair

logger = logging.getLogger(__name__)

LEFT, RIGHT = 0, 1

Member = tuple[int, str]  # (dataset tag, entity id)


@dataclass(frozen=True)
class Block:
    bkv: str
    members: tuple[Member, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ERError(f"block {self.bkv!r} has no members")

    def __len__(self) -> int:
        return len(self.members)


def block_purge(blocks: Iterable[Block], max_block_size: Optional[int]) -> tuple[list[Block], int]:
    """Drop blocks with more than ``max_block_size`` members; returns (kept, purged count)."""
    blocks = list(blocks)
    if max_block_size is None:
        return blocks, 0
    if max_block_size < 2:
        raise ERError("max_block_size must be at least 2")
    kept = [b for b in blocks if len(b.members) <= max_block_size]
    purged = len(blocks) - len(kept)
    if purged:
        logger.info("purged %d of %d blocks above %d members", purged, len(blocks), max_block_size)
    return kept, purged


def block_pairs(block: Block, mode: str) -> Iterator[EntityPair]:
    """All admissible pairs inside one block (may repeat across blocks)."""
    if mode == BILATERAL:
        lefts = [eid for tag, eid in block.members if tag == LEFT]
        rights = [eid for tag, eid in block.members if tag == RIGHT]
        for a in lefts:
            for b in rights:
                yield EntityPair(a, b)
    elif mode == DEDUP:
        ids = sorted({eid for _, eid in block.members})
        for a, b in combinations(ids, 2):
            yield canonicalize_pair(a, b, DEDUP)
    else:
        raise ERError(f"unknown mode {mode!r}")


def stream_pairs(blocks: Iterable[Block], mode: str) -> Iterator[EntityPair]:
    """Pairs block by block without deduplication; a pair may appear several times."""
    for b in blocks:
        yield from block_pairs(b, mode)


def size_histogram(blocks: Iterable[Block]) -> dict[str, int]:
    hist = Counter(len(b.members) for b in blocks)
    return {str(size): hist[size] for size in sorted(hist)}


def candidates_from_blocks(
    blocks: Iterable[Block],
    mode: str,
    method: str,
    max_block_size: Optional[int] = None,
    meta: Optional[dict] = None,
) -> CandidateSet:
    blocks = list(blocks)
    kept, purged = block_purge(blocks, max_block_size)
    pairs = set(stream_pairs(kept, mode))
    info = {
        "method": method,
        "mode": mode,
        "num_blocks": len(blocks),
        "block_size_histogram": size_histogram(blocks),
        "purged_blocks": purged,
        "max_block_size": max_block_size,
        "num_candidates": len(pairs),
    }
    info.update(meta or {})
    return CandidateSet(frozenset(pairs), method, mode, info)
