"""Tab-separated file formats for pairs, ground truth and decisions."""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Optional

from .ingest import ParseError
from .model import BILATERAL, CandidateSet, EntityPair, GroundTruth, canonicalize_pair, pair_sort_key
from .similarity import Label, LabeledPair, MatchDecision

_TRUE = {"1", "true", "yes", "duplicate", "match"}
_FALSE = {"0", "false", "no", "nonduplicate", "non-duplicate", "nonmatch"}


def _rows(text: str, ncols: int, what: str) -> Iterable[tuple[int, list[str]]]:
    for lineno, line in enumerate(text.split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != ncols:
            raise ParseError(f"{what}: expected {ncols} tab-separated columns, got {len(cols)}", lineno, line)
        yield lineno, cols


def read_pairs(text: str, mode: str = BILATERAL, what: str = "pairs") -> list[EntityPair]:
    return [canonicalize_pair(a, b, mode) for _, (a, b) in _rows(text, 2, what)]


def format_pairs(pairs: Iterable[EntityPair]) -> str:
    return "".join(f"{p.left}\t{p.right}\n" for p in sorted(pairs, key=pair_sort_key))


def load_ground_truth(path: str | Path, mode: str = BILATERAL) -> GroundTruth:
    text = Path(path).read_text(encoding="utf-8")
    return GroundTruth(frozenset(read_pairs(text, mode, "ground truth")))


def write_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    Path(path).write_text(format_pairs(gt.matches), encoding="utf-8")


def load_candidates(path: str | Path, mode: str = BILATERAL, method: str = "file") -> CandidateSet:
    text = Path(path).read_text(encoding="utf-8")
    return CandidateSet(frozenset(read_pairs(text, mode, "candidates")), method, mode)


def write_candidates(c: CandidateSet, path: str | Path) -> None:
    Path(path).write_text(format_pairs(c.pairs), encoding="utf-8")


def load_labeled_pairs(path: str | Path, mode: str = BILATERAL) -> list[LabeledPair]:
    out = []
    for lineno, (a, b, lab) in _rows(Path(path).read_text(encoding="utf-8"), 3, "training pairs"):
        low = lab.strip().lower()
        if low in _TRUE:
            dup = True
        elif low in _FALSE:
            dup = False
        else:
            raise ParseError(f"training pairs: bad label {lab!r}", lineno)
        out.append(LabeledPair(canonicalize_pair(a, b, mode), dup))
    return out


def format_decisions(decisions: Iterable[MatchDecision], labels: Optional[set[Label]] = None) -> str:
    lines = []
    for d in sorted(decisions, key=lambda d: pair_sort_key(d.pair)):
        if labels is None or d.label in labels:
            lines.append(f"{d.pair.left}\t{d.pair.right}\t{d.score:.6f}\t{d.label.value}\n")
    return "".join(lines)


def read_decisions(text: str, mode: str = BILATERAL) -> list[MatchDecision]:
    out = []
    for lineno, (a, b, s, lab) in _rows(text, 4, "decisions"):
        try:
            out.append(MatchDecision(canonicalize_pair(a, b, mode), float(s), Label(lab)))
        except ValueError as exc:
            raise ParseError(f"decisions: {exc}", lineno) from None
    return out
