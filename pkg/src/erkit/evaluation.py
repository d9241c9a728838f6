"""Blocking and matching metrics.

All ratios are computed as :class:`fractions.Fraction` and only turned into
floats when rendered; with ``|Omega|`` in the tens of millions a 0.1% change
in reduction ratio is thousands of pairs, below float rounding of naive
implementations that subtract near-equal quantities.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from .model import CandidateSet, ERError, GroundTruth
from .similarity import Label, MatchDecision

Number = Union[int, float, Fraction]


class UndefinedMetricError(ERError):
    pass


def reduction_ratio(c: CandidateSet | int, omega_size: int) -> Fraction:
    size = c if isinstance(c, int) else len(c)
    if omega_size <= 0:
        raise UndefinedMetricError("reduction ratio undefined for an empty exhaustive set")
    if not 0 <= size <= omega_size:
        raise ERError(f"candidate set size {size} outside [0, {omega_size}]")
    return 1 - Fraction(size, omega_size)


def true_candidates(c: CandidateSet, gt: GroundTruth) -> int:
    """|C intersect Omega_M|."""
    small, large = (c.pairs, gt.matches) if len(c.pairs) <= len(gt.matches) else (gt.matches, c.pairs)
    return sum(1 for p in small if p in large)


def pairs_completeness(c: CandidateSet, gt: GroundTruth) -> Fraction:
    if len(gt) == 0:
        raise UndefinedMetricError("pairs completeness undefined for an empty ground truth")
    return Fraction(true_candidates(c, gt), len(gt))


def pairs_quality(c: CandidateSet, gt: GroundTruth) -> Fraction:
    if len(c) == 0:
        raise UndefinedMetricError("pairs quality undefined for an empty candidate set")
    return Fraction(true_candidates(c, gt), len(c))


def f_measure(a: Number, b: Number) -> Fraction | float:
    """Harmonic mean 2ab/(a+b); 0 when a + b == 0.  Exact for Fraction/int inputs."""
    for x in (a, b):
        if not 0 <= x <= 1:
            raise ERError(f"f_measure arguments must lie in [0, 1], got {x}")
    if isinstance(a, float) or isinstance(b, float):
        return 0.0 if a + b == 0 else 2 * a * b / (a + b)
    a, b = Fraction(a), Fraction(b)
    return Fraction(0) if a + b == 0 else 2 * a * b / (a + b)


def relative_rr(c: CandidateSet | int, baseline: CandidateSet | int) -> Fraction:
    size = c if isinstance(c, int) else len(c)
    base = baseline if isinstance(baseline, int) else len(baseline)
    if base <= 0:
        raise UndefinedMetricError("relative reduction ratio undefined for an empty baseline")
    return 1 - Fraction(size, base)


def _render(x: Optional[Fraction]) -> Optional[float]:
    return None if x is None else float(x)


@dataclass(frozen=True)
class BlockingReport:
    candidates: int
    omega: int
    true_candidates: int
    ground_truth: int
    rr: Optional[Fraction]
    pc: Optional[Fraction]
    pq: Optional[Fraction]
    f_pc_rr: Optional[Fraction]
    f_pc_pq: Optional[Fraction]
    relative_rr: Optional[Fraction] = None

    def as_dict(self) -> dict:
        return {
            "counts": {
                "candidates": self.candidates,
                "omega": self.omega,
                "true_candidates": self.true_candidates,
                "ground_truth": self.ground_truth,
            },
            "rr": _render(self.rr),
            "pc": _render(self.pc),
            "pq": _render(self.pq),
            "f_pc_rr": _render(self.f_pc_rr),
            "f_pc_pq": _render(self.f_pc_pq),
            "relative_rr": _render(self.relative_rr),
            "exact": {
                k: (None if v is None else f"{v.numerator}/{v.denominator}")
                for k, v in (
                    ("rr", self.rr), ("pc", self.pc), ("pq", self.pq),
                    ("f_pc_rr", self.f_pc_rr), ("f_pc_pq", self.f_pc_pq), ("relative_rr", self.relative_rr),
                )
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def blocking_report(
    c: CandidateSet,
    gt: GroundTruth,
    omega: int,
    baseline: Optional[CandidateSet] = None,
) -> BlockingReport:
    """All blocking metrics; a metric whose denominator is zero is reported as None."""
    tc = true_candidates(c, gt)
    rr = reduction_ratio(c, omega) if omega > 0 else None
    pc = Fraction(tc, len(gt)) if len(gt) else None
    pq = Fraction(tc, len(c)) if len(c) else None
    f_pc_rr = f_measure(pc, rr) if pc is not None and rr is not None else None
    f_pc_pq = f_measure(pc, pq) if pc is not None and pq is not None else None
    rel = relative_rr(c, baseline) if baseline is not None and len(baseline) else None
    return BlockingReport(len(c), omega, tc, len(gt), rr, pc, pq, f_pc_rr, f_pc_pq, rel)  # type: ignore[arg-type]


@dataclass(frozen=True)
class MatchReport:
    tp: int
    fp: int
    fn: int
    precision: Optional[Fraction]
    recall: Optional[Fraction]
    f1: Optional[Fraction]
    indeterminate: int = 0
    excluded_indeterminate: bool = False

    def as_dict(self) -> dict:
        return {
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "indeterminate": self.indeterminate,
            "excluded_indeterminate": self.excluded_indeterminate,
            "precision": _render(self.precision),
            "recall": _render(self.recall),
            "f1": _render(self.f1),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"


def match_metrics(
    decisions: Sequence[MatchDecision],
    gt: GroundTruth,
    candidates: CandidateSet,
    exclude_indeterminate: bool = False,
) -> MatchReport:
    """Precision/recall/F1 of the final decisions.

    Ground-truth pairs missing from the candidate set count as false
    negatives, so recall can never exceed pairs completeness.  Indeterminate
    decisions are predicted negatives unless ``exclude_indeterminate`` drops
    those pairs from the evaluation altogether.
    """
    seen = set()
    for d in decisions:
        if d.pair not in candidates.pairs:
            raise ERError(f"decision for pair {tuple(d.pair)} outside the candidate set")
        seen.add(d.pair)
    if len(seen) != len(candidates):
        raise ERError(f"decisions cover {len(seen)} of {len(candidates)} candidate pairs")
    positives = {d.pair for d in decisions if d.label == Label.DUPLICATE}
    undecided = {d.pair for d in decisions if d.label == Label.INDETERMINATE}
    truth = set(gt.matches)
    if exclude_indeterminate:
        truth -= undecided
    tp = len(positives & truth)
    fp = len(positives - truth)
    fn = len(truth - positives)
    precision = Fraction(tp, tp + fp) if tp + fp else None
    recall = Fraction(tp, tp + fn) if tp + fn else None
    f1 = f_measure(precision, recall) if precision is not None and recall is not None else None
    return MatchReport(tp, fp, fn, precision, recall, f1, len(undecided), exclude_indeterminate)  # type: ignore[arg-type]


def curve_points(sweep: Iterable[tuple[Number, BlockingReport | MatchReport]]) -> list[tuple]:
    """(param, PC, RR) rows for blocking sweeps, (threshold, precision, recall) for match sweeps."""
    points = sorted(sweep, key=lambda pr: pr[0])
    if len(points) < 2:
        raise ERError("a curve needs at least two sweep points")
    kinds = {type(r) for _, r in points}
    if len(kinds) != 1:
        raise ERError("cannot mix blocking and match reports in one curve")
    rows = []
    for param, rep in points:
        if isinstance(rep, BlockingReport):
            rows.append((param, _render(rep.pc), _render(rep.rr)))
        else:
            rows.append((param, _render(rep.precision), _render(rep.recall)))
    return rows


def curve_header(rows_from: BlockingReport | MatchReport, param: str) -> list[str]:
    if isinstance(rows_from, BlockingReport):
        return [param, "pc", "rr"]
    return [param, "precision", "recall"]


def curve_csv(header: Sequence[str], rows: Sequence[tuple]) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()
