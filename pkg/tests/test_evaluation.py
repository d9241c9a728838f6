import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from erkit.evaluation import (
    BlockingReport,
    UndefinedMetricError,
    blocking_report,
    curve_csv,
    curve_points,
    f_measure,
    match_metrics,
    pairs_completeness,
    pairs_quality,
    reduction_ratio,
    relative_rr,
)
from erkit.model import CandidateSet, EntityPair, ERError, GroundTruth
from erkit.similarity import Label, MatchDecision


def pairs(n, prefix="p"):
    return frozenset(EntityPair(f"{prefix}{i}", f"q{i}") for i in range(n))


def pq_pitfall():
    gt = GroundTruth(pairs(1000))
    c = CandidateSet(frozenset(list(pairs(8)) + [EntityPair(f"x{i}", "y") for i in range(2)]))
    return c, gt, 10_000_000


def test_pq_pitfall_exact():
    c, gt, omega = pq_pitfall()
    rep = blocking_report(c, gt, omega)
    assert rep.pq == Fraction(4, 5)
    assert rep.pc == Fraction(8, 1000)
    assert rep.rr == 1 - Fraction(10, omega)
    assert rep.rr >= Fraction(999999, 1000000)
    assert rep.f_pc_rr < Fraction(2, 100)
    assert f"{float(rep.pq):.6f}" == "0.800000"


def test_relative_rr():
    assert relative_rr(50, 200) == Fraction(3, 4)
    with pytest.raises(UndefinedMetricError):
        relative_rr(0, 0)


def test_undefined_metrics():
    with pytest.raises(UndefinedMetricError):
        reduction_ratio(0, 0)
    with pytest.raises(UndefinedMetricError):
        pairs_completeness(CandidateSet(frozenset()), GroundTruth(frozenset()))
    with pytest.raises(UndefinedMetricError):
        pairs_quality(CandidateSet(frozenset()), GroundTruth(pairs(1)))
    rep = blocking_report(CandidateSet(frozenset()), GroundTruth(pairs(2)), 10)
    assert rep.pq is None and rep.f_pc_pq is None and rep.pc == 0 and rep.rr == 1
    assert '"pq": null' in rep.to_json()


def test_f_measure():
    assert f_measure(Fraction(1, 2), Fraction(1, 2)) == Fraction(1, 2)
    assert f_measure(0, 0) == 0
    assert f_measure(0.5, 1.0) == pytest.approx(2 / 3)
    with pytest.raises(ERError):
        f_measure(1.5, 0.5)


@given(st.fractions(0, 1), st.fractions(0, 1))
def test_f_measure_between_min_and_max(a, b):
    f = f_measure(a, b)
    assert min(a, b) <= f <= max(a, b) or (a + b == 0 and f == 0)
    assert f == f_measure(b, a)


def _naive(c_pairs, gt_pairs, omega):
    tc = len([p for p in c_pairs if p in gt_pairs])
    pc = Fraction(tc, len(gt_pairs))
    rr = Fraction(omega - len(c_pairs), omega)
    pq = Fraction(tc, len(c_pairs))
    return rr, pc, pq, 2 * pc * rr / (pc + rr) if pc + rr else Fraction(0)


@given(st.integers(0, 10_000))
def test_report_matches_naive_oracle(seed):
    rng = random.Random(seed)
    universe = [EntityPair(f"a{i}", f"b{j}") for i in range(12) for j in range(12)]
    c = set(rng.sample(universe, rng.randint(1, 60)))
    gt = set(rng.sample(universe, rng.randint(1, 30)))
    rep = blocking_report(CandidateSet(frozenset(c)), GroundTruth(frozenset(gt)), len(universe))
    assert (rep.rr, rep.pc, rep.pq, rep.f_pc_rr) == _naive(c, gt, len(universe))


def _dec(pair, label, s=0.5):
    return MatchDecision(pair, s, label)


def test_match_metrics_counts_missed_truth_as_fn():
    gt = GroundTruth(frozenset({EntityPair("a", "1"), EntityPair("b", "2"), EntityPair("c", "3")}))
    c = CandidateSet(frozenset({EntityPair("a", "1"), EntityPair("b", "2"), EntityPair("d", "4")}))
    decisions = [
        _dec(EntityPair("a", "1"), Label.DUPLICATE),
        _dec(EntityPair("b", "2"), Label.INDETERMINATE),
        _dec(EntityPair("d", "4"), Label.DUPLICATE),
    ]
    rep = match_metrics(decisions, gt, c)
    assert (rep.tp, rep.fp, rep.fn) == (1, 1, 2)
    assert rep.recall == Fraction(1, 3)
    ex = match_metrics(decisions, gt, c, exclude_indeterminate=True)
    assert (ex.tp, ex.fp, ex.fn) == (1, 1, 1)
    assert ex.indeterminate == 1


def test_match_metrics_rejects_inconsistent_decisions():
    gt = GroundTruth(frozenset({EntityPair("a", "1")}))
    c = CandidateSet(frozenset({EntityPair("a", "1")}))
    with pytest.raises(ERError):
        match_metrics([_dec(EntityPair("z", "9"), Label.DUPLICATE)], gt, c)
    with pytest.raises(ERError):
        match_metrics([], gt, c)


def test_recall_never_exceeds_pc():
    rng = random.Random(1)
    universe = [EntityPair(f"a{i}", f"b{i % 7}") for i in range(40)]
    for _ in range(50):
        c = frozenset(rng.sample(universe, 15))
        gt = GroundTruth(frozenset(rng.sample(universe, 10)))
        decisions = [_dec(p, rng.choice(list(Label))) for p in c]
        rep = match_metrics(decisions, gt, CandidateSet(c))
        pc = blocking_report(CandidateSet(c), gt, 40).pc
        assert rep.recall <= pc


def test_curves():
    gt = GroundTruth(pairs(4))
    reps = [(w, blocking_report(CandidateSet(pairs(k)), gt, 100)) for w, k in [(4, 3), (2, 1)]]
    rows = curve_points(reps)
    assert [r[0] for r in rows] == [2, 4]
    assert rows[0][1] == 0.25 and rows[1][2] == 0.97
    text = curve_csv(["window", "pc", "rr"], rows)
    assert text.splitlines()[0] == "window,pc,rr"
    with pytest.raises(ERError):
        curve_points(reps[:1])
    assert isinstance(reps[0][1], BlockingReport)
