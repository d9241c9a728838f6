import pytest

from erkit.files import format_pairs, load_ground_truth, write_ground_truth
from erkit.model import ERError
from erkit.synth import SyntheticCorpusSpec, generate_corpus


def test_corpus_sizes_and_ground_truth():
    d1, d2, gt = generate_corpus(SyntheticCorpusSpec(200, 0.3, seed=42))
    assert len(d1) == len(d2) == 200
    assert len(gt) == 60
    gt.validate(d1, d2)


def test_corpus_is_seeded():
    a = generate_corpus(SyntheticCorpusSpec(50, 0.4, ("typo", "token-drop", "year-only-dob"), seed=3))
    b = generate_corpus(SyntheticCorpusSpec(50, 0.4, ("typo", "token-drop", "year-only-dob"), seed=3))
    c = generate_corpus(SyntheticCorpusSpec(50, 0.4, ("typo", "token-drop", "year-only-dob"), seed=4))
    assert a == b
    assert a != c


def test_uncorrupted_duplicates_are_identical():
    d1, d2, gt = generate_corpus(SyntheticCorpusSpec(30, 0.5, seed=1, corruption_rate=0.0))
    for p in gt.matches:
        assert d1.get(p.left).fields == d2.get(p.right).fields


def test_dedup_corpus():
    d, none, gt = generate_corpus(SyntheticCorpusSpec(40, 0.25, seed=2, dedup=True))
    assert none is None and len(d) == 50 and len(gt) == 10
    gt.validate(d)


def test_spec_validation():
    with pytest.raises(ERError):
        SyntheticCorpusSpec(10, 1.5)
    with pytest.raises(ERError):
        SyntheticCorpusSpec(10, 0.5, ("swap",))


def test_ground_truth_file_round_trip(tmp_path):
    _, _, gt = generate_corpus(SyntheticCorpusSpec(20, 0.5, seed=9))
    path = tmp_path / "gt.tsv"
    write_ground_truth(gt, path)
    assert load_ground_truth(path) == gt
    assert path.read_text() == format_pairs(gt.matches)
