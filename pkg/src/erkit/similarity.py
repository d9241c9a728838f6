"""Pair vectorization and link specification functions.

A candidate pair is turned into a fixed-length feature vector by applying
``m`` feature functions to each of the ``n`` schema fields.  The layout is
field-major: slots ``[j*m, (j+1)*m)`` hold the ``m`` features of field ``j``.
A missing value, an inapplicable datatype or a failed evaluation puts
:data:`MISSING` (-1) in the slot.

A :class:`LinkSpec` scores a vector in [0, 1] and turns the score into a
:class:`MatchDecision`.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .model import (
    DATATYPES,
    CandidateSet,
    Dataset,
    EntityPair,
    ERError,
    Literal,
    pair_sort_key,
)
from .text import jaccard, normalized_levenshtein, soundex, token_set

logger = logging.getLogger(__name__)

MISSING = -1.0


class NoEvidenceWarning(UserWarning):
    """A vector had no usable feature; its score falls back to 0."""


# ----------------------------------------------------------------------------
# feature functions

def _exact(a: str, b: str) -> float:
    return 1.0 if a == b else 0.0


def _levenshtein(a: str, b: str) -> float:
    return normalized_levenshtein(a, b)


def _jaccard(a: str, b: str) -> float:
    return jaccard(token_set(a), token_set(b))


def _soundex_equal(a: str, b: str) -> Optional[float]:
    ca, cb = soundex(a), soundex(b)
    if ca is None or cb is None:
        return None
    return 1.0 if ca == cb else 0.0


def _scaled_numeric(a: str, b: str) -> Optional[float]:
    x, y = float(a), float(b)
    if not (math.isfinite(x) and math.isfinite(y)):
        return None
    return 1.0 - abs(x - y) / max(abs(x), abs(y), 1.0)


@dataclass(frozen=True)
class FeatureFunction:
    name: str
    datatypes: frozenset[str]
    fn: Callable[[str, str], Optional[float]] = field(repr=False)

    def evaluate(self, a: Optional[Literal], b: Optional[Literal]) -> float:
        if a is None or b is None:
            return MISSING
        if a.datatype not in self.datatypes or b.datatype not in self.datatypes:
            return MISSING
        try:
            value = self.fn(a.lexical, b.lexical)
        except (ValueError, ArithmeticError):
            return MISSING
        if value is None or math.isnan(value):
            return MISSING
        return min(1.0, max(0.0, value))


_LIBRARY = (
    FeatureFunction("exact", frozenset(DATATYPES), _exact),
    FeatureFunction("levenshtein", frozenset({"string", "date"}), _levenshtein),
    FeatureFunction("jaccard", frozenset({"string"}), _jaccard),
    FeatureFunction("soundex", frozenset({"string"}), _soundex_equal),
    FeatureFunction("numeric", frozenset({"string", "integer", "decimal"}), _scaled_numeric),
)
LIBRARY_NAMES = tuple(f.name for f in _LIBRARY)


def feature_library(names: Optional[Sequence[str]] = None) -> list[FeatureFunction]:
    """The default five feature functions, or the named subset in the given order."""
    if names is None:
        return list(_LIBRARY)
    by_name = {f.name: f for f in _LIBRARY}
    unknown = [n for n in names if n not in by_name]
    if unknown:
        raise ERError(f"unknown feature functions {unknown}; available: {list(LIBRARY_NAMES)}")
    return [by_name[n] for n in names]


# ----------------------------------------------------------------------------
# vectorization

def vectorize(
    pair: EntityPair,
    d1: Dataset,
    d2: Optional[Dataset],
    library: Sequence[FeatureFunction],
) -> np.ndarray:
    right_ds = d1 if d2 is None else d2
    if d2 is not None and d1.schema != d2.schema:
        raise ERError("datasets do not share a schema")
    left, right = d1.get(pair.left), right_ds.get(pair.right)
    out = np.empty(len(library) * len(d1.schema))
    k = 0
    for a, b in zip(left.fields, right.fields):
        for f in library:
            out[k] = f.evaluate(a, b)
            k += 1
    return out


def _vectorize_chunk(args) -> np.ndarray:
    pairs, d1, d2, names = args
    library = feature_library(names)
    dim = len(library) * len(d1.schema)
    if not pairs:
        return np.empty((0, dim))
    return np.vstack([vectorize(p, d1, d2, library) for p in pairs])


def vectorize_pairs(
    pairs: Sequence[EntityPair],
    d1: Dataset,
    d2: Optional[Dataset],
    library: Sequence[FeatureFunction],
    workers: int = 1,
) -> np.ndarray:
    """Feature matrix, one row per pair in the given order."""
    pairs = list(pairs)
    names = [f.name for f in library]
    if workers <= 1 or len(pairs) < 2 * workers:
        return _vectorize_chunk((pairs, d1, d2, names))
    size = math.ceil(len(pairs) / workers)
    chunks = [(pairs[i:i + size], d1, d2, names) for i in range(0, len(pairs), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_vectorize_chunk, chunks))
    return np.vstack(parts)


# ----------------------------------------------------------------------------
# link specifications

THRESHOLD = "boolean-threshold"
TWO_THRESHOLD = "two-threshold"
LEARNED = "learned-linear"
KINDS = (THRESHOLD, TWO_THRESHOLD, LEARNED)


class Label(str, enum.Enum):
    DUPLICATE = "Duplicate"
    NON_DUPLICATE = "NonDuplicate"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class LinkSpec:
    kind: str = THRESHOLD
    threshold: float = 0.5
    lower: Optional[float] = None
    upper: Optional[float] = None
    weights: Optional[tuple[float, ...]] = None
    bias: float = 0.0
    # Optional per-slot weights for the mean aggregate of rule-based kinds.
    feature_weights: Optional[tuple[float, ...]] = None
    library: tuple[str, ...] = LIBRARY_NAMES
    schema: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ERError(f"unknown link specification kind {self.kind!r}")
        if self.kind == TWO_THRESHOLD and (self.lower is None or self.upper is None):
            raise ERError("two-threshold specs need lower and upper")
        if (self.lower is None) != (self.upper is None):
            raise ERError("lower and upper must be given together")
        if self.lower is not None and self.lower > self.upper:  # type: ignore[operator]
            raise ERError(f"lower ({self.lower}) must be <= upper ({self.upper})")
        if self.kind == LEARNED and self.weights is None:
            raise ERError("learned-linear specs need weights")
        for name in ("weights", "feature_weights"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(float(x) for x in v))
        object.__setattr__(self, "library", tuple(self.library))
        object.__setattr__(self, "schema", tuple(self.schema))

    @property
    def dimension(self) -> Optional[int]:
        if self.weights is not None:
            return len(self.weights)
        if self.feature_weights is not None:
            return len(self.feature_weights)
        return None

    def to_json(self) -> str:
        payload = {
            "kind": self.kind,
            "threshold": self.threshold,
            "lower": self.lower,
            "upper": self.upper,
            "weights": list(self.weights) if self.weights is not None else None,
            "bias": self.bias,
            "feature_weights": list(self.feature_weights) if self.feature_weights is not None else None,
            "library": list(self.library),
            "schema": list(self.schema),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "LinkSpec":
        data = json.loads(text)
        return cls(
            kind=data["kind"],
            threshold=data.get("threshold", 0.5),
            lower=data.get("lower"),
            upper=data.get("upper"),
            weights=data.get("weights"),
            bias=data.get("bias", 0.0),
            feature_weights=data.get("feature_weights"),
            library=tuple(data.get("library", LIBRARY_NAMES)),
            schema=tuple(data.get("schema", ())),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LinkSpec":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def zero_missing(x: np.ndarray) -> np.ndarray:
    return np.where(x == MISSING, 0.0, x)


def score(spec: LinkSpec, v: np.ndarray) -> float:
    v = np.asarray(v, dtype=float)
    dim = spec.dimension
    if dim is not None and v.shape[-1] != dim:
        raise ERError(f"vector has {v.shape[-1]} dimensions, spec expects {dim}")
    if spec.kind == LEARNED:
        z = float(np.dot(zero_missing(v), spec.weights) + spec.bias)  # type: ignore[arg-type]
        return float(min(1.0, max(0.0, sigmoid(z).item())))
    present = v != MISSING
    if not present.any():
        warnings.warn("all features missing; score defined as 0", NoEvidenceWarning, stacklevel=2)
        return 0.0
    if spec.feature_weights is None:
        s = float(v[present].mean())
    else:
        w = np.asarray(spec.feature_weights)[present]
        if w.sum() <= 0:
            warnings.warn("no positive weight on present features; score defined as 0", NoEvidenceWarning, stacklevel=2)
            return 0.0
        s = float(np.dot(w, v[present]) / w.sum())
    return min(1.0, max(0.0, s))


def score_matrix(spec: LinkSpec, X: np.ndarray) -> np.ndarray:
    """Row-wise :func:`score`."""
    return np.array([score(spec, row) for row in X]) if len(X) else np.empty(0)


@dataclass(frozen=True, order=True)
class MatchDecision:
    pair: EntityPair
    score: float
    label: Label


def decide(spec: LinkSpec, scored: float, pair: EntityPair) -> MatchDecision:
    """Strictly greater than a threshold means Duplicate."""
    if spec.lower is not None:
        if scored > spec.upper:  # type: ignore[operator]
            label = Label.DUPLICATE
        elif scored <= spec.lower:
            label = Label.NON_DUPLICATE
        else:
            label = Label.INDETERMINATE
    else:
        label = Label.DUPLICATE if scored > spec.threshold else Label.NON_DUPLICATE
    return MatchDecision(pair, scored, label)


@dataclass(frozen=True)
class Partition:
    duplicates: frozenset[EntityPair]
    non_duplicates: frozenset[EntityPair]
    review: frozenset[EntityPair]

    def __len__(self) -> int:
        return len(self.duplicates) + len(self.non_duplicates) + len(self.review)


def partition(decisions: Iterable[MatchDecision]) -> Partition:
    groups: dict[Label, set[EntityPair]] = {lab: set() for lab in Label}
    for d in decisions:
        groups[d.label].add(d.pair)
    return Partition(
        frozenset(groups[Label.DUPLICATE]),
        frozenset(groups[Label.NON_DUPLICATE]),
        frozenset(groups[Label.INDETERMINATE]),
    )


def score_pairs(
    pairs: Sequence[EntityPair],
    spec: LinkSpec,
    d1: Dataset,
    d2: Optional[Dataset],
    library: Sequence[FeatureFunction],
    workers: int = 1,
) -> list[tuple[EntityPair, float]]:
    X = vectorize_pairs(pairs, d1, d2, library, workers)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NoEvidenceWarning)
        scores = score_matrix(spec, X)
    if caught:
        logger.warning("%d pairs had no usable features and scored 0", len(caught))
    return list(zip(pairs, scores.tolist()))


def decide_all(spec: LinkSpec, scored: Iterable[tuple[EntityPair, float]]) -> list[MatchDecision]:
    decisions = [decide(spec, s, p) for p, s in scored]
    decisions.sort(key=lambda d: pair_sort_key(d.pair))
    return decisions


def apply_similarity(
    candidates: CandidateSet,
    spec: LinkSpec,
    d1: Dataset,
    d2: Optional[Dataset],
    library: Sequence[FeatureFunction],
    workers: int = 1,
) -> tuple[list[MatchDecision], Partition]:
    pairs = candidates.sorted()
    decisions = decide_all(spec, score_pairs(pairs, spec, d1, d2, library, workers))
    return decisions, partition(decisions)


# ----------------------------------------------------------------------------
# learned linear model

@dataclass(frozen=True)
class LabeledPair:
    pair: EntityPair
    is_duplicate: bool


def log_loss(params: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Mean logistic loss; ``params`` is the weight vector with the bias appended."""
    z = X @ params[:-1] + params[-1]
    # log(1 + exp(z)) - y*z, computed stably
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def log_loss_grad(params: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    z = X @ params[:-1] + params[-1]
    r = sigmoid(z) - y
    return np.append(X.T @ r / len(y), r.mean())


def fit_logistic(X: np.ndarray, y: np.ndarray, epochs: int, learning_rate: float) -> tuple[np.ndarray, float]:
    """Full-batch gradient descent from zero initial weights."""
    if epochs < 1:
        raise ERError("epochs must be >= 1")
    params = np.zeros(X.shape[1] + 1)
    for _ in range(epochs):
        params -= learning_rate * log_loss_grad(params, X, y)
    return params, log_loss(params, X, y)


def training_matrix(
    training: Sequence[LabeledPair],
    d1: Dataset,
    d2: Optional[Dataset],
    library: Sequence[FeatureFunction],
) -> tuple[np.ndarray, np.ndarray]:
    labels: dict[EntityPair, bool] = {}
    for lp in training:
        if labels.setdefault(lp.pair, lp.is_duplicate) != lp.is_duplicate:
            raise ERError(f"contradictory labels for pair {tuple(lp.pair)}")
    pairs = sorted(labels, key=pair_sort_key)
    y = np.array([1.0 if labels[p] else 0.0 for p in pairs])
    X = zero_missing(vectorize_pairs(pairs, d1, d2, library))
    return X, y


def train_linear(
    training: Sequence[LabeledPair],
    d1: Dataset,
    d2: Optional[Dataset],
    library: Sequence[FeatureFunction],
    epochs: int = 500,
    learning_rate: float = 0.5,
    seed: int = 0,
    threshold: float = 0.5,
) -> tuple[LinkSpec, float]:
    """Fit a logistic link specification; returns (spec, final training loss).

    Training is deterministic: weights start at zero and every epoch uses the
    full batch, so ``seed`` only travels with the model for provenance.
    """
    X, y = training_matrix(training, d1, d2, library)
    if y.size == 0 or y.min() == y.max():
        raise ERError("training needs at least one positive and one negative example")
    params, loss = fit_logistic(X, y, epochs, learning_rate)
    logger.info("trained logistic link spec: %d examples, final loss %.6f (seed %d)", len(y), loss, seed)
    spec = LinkSpec(
        kind=LEARNED,
        threshold=threshold,
        weights=tuple(params[:-1].tolist()),
        bias=float(params[-1]),
        library=tuple(f.name for f in library),
        schema=d1.schema,
    )
    return spec, loss


def with_threshold(spec: LinkSpec, threshold: float) -> LinkSpec:
    """Same scoring, single cut at ``threshold``; a two-threshold spec becomes boolean."""
    kind = THRESHOLD if spec.kind == TWO_THRESHOLD else spec.kind
    return replace(spec, kind=kind, threshold=float(threshold), lower=None, upper=None)
