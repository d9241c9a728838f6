"""Declarative end-to-end runs: ingest -> blocking -> similarity -> evaluation.

Configuration is a YAML file (format version 1).  Relative paths are resolved
against the directory holding the config file.  Example::

    version: 1
    mode: bilateral            # or dedup (only inputs.left is read)
    seed: 7
    output_dir: out
    inputs:
      label_property: name
      left:  {path: left.nt, format: ntriples}
      right: {path: right.nt, format: ntriples, property_map: {DOB: date_of_birth}}
    blocking:
      method: traditional      # sorted_neighborhood | canopies | minhash_lsh
      key: "tokens(@label) | year(date_of_birth)"
      max_block_size: 1000
    similarity:
      kind: boolean-threshold  # two-threshold | learned-linear
      threshold: 0.5
    evaluation:
      ground_truth: gold.tsv
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import platform
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import yaml

from . import __version__
from .blocking import CanopyParams, MinHashParams, parse_key
from .blocking.blocks import Block, block_purge, candidates_from_blocks, size_histogram, stream_pairs
from .blocking.lsh import lsh_blocks, sensitivity
from .blocking.methods import canopy_blocks, sorted_neighborhood_blocks, traditional_blocks
from .evaluation import BlockingReport, MatchReport, blocking_report, curve_csv, curve_points, match_metrics
from .files import format_decisions, format_pairs, load_ground_truth, load_labeled_pairs
from .ingest import FORMATS, PropertyMap, guess_format, load_dataset
from .model import (
    BILATERAL,
    MODES,
    CandidateSet,
    Dataset,
    ERError,
    GroundTruth,
    mode_of,
    omega_size,
)
from .similarity import (
    KINDS,
    LEARNED,
    Label,
    LinkSpec,
    MatchDecision,
    decide_all,
    feature_library,
    partition,
    score_pairs,
    train_linear,
    with_threshold,
)

logger = logging.getLogger(__name__)

CONFIG_VERSION = 1
METHODS = ("traditional", "sorted_neighborhood", "canopies", "minhash_lsh")
BLOCKING_PARAMS = ("window", "tight", "loose", "bands", "rows", "max_block_size")
THRESHOLD_PARAMS = ("threshold",)


class ConfigError(ERError):
    pass


class PipelineError(ERError):
    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


# ----------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class InputSpec:
    path: Path
    format: str
    name: str
    property_map: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class BlockingConfig:
    method: str = "traditional"
    key: Optional[str] = None
    lowercase: bool = False
    window: int = 4
    tight: float = 0.3
    loose: float = 0.6
    distance: str = "jaccard"
    field: str = "@label"
    random_seeds: bool = False
    num_hashes: int = 256
    bands: int = 32
    rows: int = 8
    max_block_size: Optional[int] = None


@dataclass(frozen=True)
class SimilarityConfig:
    kind: str = "boolean-threshold"
    functions: Optional[tuple[str, ...]] = None
    threshold: float = 0.5
    lower: Optional[float] = None
    upper: Optional[float] = None
    feature_weights: Optional[tuple[float, ...]] = None
    model: Optional[Path] = None
    training: Optional[Path] = None
    epochs: int = 500
    learning_rate: float = 0.5


@dataclass(frozen=True)
class EvaluationConfig:
    ground_truth: Optional[Path] = None
    exclude_indeterminate: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    left: InputSpec
    right: Optional[InputSpec]
    mode: str = BILATERAL
    label_property: Optional[str] = None
    type_filter: Optional[tuple[str, ...]] = None
    blocking: BlockingConfig = BlockingConfig()
    similarity: SimilarityConfig = SimilarityConfig()
    evaluation: EvaluationConfig = EvaluationConfig()
    seed: int = 0
    workers: int = 1
    streaming: bool = False
    output_dir: Path = Path("erkit-out")
    raw: dict = field(default_factory=dict, compare=False)

    def validate(self) -> None:
        """Fail fast before any stage runs."""
        missing = [p for p in self.referenced_paths() if not p.exists()]
        if missing:
            raise ConfigError(f"referenced paths do not exist: {[str(p) for p in missing]}")
        b = self.blocking
        if b.method in ("traditional", "sorted_neighborhood") and not b.key:
            raise ConfigError(f"blocking method {b.method!r} needs a key")
        try:
            if b.key:
                parse_key(b.key, single_value=b.method == "sorted_neighborhood", lowercase=b.lowercase)
            if b.method == "sorted_neighborhood" and b.window < 2:
                raise ConfigError("window must be >= 2")
            if b.method == "canopies":
                CanopyParams(b.tight, b.loose, b.distance)
            if b.method == "minhash_lsh":
                MinHashParams(b.num_hashes, b.bands, b.rows, self.seed)
            if b.max_block_size is not None and b.max_block_size < 2:
                raise ConfigError("max_block_size must be >= 2")
            s = self.similarity
            feature_library(s.functions)
            if s.kind == LEARNED and s.model is None and s.training is None:
                raise ConfigError("learned-linear similarity needs a model or training file")
            if s.kind != LEARNED:
                LinkSpec(kind=s.kind, threshold=s.threshold, lower=s.lower, upper=s.upper,
                         feature_weights=s.feature_weights)
        except ConfigError:
            raise
        except ERError as exc:
            raise ConfigError(str(exc)) from None
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def referenced_paths(self) -> list[Path]:
        paths = [self.left.path]
        if self.right is not None:
            paths.append(self.right.path)
        for p in (self.similarity.model, self.similarity.training, self.evaluation.ground_truth):
            if p is not None:
                paths.append(p)
        return paths

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _section(data: dict, name: str) -> dict:
    value = data.get(name) or {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} must be a mapping")
    return value


def _known(section: dict, cls, where: str) -> dict:
    names = set(cls.__dataclass_fields__)
    unknown = set(section) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    return dict(section)


def _path(base: Path, value: Any) -> Optional[Path]:
    if value is None:
        return None
    p = Path(str(value))
    return p if p.is_absolute() else (base / p)


def _input(base: Path, data: Any, default_name: str) -> InputSpec:
    if isinstance(data, str):
        data = {"path": data}
    if not isinstance(data, dict) or "path" not in data:
        raise ConfigError(f"input {default_name!r} needs a path")
    unknown = set(data) - {"path", "format", "name", "property_map"}
    if unknown:
        raise ConfigError(f"unknown keys in input {default_name!r}: {sorted(unknown)}")
    path = _path(base, data["path"])
    fmt = data.get("format") or guess_format(path)  # type: ignore[arg-type]
    if fmt not in FORMATS:
        raise ConfigError(f"input {default_name!r}: unknown format {fmt!r}")
    return InputSpec(path, fmt, str(data.get("name", default_name)), dict(data.get("property_map") or {}))  # type: ignore[arg-type]


def config_from_dict(data: dict, base_dir: str | Path = ".") -> PipelineConfig:
    base = Path(base_dir)
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    version = data.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r}; this build reads version {CONFIG_VERSION}")
    allowed = {"version", "mode", "seed", "workers", "streaming", "output_dir", "inputs", "blocking",
               "similarity", "evaluation"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    mode = data.get("mode", BILATERAL)
    if mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}")
    inputs = _section(data, "inputs")
    if "left" not in inputs:
        raise ConfigError("inputs.left is required")
    left = _input(base, inputs["left"], "left")
    right = None
    if mode == BILATERAL:
        if "right" not in inputs:
            raise ConfigError("bilateral mode needs inputs.right")
        right = _input(base, inputs["right"], "right")
    shared_map = dict(inputs.get("property_map") or {})
    if shared_map:
        left = replace(left, property_map={**shared_map, **left.property_map})
        if right is not None:
            right = replace(right, property_map={**shared_map, **right.property_map})

    blocking = BlockingConfig(**_known(_section(data, "blocking"), BlockingConfig, "blocking"))
    if blocking.method not in METHODS:
        raise ConfigError(f"blocking.method must be one of {METHODS}")
    sim = _known(_section(data, "similarity"), SimilarityConfig, "similarity")
    for key in ("model", "training"):
        sim[key] = _path(base, sim.get(key))
    for key in ("functions", "feature_weights"):
        if sim.get(key) is not None:
            sim[key] = tuple(sim[key])
    similarity = SimilarityConfig(**sim)
    if similarity.kind not in KINDS:
        raise ConfigError(f"similarity.kind must be one of {KINDS}")
    ev = _known(_section(data, "evaluation"), EvaluationConfig, "evaluation")
    ev["ground_truth"] = _path(base, ev.get("ground_truth"))
    evaluation = EvaluationConfig(**ev)
    type_filter = inputs.get("type_filter")
    return PipelineConfig(
        left=left,
        right=right,
        mode=mode,
        label_property=inputs.get("label_property"),
        type_filter=tuple(type_filter) if type_filter else None,
        blocking=blocking,
        similarity=similarity,
        evaluation=evaluation,
        seed=int(data.get("seed", 0)),
        workers=int(data.get("workers", 1)),
        streaming=bool(data.get("streaming", False)),
        output_dir=_path(base, data.get("output_dir", "erkit-out")),  # type: ignore[arg-type]
        raw=data,
    )


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return config_from_dict(data, path.parent)


def with_overrides(cfg: PipelineConfig, *, seed=None, workers=None, output_dir=None) -> PipelineConfig:
    changes: dict[str, Any] = {}
    if seed is not None:
        changes["seed"] = int(seed)
    if workers is not None:
        changes["workers"] = int(workers)
    if output_dir is not None:
        changes["output_dir"] = Path(output_dir)
    return replace(cfg, **changes) if changes else cfg


# ----------------------------------------------------------------------------
# stages

def load_inputs(cfg: PipelineConfig) -> tuple[Dataset, Optional[Dataset]]:
    def one(spec: InputSpec) -> Dataset:
        return load_dataset(
            spec.path, spec.format, PropertyMap(spec.property_map),
            name=spec.name, label_property=cfg.label_property, type_filter=cfg.type_filter,
        )

    d1 = one(cfg.left)
    d2 = one(cfg.right) if cfg.right is not None else None
    if d2 is not None and d1.schema != d2.schema:
        # An empty side has no properties at all; give it the other side's schema.
        if not d2.entities and not d2.schema:
            d2 = Dataset(d2.name, d1.schema, ())
        elif not d1.entities and not d1.schema:
            d1 = Dataset(d1.name, d2.schema, ())
        else:
            raise ERError(
                f"inputs are not structurally homogeneous: {list(d1.schema)} vs {list(d2.schema)}; "
                "align them with a property_map"
            )
    return d1, d2


def make_blocks(cfg: PipelineConfig, d1: Dataset, d2: Optional[Dataset]) -> tuple[list[Block], str, dict]:
    b = cfg.blocking
    if b.method == "traditional":
        key = parse_key(b.key, lowercase=b.lowercase)  # type: ignore[arg-type]
        return traditional_blocks(key, d1, d2), b.method, {"key": str(key)}
    if b.method == "sorted_neighborhood":
        key = parse_key(b.key, single_value=True, lowercase=b.lowercase)  # type: ignore[arg-type]
        return sorted_neighborhood_blocks(key, b.window, d1, d2), b.method, {"key": str(key), "window": b.window}
    if b.method == "canopies":
        params = CanopyParams(b.tight, b.loose, b.distance, b.random_seeds, cfg.seed)
        meta = {"tight": b.tight, "loose": b.loose, "distance": b.distance, "field": b.field,
                "seed_order": "random" if b.random_seeds else "ascending-id"}
        return canopy_blocks(params, d1, d2, b.field), b.method, meta
    params = MinHashParams(b.num_hashes, b.bands, b.rows, cfg.seed)
    meta = {"num_hashes": b.num_hashes, "bands": b.bands, "rows": b.rows, "seed": cfg.seed, "field": b.field,
            "sensitivity": sensitivity(b.bands, b.rows)}
    return lsh_blocks(params, d1, d2, b.field), b.method, meta


def run_blocking(cfg: PipelineConfig, d1: Dataset, d2: Optional[Dataset]) -> CandidateSet:
    blocks, method, meta = make_blocks(cfg, d1, d2)
    return candidates_from_blocks(blocks, mode_of(d2), method, cfg.blocking.max_block_size, meta)


def build_link_spec(cfg: PipelineConfig, d1: Dataset, d2: Optional[Dataset]) -> tuple[LinkSpec, Optional[float]]:
    s = cfg.similarity
    library = feature_library(s.functions)
    if s.kind != LEARNED:
        spec = LinkSpec(kind=s.kind, threshold=s.threshold, lower=s.lower, upper=s.upper,
                        feature_weights=s.feature_weights, library=tuple(f.name for f in library),
                        schema=d1.schema)
        return spec, None
    if s.model is not None:
        spec = LinkSpec.load(s.model)
        if spec.schema and spec.schema != d1.schema:
            raise ERError(f"model schema {list(spec.schema)} does not match data schema {list(d1.schema)}")
        return replace(spec, threshold=s.threshold, lower=s.lower, upper=s.upper), None
    training = load_labeled_pairs(s.training, cfg.mode)  # type: ignore[arg-type]
    spec, loss = train_linear(training, d1, d2, library, s.epochs, s.learning_rate, cfg.seed, s.threshold)
    return replace(spec, lower=s.lower, upper=s.upper), loss


def library_for(spec: LinkSpec):
    return feature_library(spec.library)


def match_candidates(
    cfg: PipelineConfig, candidates: CandidateSet, spec: LinkSpec, d1: Dataset, d2: Optional[Dataset]
) -> list[MatchDecision]:
    scored = score_pairs(candidates.sorted(), spec, d1, d2, library_for(spec), cfg.workers)
    return decide_all(spec, scored)


def run_streaming(
    cfg: PipelineConfig, spec: LinkSpec, d1: Dataset, d2: Optional[Dataset]
) -> tuple[CandidateSet, list[MatchDecision], int]:
    """Classify pairs as blocks emit them, without materializing the candidate set first.

    A pair shared by several blocks is classified once per block; decisions
    are deduplicated afterwards.  Returns (candidates, decisions, classifications).
    """
    blocks, method, meta = make_blocks(cfg, d1, d2)
    kept, purged = block_purge(blocks, cfg.blocking.max_block_size)
    library = library_for(spec)
    decided: dict = {}
    classified = 0
    for pair in stream_pairs(kept, mode_of(d2)):
        ((p, s),) = score_pairs([pair], spec, d1, d2, library)
        classified += 1
        decided[pair] = s
    decisions = decide_all(spec, decided.items())
    info = {
        "method": method,
        "mode": mode_of(d2),
        "num_blocks": len(blocks),
        "block_size_histogram": size_histogram(blocks),
        "purged_blocks": purged,
        "max_block_size": cfg.blocking.max_block_size,
        "num_candidates": len(decided),
        **meta,
    }
    return CandidateSet(frozenset(decided), method, mode_of(d2), info), decisions, classified


def load_truth(cfg: PipelineConfig, d1: Dataset, d2: Optional[Dataset]) -> Optional[GroundTruth]:
    if cfg.evaluation.ground_truth is None:
        return None
    gt = load_ground_truth(cfg.evaluation.ground_truth, cfg.mode)
    gt.validate(d1, d2)
    return gt


def evaluate_run(
    cfg: PipelineConfig,
    candidates: CandidateSet,
    decisions: Sequence[MatchDecision],
    gt: GroundTruth,
    d1: Dataset,
    d2: Optional[Dataset],
) -> tuple[BlockingReport, MatchReport]:
    brep = blocking_report(candidates, gt, omega_size(d1, d2))
    mrep = match_metrics(decisions, gt, candidates, cfg.evaluation.exclude_indeterminate)
    return brep, mrep


# ----------------------------------------------------------------------------
# outputs

def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=str) + "\n"


class _Outputs:
    """Writes files as ``name.partial`` and renames them only once the run succeeds."""

    def __init__(self, directory: Path):
        self.dir = directory
        self.dir.mkdir(parents=True, exist_ok=True)
        self.pending: list[Path] = []

    def write(self, name: str, text: str) -> None:
        final = self.dir / name
        if final.exists():
            final.unlink()
        tmp = self.dir / (name + ".partial")
        tmp.write_text(text, encoding="utf-8")
        self.pending.append(tmp)

    def commit(self) -> None:
        for tmp in self.pending:
            os.replace(tmp, tmp.with_name(tmp.name[: -len(".partial")]))
        self.pending.clear()


def manifest(cfg: PipelineConfig, extra: Optional[dict] = None) -> dict:
    info = {
        "erkit_version": __version__,
        "config_version": CONFIG_VERSION,
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "workers": cfg.workers,
        "streaming": cfg.streaming,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    info.update(extra or {})
    return info


def run_pipeline(cfg: PipelineConfig) -> Path:
    """Run every stage and write the run directory; raises PipelineError tagged with the failing stage."""
    try:
        cfg.validate()
    except ERError as exc:
        raise PipelineError("config", str(exc)) from None
    out = _Outputs(cfg.output_dir)
    stage = "ingest"
    try:
        d1, d2 = load_inputs(cfg)
        gt = load_truth(cfg, d1, d2)

        stage = "similarity"
        spec, loss = build_link_spec(cfg, d1, d2)
        if cfg.similarity.kind == LEARNED and cfg.similarity.model is None:
            out.write("model.json", spec.to_json())

        stage = "blocking"
        if cfg.streaming:
            candidates, decisions, classified = run_streaming(cfg, spec, d1, d2)
            candidates.meta["classifications"] = classified
        else:
            candidates = run_blocking(cfg, d1, d2)
            stage = "similarity"
            decisions = match_candidates(cfg, candidates, spec, d1, d2)
        out.write("candidates.tsv", format_pairs(candidates.pairs))
        out.write("blocking_meta.json", _dump(candidates.meta))

        stage = "similarity"
        out.write("decisions.tsv", format_decisions(decisions))
        out.write("review.tsv", format_decisions(decisions, {Label.INDETERMINATE}))
        part = partition(decisions)
        summary = {
            "duplicates": len(part.duplicates),
            "non_duplicates": len(part.non_duplicates),
            "review": len(part.review),
            "training_loss": loss,
        }
        out.write("similarity_summary.json", _dump(summary))

        if gt is not None:
            stage = "evaluation"
            brep, mrep = evaluate_run(cfg, candidates, decisions, gt, d1, d2)
            out.write("blocking_report.json", brep.to_json())
            out.write("match_report.json", mrep.to_json())

        stage = "manifest"
        out.write("manifest.json", _dump(manifest(cfg, {"stages": ["ingest", "blocking", "similarity"] + (
            ["evaluation"] if gt is not None else [])})))
        out.commit()
    except PipelineError:
        raise
    except (ERError, OSError, ValueError) as exc:
        raise PipelineError(stage, str(exc)) from exc
    return cfg.output_dir


# ----------------------------------------------------------------------------
# sweeps

def _with_blocking_param(cfg: PipelineConfig, param: str, value: Any) -> PipelineConfig:
    b = cfg.blocking
    if param == "bands":
        nb = replace(b, bands=int(value), num_hashes=int(value) * b.rows)
    elif param == "rows":
        nb = replace(b, rows=int(value), num_hashes=b.bands * int(value))
    elif param in ("window", "max_block_size"):
        nb = replace(b, **{param: int(value)})
    else:
        nb = replace(b, **{param: float(value)})
    return replace(cfg, blocking=nb)


def _threshold_decisions(cfg, d1, d2, values):
    spec, _ = build_link_spec(cfg, d1, d2)
    candidates = run_blocking(cfg, d1, d2)
    scored = score_pairs(candidates.sorted(), spec, d1, d2, library_for(spec), cfg.workers)
    return candidates, {t: decide_all(with_threshold(spec, t), scored) for t in values}


def threshold_sweep(cfg: PipelineConfig, values: Sequence[float]) -> dict[float, list[MatchDecision]]:
    """Decisions per threshold from one blocking run and one scoring pass."""
    d1, d2 = load_inputs(cfg)
    return _threshold_decisions(cfg, d1, d2, values)[1]


def sweep(cfg: PipelineConfig, param: str, values: Sequence[Any]) -> Path:
    """Write ``curve_<param>.csv`` in the output directory and return its path."""
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    if param not in BLOCKING_PARAMS + THRESHOLD_PARAMS:
        raise ConfigError(f"unrecognized sweep parameter {param!r}; expected one of {BLOCKING_PARAMS + THRESHOLD_PARAMS}")
    if cfg.evaluation.ground_truth is None:
        raise ConfigError("sweeps need evaluation.ground_truth")
    try:
        cfg.validate()
    except ERError as exc:
        raise PipelineError("config", str(exc)) from None
    cfg.output_dir.mkdir(parents=True, exist_ok=True)

    if param in THRESHOLD_PARAMS:
        d1, d2 = load_inputs(cfg)
        gt = load_truth(cfg, d1, d2)
        candidates, by_t = _threshold_decisions(cfg, d1, d2, [float(v) for v in values])
        points = [(t, match_metrics(dec, gt, candidates, cfg.evaluation.exclude_indeterminate))  # type: ignore[arg-type]
                  for t, dec in by_t.items()]
        header = [param, "precision", "recall"]
    else:
        points = []
        for v in values:
            sub = _with_blocking_param(cfg, param, v)
            try:
                sub.validate()
            except ERError as exc:
                raise PipelineError("config", f"{param}={v}: {exc}") from None
            d1, d2 = load_inputs(sub)
            gt = load_truth(sub, d1, d2)
            candidates = run_blocking(sub, d1, d2)
            points.append((v, blocking_report(candidates, gt, omega_size(d1, d2))))  # type: ignore[arg-type]
        header = [param, "pc", "rr"]
    if len(points) < 2:
        raise ConfigError("a curve needs at least two sweep values")
    rows = curve_points(points)
    path = cfg.output_dir / f"curve_{param}.csv"
    path.write_text(curve_csv(header, rows), encoding="utf-8")
    return path
