"""Command-line entry point: ``erkit <subcommand>``."""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import click

from . import __version__
from .evaluation import blocking_report, match_metrics
from .files import (
    format_decisions,
    format_pairs,
    load_candidates,
    read_decisions,
    write_ground_truth,
)
from .ingest import PropertyMap, dataset_to_csv, load_dataset
from .model import ERError, omega_size
from .pipeline import (
    ConfigError,
    PipelineError,
    build_link_spec,
    load_config,
    load_inputs,
    load_truth,
    match_candidates,
    run_blocking,
    run_pipeline,
    sweep,
    with_overrides,
)
from .similarity import LEARNED, Label
from .synth import CORRUPTIONS, SyntheticCorpusSpec, generate_corpus

logger = logging.getLogger("erkit")

INT_PARAMS = ("window", "bands", "rows", "max_block_size")


def _common(f):
    f = click.option("--seed", type=int, default=None, help="Override the config seed.")(f)
    f = click.option("--workers", type=int, default=None, help="Worker processes (never changes results).")(f)
    f = click.option("--output-dir", type=click.Path(file_okay=False), default=None,
                     help="Override the config output directory.")(f)
    return f


def _config(path, seed, workers, output_dir):
    cfg = with_overrides(load_config(path), seed=seed, workers=workers, output_dir=output_dir)
    cfg.validate()
    return cfg


def _fail(exc: Exception, code: int = 1):
    stage = getattr(exc, "stage", None)
    msg = str(exc) if stage else f"error: {exc}"
    click.echo(msg, err=True)
    sys.exit(code)


@click.group()
@click.version_option(__version__, prog_name="erkit")
@click.option("-v", "--verbose", count=True, help="More logging (-v info, -vv debug).")
def main(verbose: int) -> None:
    """Named entity resolution: blocking, matching and evaluation."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["ntriples", "csv"]), default=None)
@click.option("--map", "renames", multiple=True, help="Property rename SRC=DST (repeatable).")
@click.option("--label-property", default=None)
@click.option("--type-filter", multiple=True, help="Only keep subjects of this rdf:type (repeatable).")
@click.option("--output-dir", type=click.Path(file_okay=False), default=None,
              help="Write <name>.csv here instead of stdout.")
def ingest(path, fmt, renames, label_property, type_filter, output_dir):
    """Parse an input file and print it as a normalized CSV dataset."""
    try:
        ds = load_dataset(path, fmt, PropertyMap.parse(renames), label_property=label_property,
                          type_filter=type_filter or None)
    except ERError as exc:
        _fail(exc)
    text = dataset_to_csv(ds)
    if output_dir is None:
        click.echo(text, nl=False)
    else:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{ds.name}.csv").write_text(text, encoding="utf-8")
    click.echo(f"{ds.name}: {len(ds)} entities, schema {list(ds.schema)}", err=True)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@_common
def block(config, seed, workers, output_dir):
    """Run blocking only; writes candidates.tsv and blocking_meta.json."""
    try:
        cfg = _config(config, seed, workers, output_dir)
        d1, d2 = load_inputs(cfg)
        c = run_blocking(cfg, d1, d2)
    except ERError as exc:
        _fail(exc)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "candidates.tsv").write_text(format_pairs(c.pairs), encoding="utf-8")
    (cfg.output_dir / "blocking_meta.json").write_text(json.dumps(c.meta, indent=2, sort_keys=True) + "\n")
    click.echo(f"{len(c)} candidate pairs of {omega_size(d1, d2)} -> {cfg.output_dir}")


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--candidates", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Candidate TSV; blocking is run when omitted.")
@_common
def match(config, candidates, seed, workers, output_dir):
    """Apply the link specification; writes decisions.tsv and review.tsv."""
    try:
        cfg = _config(config, seed, workers, output_dir)
        d1, d2 = load_inputs(cfg)
        c = load_candidates(candidates, cfg.mode) if candidates else run_blocking(cfg, d1, d2)
        c.validate(d1, d2)
        spec, _ = build_link_spec(cfg, d1, d2)
        decisions = match_candidates(cfg, c, spec, d1, d2)
    except ERError as exc:
        _fail(exc)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "decisions.tsv").write_text(format_decisions(decisions), encoding="utf-8")
    (cfg.output_dir / "review.tsv").write_text(format_decisions(decisions, {Label.INDETERMINATE}), encoding="utf-8")
    dup = sum(d.label == Label.DUPLICATE for d in decisions)
    click.echo(f"{dup} duplicates among {len(decisions)} candidate pairs -> {cfg.output_dir}")


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@_common
def train(config, seed, workers, output_dir):
    """Fit the learned-linear link specification; writes model.json."""
    try:
        cfg = _config(config, seed, workers, output_dir)
        if cfg.similarity.training is None:
            raise ConfigError("similarity.training is required for train")
        cfg = replace(cfg, similarity=replace(cfg.similarity, kind=LEARNED, model=None))
        d1, d2 = load_inputs(cfg)
        spec, loss = build_link_spec(cfg, d1, d2)
    except ERError as exc:
        _fail(exc)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    spec.save(cfg.output_dir / "model.json")
    click.echo(f"final training loss {loss:.6f} -> {cfg.output_dir / 'model.json'}")


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--candidates", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--decisions", type=click.Path(exists=True, dir_okay=False), default=None)
@_common
def evaluate(config, candidates, decisions, seed, workers, output_dir):
    """Score candidate and decision files against the ground truth."""
    try:
        cfg = _config(config, seed, workers, output_dir)
        d1, d2 = load_inputs(cfg)
        gt = load_truth(cfg, d1, d2)
        if gt is None:
            raise ConfigError("evaluation.ground_truth is required for evaluate")
        c = load_candidates(candidates, cfg.mode)
        c.validate(d1, d2)
        brep = blocking_report(c, gt, omega_size(d1, d2))
        mrep = None
        if decisions:
            decs = read_decisions(Path(decisions).read_text(encoding="utf-8"), cfg.mode)
            mrep = match_metrics(decs, gt, c, cfg.evaluation.exclude_indeterminate)
    except ERError as exc:
        _fail(exc)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "blocking_report.json").write_text(brep.to_json(), encoding="utf-8")
    click.echo(brep.to_json(), nl=False)
    if mrep is not None:
        (cfg.output_dir / "match_report.json").write_text(mrep.to_json(), encoding="utf-8")
        click.echo(mrep.to_json(), nl=False)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--streaming", is_flag=True, default=None, help="Classify pairs as blocking emits them.")
@_common
def run(config, streaming, seed, workers, output_dir):
    """Run the whole workflow and write the run directory."""
    try:
        cfg = with_overrides(load_config(config), seed=seed, workers=workers, output_dir=output_dir)
        if streaming:
            cfg = replace(cfg, streaming=True)
        out = run_pipeline(cfg)
    except PipelineError as exc:
        _fail(exc, 2)
    except ERError as exc:
        _fail(exc)
    click.echo(f"run complete -> {out}")


@main.command("sweep")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--param", required=True, help="window, tight, loose, bands, rows, max_block_size or threshold.")
@click.option("--values", required=True, help="Comma-separated values, e.g. 2,4,6,8.")
@_common
def sweep_cmd(config, param, values, seed, workers, output_dir):
    """Write a PC-RR or precision-recall curve CSV over parameter values."""
    vals = [v.strip() for v in values.split(",") if v.strip()]
    try:
        cfg = with_overrides(load_config(config), seed=seed, workers=workers, output_dir=output_dir)
        cast = int if param in INT_PARAMS else float
        path = sweep(cfg, param, [cast(v) for v in vals])
    except (ERError, ValueError) as exc:
        _fail(exc)
    click.echo(path.read_text(encoding="utf-8"), nl=False)


@main.command()
@click.option("--num-entities", type=int, default=100, show_default=True)
@click.option("--duplicate-fraction", type=float, default=0.3, show_default=True)
@click.option("--corruptions", default="typo,initialism", show_default=True,
              help=f"Comma-separated subset of {', '.join(CORRUPTIONS)}.")
@click.option("--corruption-rate", type=float, default=1.0, show_default=True)
@click.option("--dedup", is_flag=True, help="Emit a single dataset with duplicates inside it.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output-dir", type=click.Path(file_okay=False), default="corpus", show_default=True)
def generate(num_entities, duplicate_fraction, corruptions, corruption_rate, dedup, seed, output_dir):
    """Generate a synthetic corpus (CSV datasets plus ground_truth.tsv)."""
    ops = tuple(c.strip() for c in corruptions.split(",") if c.strip())
    try:
        spec = SyntheticCorpusSpec(num_entities, duplicate_fraction, ops, seed, corruption_rate, dedup)
        d1, d2, gt = generate_corpus(spec)
    except ERError as exc:
        _fail(exc)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{d1.name}.csv").write_text(dataset_to_csv(d1), encoding="utf-8")
    if d2 is not None:
        (out / f"{d2.name}.csv").write_text(dataset_to_csv(d2), encoding="utf-8")
    write_ground_truth(gt, out / "ground_truth.tsv")
    click.echo(f"{len(d1)} + {0 if d2 is None else len(d2)} entities, {len(gt)} ground-truth pairs -> {out}")


if __name__ == "__main__":
    main()
