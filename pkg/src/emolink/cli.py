"""Command-line interface.

Subcommands: validate, expand-lexicon, extract, nullmodel, network, compare,
stability, deltas, synth, report. Exit codes: 0 success, 2 configuration
error, 3 data error, 4 degenerate statistics.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import artifacts, pipeline, report as figures
from .config import OUTPUT_ROOT_ENV, load_run_config
from .errors import ConfigError, DataError, DegenerateStatisticsError, EmolinkError
from .lexicon import expand_candidates, load_embeddings, load_lexicon
from .synth import load_synth_spec, write_corpus

log = logging.getLogger("emolink")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DEGENERATE = 4


def _pipeline_parent() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", required=True, help="run config (JSON)")
    parent.add_argument("--dataset", action="append", help="restrict to this dataset (repeatable)")
    parent.add_argument("--seed", type=int, default=None, help="override the master seed")
    parent.add_argument("--workers", type=int, default=1, help="parallel workers for the null model")
    parent.add_argument("--strict", action="store_true", help="abort on the first malformed input line")
    parent.add_argument("--out", default=None, help="override the output root")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emolink",
        description="Significance-filtered emotion co-occurrence networks from text corpora",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="info-level logging")
    sub = parser.add_subparsers(dest="command", required=True)
    pipe = _pipeline_parent()

    p = sub.add_parser("validate", help="validate a run config")
    p.add_argument("--config", required=True)

    p = sub.add_parser("expand-lexicon", help="propose lexicon candidates from embeddings")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--threshold", type=float, default=0.7)
    p.add_argument("--out", required=True, help="candidate file to write")

    sub.add_parser("extract", parents=[pipe], help="occurrence and pair tables per window")
    sub.add_parser("nullmodel", parents=[pipe], help="null mean/std per pair per window")
    sub.add_parser("network", parents=[pipe], help="concept and emotion networks per window")

    p = sub.add_parser("compare", help="compare snapshots within or across datasets")
    _compare_inputs(p)
    p.add_argument("--mode", choices=("within", "across"), required=True)
    p.add_argument("--scope", choices=("all21", "inter15", "both"), default="both")
    p.add_argument("--figures", action="store_true", help="also render heatmaps")
    p.add_argument("--out", default=None, help="output directory for the report files")

    p = sub.add_parser("stability", help="repeated-significance test for concept links")
    _compare_inputs(p)
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="stability table path")

    p = sub.add_parser("deltas", help="per-link strength t-tests between two datasets")
    _compare_inputs(p)
    p.add_argument("--figure", default=None, help="optional heatmap path")
    p.add_argument("--out", default=None, help="deltas table path")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", required=True, help="generator settings (JSON)")
    p.add_argument("--seed", type=int, default=None, help="override the seed declared in the settings file")
    p.add_argument("--out", required=True, help="post file to write (JSON lines)")
    p.add_argument("--lexicon-out", default=None, help="also write the matching lexicon")

    p = sub.add_parser("report", help="comparison matrices, heatmaps and trend figures")
    _compare_inputs(p)
    p.add_argument("--out", default=None, help="output directory")
    return parser


def _compare_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="run config (JSON)")
    p.add_argument("--dataset", action="append", help="dataset name from the config (repeatable)")
    p.add_argument("--artifacts", nargs="*", default=None, help="dataset artifact directories")


def _resolve_dirs(args) -> list[Path]:
    """Dataset artifact directories from --artifacts or --config/--dataset."""
    if args.artifacts:
        return [Path(d) for d in args.artifacts]
    if args.config:
        cfg = load_run_config(args.config)
        names = args.dataset or [ds.name for ds in cfg.datasets]
        return [cfg.dataset_dir(name) for name in names]
    raise ConfigError("pass --artifacts directories or --config (with optional --dataset)")


def _default_out(sub_name: str) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV, ".")
    return Path(root) / f"emolink-{sub_name}"


def cmd_validate(args) -> int:
    cfg = load_run_config(args.config)
    load_lexicon(cfg.lexicon)  # parse errors surface here
    print(f"config ok: {len(cfg.datasets)} dataset(s), seed {cfg.seed}, R={cfg.replicates}")
    return EXIT_OK


def cmd_expand_lexicon(args) -> int:
    lex = load_lexicon(args.lexicon)
    emb = load_embeddings(args.embeddings)
    try:
        candidates = expand_candidates(lex, emb, args.threshold)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as fh:
        for c in candidates:
            fh.write(f"{c.word}\t{c.source}\t{c.dimension.value}\t{c.cosine!r}\n")
    print(f"wrote {len(candidates)} candidate(s) to {out} (review before merging)")
    return EXIT_OK


def _run_stage(args, stage) -> int:
    cfg = load_run_config(args.config, seed_override=args.seed, output_override=args.out)
    names = args.dataset or [ds.name for ds in cfg.datasets]
    for name in names:
        run = stage(cfg, name, workers=args.workers, strict=args.strict)
        print(f"{name}: {len(run.window_ids)} window(s) -> {run.directory} "
              f"(manifest {run.manifest_hash[:12]})")
    return EXIT_OK


def cmd_compare(args) -> int:
    dirs = _resolve_dirs(args)
    out = Path(args.out) if args.out else _default_out(f"compare-{args.mode}")
    scopes = ("all21", "inter15") if args.scope == "both" else (args.scope,)
    reports = {}
    if args.mode == "within":
        if len(dirs) != 1:
            raise ConfigError("within mode compares the windows of exactly one dataset")
        for scope in scopes:
            manifest, reports[scope] = pipeline.within_report(dirs[0], scope)
        mhash = manifest["manifest_hash"]
    else:
        if len(dirs) < 2:
            raise ConfigError("across mode needs at least two datasets")
        for scope in scopes:
            manifests, reports[scope] = pipeline.across_report(dirs, scope)
        mhash = ",".join(m["manifest_hash"] for m in manifests)
    for rep in reports.values():
        artifacts.write_comparison(out, mhash, rep)
    if args.figures:
        _render_heatmaps(out, reports, mhash)
    rep = next(iter(reports.values()))
    print(f"{rep.mode}: {len(rep.labels)} label(s), {rep.comparisons} comparison(s) -> {out}")
    return EXIT_OK


def _render_heatmaps(out: Path, reports: dict, mhash: str = "") -> None:
    all21 = reports.get("all21")
    inter15 = reports.get("inter15")
    base = all21 or inter15
    note = mhash[:16] if mhash else None
    figures.render_rho_heatmap(
        out / "heatmap_spearman.svg", all21 or inter15, inter15 if all21 else None, note=note
    )
    figures.render_value_heatmap(out / "heatmap_jaccard.svg", base.labels, base.jaccard, note=note)


def cmd_stability(args) -> int:
    dirs = _resolve_dirs(args)
    if len(dirs) != 1:
        raise ConfigError("stability runs over exactly one dataset's windows")
    directory = dirs[0]
    manifest, rows = pipeline.stability_table(directory, resamples=args.resamples, seed=args.seed)
    out = Path(args.out) if args.out else Path(directory) / "stability.tsv"
    artifacts.write_stability(out, manifest["manifest_hash"], rows)
    stable = sum(1 for r in rows if r[4] <= 0.05)
    print(f"{len(rows)} ever-significant link(s), {stable} stable at p<=0.05 -> {out}")
    return EXIT_OK


def cmd_deltas(args) -> int:
    dirs = _resolve_dirs(args)
    if len(dirs) != 2:
        raise ConfigError("deltas compares exactly two datasets (first minus second)")
    (manifest_a, manifest_b), rows = pipeline.deltas_table(dirs[0], dirs[1])
    out = Path(args.out) if args.out else _default_out("deltas") / "deltas.tsv"
    mhash = f"{manifest_a['manifest_hash']},{manifest_b['manifest_hash']}"
    artifacts.write_deltas(out, mhash, rows)
    if args.figure:
        figures.render_delta_heatmap(args.figure, rows, note=mhash[:16])
    flagged = sum(1 for r in rows if r.test.p_adjusted is not None and r.test.p_adjusted <= 0.05)
    print(f"21 link deltas ({flagged} significant at FDR 0.05) -> {out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = load_synth_spec(args.spec, seed_override=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    count = write_corpus(spec, out, args.lexicon_out)
    print(f"wrote {count} post(s) to {out}" + (f" and lexicon to {args.lexicon_out}" if args.lexicon_out else ""))
    return EXIT_OK


def cmd_report(args) -> int:
    dirs = _resolve_dirs(args)
    out = Path(args.out) if args.out else _default_out("report")
    out.mkdir(parents=True, exist_ok=True)
    reports = {}
    if len(dirs) == 1:
        manifest, snapshots = artifacts.load_snapshots(dirs[0])
        for scope in ("all21", "inter15"):
            _, reports[scope] = pipeline.within_report(dirs[0], scope)
        mhash = manifest["manifest_hash"]
    else:
        for scope in ("all21", "inter15"):
            manifests, reports[scope] = pipeline.across_report(dirs, scope)
        mhash = ",".join(m["manifest_hash"] for m in manifests)
    for rep in reports.values():
        artifacts.write_comparison(out, mhash, rep)
    _render_heatmaps(out, reports, mhash)
    for directory in dirs:
        manifest, snapshots = artifacts.load_snapshots(directory)
        if not snapshots:
            continue
        rescaled = np.vstack([s.emotion_rescaled for s in snapshots])
        figures.render_strength_trends(
            out / f"trends_{manifest['dataset']}.svg",
            [s.snapshot_id for s in snapshots],
            rescaled,
            note=manifest["manifest_hash"][:16],
        )
    print(f"report written to {out}")
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "expand-lexicon": cmd_expand_lexicon,
    "extract": lambda a: _run_stage(a, pipeline.run_extract),
    "nullmodel": lambda a: _run_stage(a, pipeline.run_nullmodel),
    "network": lambda a: _run_stage(a, pipeline.run_network),
    "compare": cmd_compare,
    "stability": cmd_stability,
    "deltas": cmd_deltas,
    "synth": cmd_synth,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateStatisticsError as exc:
        print(f"degenerate statistics: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (DataError, EmolinkError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
