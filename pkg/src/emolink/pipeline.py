"""End-to-end pipeline stages over artifact directories.

Stages (extract -> nullmodel -> network) each write their own artifacts and
reuse earlier ones when they carry the current manifest hash, so running
`network` directly produces byte-identical files to staged invocations.
A manifest-hash change (any config field that affects results) wipes the
dataset directory's artifacts before recomputation.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import artifacts
from .config import DatasetConfig, RunConfig, build_manifest
from .conceptnet import (
    ConceptPairTable,
    OccurrenceTable,
    SignificanceConfig,
    build_occurrence_table,
    count_pairs,
    link_strength,
    null_stats,
    significant_links,
)
from .corpus import assign_windows, filter_keywords, ingest
from .emotionet import aggregate, rescale
from .errors import DataError, DegenerateStatisticsError
from .lexicon import Lexicon, load_lexicon
from .stats import (
    ComparisonReport,
    compare_across,
    compare_within,
    link_stability,
    strength_deltas,
)

log = logging.getLogger(__name__)


@dataclass
class DatasetRun:
    """Handle to one dataset's artifact directory."""

    directory: Path
    manifest: dict

    @property
    def window_ids(self) -> list[str]:
        return list(self.manifest["window_ids"])

    @property
    def manifest_hash(self) -> str:
        return self.manifest["manifest_hash"]


def _window_entropy(seed: int, dataset: str, window_index: int) -> tuple[int, int, int]:
    name_int = int.from_bytes(hashlib.sha256(dataset.encode("utf-8")).digest()[:8], "big")
    return (seed, name_int, window_index)


def _prepare(cfg: RunConfig, name: str) -> tuple[DatasetConfig, Lexicon, Path, dict]:
    ds = cfg.dataset(name)
    lex = load_lexicon(cfg.lexicon)
    manifest = build_manifest(cfg, ds, len(lex))
    directory = cfg.dataset_dir(name)
    return ds, lex, directory, manifest


def _sync_manifest(directory: Path, manifest: dict) -> None:
    """Write the manifest; a hash change invalidates all existing artifacts."""
    try:
        existing = artifacts.read_manifest(directory)
    except DataError:
        existing = None
    if existing is not None and existing.get("manifest_hash") != manifest["manifest_hash"]:
        log.warning("configuration changed; discarding stale artifacts in %s", directory)
        for stale in directory.glob("*.tsv"):
            stale.unlink()
    artifacts.write_manifest(directory, manifest)


def _have(directory: Path, path_fn, window_ids) -> bool:
    return all(path_fn(directory, w).is_file() for w in window_ids)


def _ensure_extract(
    cfg: RunConfig, ds: DatasetConfig, lex: Lexicon, directory: Path, manifest: dict, strict: bool
) -> tuple[dict[str, OccurrenceTable], dict[str, dict]]:
    mhash = manifest["manifest_hash"]
    wids = manifest["window_ids"]
    if _have(directory, artifacts.occurrence_path, wids) and _have(directory, artifacts.pairs_path, wids):
        tables = {w: artifacts.read_occurrences(artifacts.occurrence_path(directory, w), mhash) for w in wids}
        pairs = {w: artifacts.read_pairs(artifacts.pairs_path(directory, w), mhash) for w in wids}
        return tables, pairs
    result = ingest(ds.input, strict=strict, default_offset=ds.default_offset())
    posts = filter_keywords(result.posts, ds.include_keywords, ds.exclude_keywords)
    corpus = assign_windows(posts, ds.window_spec())
    log.info(
        "%s: %d posts ingested (%d malformed), %d kept after filters, %d dropped outside windows",
        ds.name, len(result.posts) + result.malformed, result.malformed, len(posts), corpus.dropped,
    )
    tables: dict[str, OccurrenceTable] = {}
    pairs: dict[str, dict] = {}
    for window, wposts in corpus:
        table = build_occurrence_table(wposts, lex, cfg.matcher_mode)
        tables[window.id] = table
        pairs[window.id] = count_pairs(table).weights
        artifacts.write_occurrences(artifacts.occurrence_path(directory, window.id), mhash, table)
        artifacts.write_pairs(artifacts.pairs_path(directory, window.id), mhash, pairs[window.id])
    return tables, pairs


def run_extract(cfg: RunConfig, name: str, workers: int = 1, strict: bool = False) -> DatasetRun:
    """Per-window occurrence tables and pair-weight tables."""
    ds, lex, directory, manifest = _prepare(cfg, name)
    _sync_manifest(directory, manifest)
    _ensure_extract(cfg, ds, lex, directory, manifest, strict)
    return DatasetRun(directory, manifest)


def _ensure_nullstats(
    cfg: RunConfig,
    ds: DatasetConfig,
    directory: Path,
    manifest: dict,
    tables: dict[str, OccurrenceTable],
    workers: int,
) -> dict[str, dict]:
    mhash = manifest["manifest_hash"]
    wids = manifest["window_ids"]
    if _have(directory, artifacts.nullstats_path, wids):
        return {w: artifacts.read_nullstats(artifacts.nullstats_path(directory, w), mhash) for w in wids}
    out: dict[str, dict] = {}
    for idx, wid in enumerate(wids):
        table = tables[wid]
        stats = null_stats(
            table,
            replicates=cfg.replicates,
            seed=_window_entropy(cfg.seed, ds.name, idx),
            workers=workers,
        )
        observed = count_pairs(table).weights
        artifacts.write_nullstats(artifacts.nullstats_path(directory, wid), mhash, stats, observed)
        out[wid] = artifacts.read_nullstats(artifacts.nullstats_path(directory, wid), mhash)
    return out


def run_nullmodel(cfg: RunConfig, name: str, workers: int = 1, strict: bool = False) -> DatasetRun:
    """Null mean/std per observed pair, per window."""
    ds, lex, directory, manifest = _prepare(cfg, name)
    _sync_manifest(directory, manifest)
    tables, _ = _ensure_extract(cfg, ds, lex, directory, manifest, strict)
    _ensure_nullstats(cfg, ds, directory, manifest, tables, workers)
    return DatasetRun(directory, manifest)


def run_network(cfg: RunConfig, name: str, workers: int = 1, strict: bool = False) -> DatasetRun:
    """Concept networks (significance-flagged) and rescaled emotion networks.

    Windows whose emotion network is all-zero are degenerate snapshots: their
    concept file is still written but no emotion file, and they are skipped
    in comparisons.
    """
    ds, lex, directory, manifest = _prepare(cfg, name)
    _sync_manifest(directory, manifest)
    mhash = manifest["manifest_hash"]
    tables, pairs = _ensure_extract(cfg, ds, lex, directory, manifest, strict)
    null_entries = _ensure_nullstats(cfg, ds, directory, manifest, tables, workers)
    emotion_nets = []
    skipped = []
    for wid in manifest["window_ids"]:
        weights = pairs[wid]
        entries = null_entries[wid]
        strengths = {p: link_strength(w, entries[p]) for p, w in weights.items()}
        net = significant_links(ConceptPairTable(weights), strengths, cfg.significance, wid)
        artifacts.write_concept_network(
            artifacts.concept_path(directory, wid), mhash, net, entries, lex
        )
        enet = aggregate(net, lex)
        try:
            enet = rescale(enet)
        except DegenerateStatisticsError:
            log.warning("window %s: degenerate snapshot (no emotion links); skipped", wid)
            skipped.append(wid)
            epath = artifacts.emotion_path(directory, wid)
            if epath.is_file():
                epath.unlink()
            continue
        artifacts.write_emotion_network(artifacts.emotion_path(directory, wid), mhash, enet)
        emotion_nets.append(enet)
    if emotion_nets:
        artifacts.write_emotion_long(directory / "emotion_long.tsv", mhash, emotion_nets)
    if skipped:
        log.warning("%s: %d window(s) skipped as degenerate: %s", name, len(skipped), ", ".join(skipped))
    return DatasetRun(directory, manifest)


# -- comparison-level operations ------------------------------------------------


def within_report(directory: Path, scope: str = "all21") -> tuple[dict, ComparisonReport]:
    manifest, snapshots = artifacts.load_snapshots(directory)
    if len(snapshots) < 2:
        raise DegenerateStatisticsError(
            f"{directory}: need at least 2 non-degenerate snapshots, found {len(snapshots)}"
        )
    return manifest, compare_within(snapshots, scope)


def across_report(directories: list[Path], scope: str = "all21") -> tuple[list[dict], ComparisonReport]:
    manifests = []
    datasets = []
    labels = []
    for directory in directories:
        manifest, snapshots = artifacts.load_snapshots(directory)
        if not snapshots:
            raise DegenerateStatisticsError(f"{directory}: no usable snapshots")
        manifests.append(manifest)
        datasets.append(snapshots)
        labels.append(manifest["dataset"])
    return manifests, compare_across(datasets, labels, scope)


def deltas_table(dir_a: Path, dir_b: Path):
    """Per-link strength comparison of two datasets (positive t = stronger
    in the first)."""
    manifest_a, snaps_a = artifacts.load_snapshots(dir_a)
    manifest_b, snaps_b = artifacts.load_snapshots(dir_b)
    rows = strength_deltas(snaps_a, snaps_b)
    return (manifest_a, manifest_b), rows


def stability_table(directory: Path, resamples: int = 1000, seed: int = 0):
    """Repeated-significance p-value for every concept link that is
    significant in at least one window. The null draws each window's
    significant-link count uniformly from all possible lexicon word pairs."""
    directory = Path(directory)
    manifest = artifacts.read_manifest(directory)
    mhash = manifest["manifest_hash"]
    cfg = SignificanceConfig(manifest["strength_threshold"], manifest["weight_percentile"])
    sig_sets = []
    for wid in manifest["window_ids"]:
        net = artifacts.read_concept_network(artifacts.concept_path(directory, wid), cfg, mhash)
        sig_sets.append(net.significant_pairs)
    ever = sorted(set().union(*sig_sets)) if sig_sets else []
    n_words = manifest["lexicon_words"]
    possible = n_words * (n_words - 1) // 2
    if not ever:
        return manifest, []
    flags = np.zeros((len(ever), len(sig_sets)), dtype=bool)
    for t, sig in enumerate(sig_sets):
        for i, pair in enumerate(ever):
            flags[i, t] = pair in sig
    p_values = link_stability(flags, possible, resamples=resamples, seed=seed)
    rows = [
        (pair[0], pair[1], int(flags[i].sum()), flags.shape[1], float(p_values[i]))
        for i, pair in enumerate(ever)
    ]
    return manifest, rows
