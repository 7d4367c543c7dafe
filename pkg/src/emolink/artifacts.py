"""Delimited artifact files and the run manifest.

Every artifact starts with a `# manifest: <hash>` comment naming the run
fingerprint it was produced under; readers refuse files whose hash disagrees
with the directory's manifest, so stale or mixed artifacts cannot be
silently combined. Floats are serialized with `repr`, which round-trips
exactly, keeping staged and direct pipeline runs byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .conceptnet import (
    ConceptLinkRecord,
    ConceptNetwork,
    NullEntry,
    NullStats,
    OccurrenceTable,
    SignificanceConfig,
)
from .emotionet import LINK_KEYS, EmotionNetwork
from .errors import DataError
from .lexicon import Lexicon
from .stats import ComparisonReport, DeltaRow, Snapshot

MANIFEST_FILE = "manifest.json"


def fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_manifest(directory: Path, manifest: dict) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / MANIFEST_FILE
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def read_manifest(directory: Path) -> dict:
    path = Path(directory) / MANIFEST_FILE
    if not path.is_file():
        raise DataError(f"no manifest at {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def _write_rows(path: Path, manifest_hash: str, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# manifest: {manifest_hash}\n")
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(fmt(v) for v in row) + "\n")


def _read_rows(path: Path, expected_hash: str | None = None) -> tuple[str, list[str], list[list[str]]]:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing artifact {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("# manifest: "):
            raise DataError(f"{path} lacks a manifest header")
        file_hash = header.split(": ", 1)[1]
        if expected_hash is not None and file_hash.split(",")[0] != expected_hash:
            raise DataError(
                f"stale artifact {path.name}: built under manifest {file_hash[:12]}..., "
                f"expected {expected_hash[:12]}..."
            )
        columns = fh.readline().rstrip("\n").split("\t")
        rows = [line.rstrip("\n").split("\t") for line in fh if line.strip()]
    return file_hash, columns, rows


# -- per-window pipeline artifacts -------------------------------------------

def occurrence_path(directory: Path, window_id: str) -> Path:
    return Path(directory) / f"occurrences_{window_id}.tsv"


def write_occurrences(path: Path, manifest_hash: str, table: OccurrenceTable) -> None:
    rows = ((pid, " ".join(words)) for pid, words in zip(table.post_ids, table.rows))
    _write_rows(path, manifest_hash, ("post_id", "words"), rows)


def read_occurrences(path: Path, expected_hash: str | None = None) -> OccurrenceTable:
    _, _, rows = _read_rows(path, expected_hash)
    return OccurrenceTable((pid, tuple(words.split(" "))) for pid, words in rows)


def pairs_path(directory: Path, window_id: str) -> Path:
    return Path(directory) / f"pairs_{window_id}.tsv"


def write_pairs(path: Path, manifest_hash: str, weights: dict) -> None:
    rows = ((a, b, w) for (a, b), w in sorted(weights.items()))
    _write_rows(path, manifest_hash, ("word_i", "word_j", "weight"), rows)


def read_pairs(path: Path, expected_hash: str | None = None) -> dict:
    _, _, rows = _read_rows(path, expected_hash)
    return {(a, b): int(w) for a, b, w in rows}


def nullstats_path(directory: Path, window_id: str) -> Path:
    return Path(directory) / f"nullstats_{window_id}.tsv"


def write_nullstats(path: Path, manifest_hash: str, null: NullStats, observed: dict) -> None:
    # only pairs observed in the real window are needed downstream
    rows = []
    for pair in sorted(observed):
        entry = null.get(pair)
        if entry is None:
            raise DataError(f"null stats missing observed pair {pair!r}")
        rows.append((pair[0], pair[1], entry.mean, entry.std))
    _write_rows(path, manifest_hash, ("word_i", "word_j", "null_mean", "null_std"), rows)


def read_nullstats(path: Path, expected_hash: str | None = None) -> dict:
    _, _, rows = _read_rows(path, expected_hash)
    return {(a, b): NullEntry(float(m), float(s)) for a, b, m, s in rows}


def concept_path(directory: Path, window_id: str) -> Path:
    return Path(directory) / f"concept_{window_id}.tsv"


CONCEPT_COLUMNS = (
    "word_i", "word_j", "dim_i", "dim_j", "weight",
    "null_mean", "null_std", "strength", "significant",
)


def write_concept_network(
    path: Path,
    manifest_hash: str,
    net: ConceptNetwork,
    null_entries: dict,
    lex: Lexicon,
) -> None:
    rows = []
    for record in net.records:
        a, b = record.pair
        entry = null_entries[record.pair]
        rows.append(
            (
                a, b,
                lex.dimension_of(a).value, lex.dimension_of(b).value,
                record.weight, entry.mean, entry.std, record.strength,
                "true" if record.significant else "false",
            )
        )
    _write_rows(path, manifest_hash, CONCEPT_COLUMNS, rows)


def read_concept_network(
    path: Path, cfg: SignificanceConfig, expected_hash: str | None = None
) -> ConceptNetwork:
    _, columns, rows = _read_rows(path, expected_hash)
    if tuple(columns) != CONCEPT_COLUMNS:
        raise DataError(f"{path} has unexpected columns {columns}")
    records = tuple(
        ConceptLinkRecord((r[0], r[1]), int(r[4]), float(r[7]), r[8] == "true") for r in rows
    )
    window_id = Path(path).stem.replace("concept_", "")
    return ConceptNetwork(window_id, records, None, cfg)


def emotion_path(directory: Path, window_id: str) -> Path:
    return Path(directory) / f"emotion_{window_id}.tsv"


EMOTION_COLUMNS = ("dim_i", "dim_j", "sig_links", "possible_links", "raw_strength", "rescaled_strength")


def _emotion_rows(enet: EmotionNetwork):
    for n, (a, b) in enumerate(LINK_KEYS):
        yield (
            a.value, b.value,
            int(enet.sig_counts[n]), int(enet.possible[n]),
            enet.raw[n], enet.rescaled[n],
        )


def write_emotion_network(path: Path, manifest_hash: str, enet: EmotionNetwork) -> None:
    if enet.rescaled is None:
        raise DataError("emotion network must be rescaled before export")
    _write_rows(path, manifest_hash, EMOTION_COLUMNS, _emotion_rows(enet))


def read_emotion_network(path: Path, expected_hash: str | None = None) -> EmotionNetwork:
    _, columns, rows = _read_rows(path, expected_hash)
    if tuple(columns) != EMOTION_COLUMNS:
        raise DataError(f"{path} has unexpected columns {columns}")
    if len(rows) != 21:
        raise DataError(f"{path}: expected 21 emotion links, got {len(rows)}")
    sig = np.array([int(r[2]) for r in rows], dtype=np.int64)
    possible = np.array([int(r[3]) for r in rows], dtype=np.int64)
    rescaled = np.array([float(r[5]) for r in rows])
    window_id = Path(path).stem.replace("emotion_", "")
    return EmotionNetwork(window_id, sig, possible, rescaled)


def write_emotion_long(path: Path, manifest_hash: str, networks: Sequence[EmotionNetwork]) -> None:
    """Long-format strengths across windows, for trend plots."""
    rows = []
    for enet in networks:
        for row in _emotion_rows(enet):
            rows.append((enet.snapshot_id,) + row)
    _write_rows(path, manifest_hash, ("window_id",) + EMOTION_COLUMNS, rows)


# -- comparison and test tables ----------------------------------------------

def write_matrix(path: Path, manifest_hash: str, labels: Sequence[str], matrix: np.ndarray) -> None:
    rows = [(label,) + tuple(matrix[i]) for i, label in enumerate(labels)]
    _write_rows(path, manifest_hash, ("",) + tuple(labels), rows)


def read_matrix(path: Path) -> tuple[list[str], np.ndarray]:
    _, columns, rows = _read_rows(path)
    labels = [r[0] for r in rows]
    values = np.array([[float(v) for v in r[1:]] for r in rows])
    return labels, values


def write_comparison(directory: Path, manifest_hash: str, report: ComparisonReport) -> dict[str, Path]:
    """One file per metric; returns the written paths keyed by metric."""
    directory = Path(directory)
    out = {}
    suffix = report.scope
    for metric, matrix in (
        ("spearman_rho", report.rho),
        ("spearman_p_raw", report.p_raw),
        ("spearman_p_adj", report.p_adjusted),
    ):
        path = directory / f"{metric}_{suffix}.tsv"
        write_matrix(path, manifest_hash, report.labels, matrix)
        out[f"{metric}_{suffix}"] = path
    path = directory / "jaccard.tsv"
    write_matrix(path, manifest_hash, report.labels, report.jaccard)
    out["jaccard"] = path
    return out


DELTA_COLUMNS = ("dim_i", "dim_j", "t", "df", "p_raw", "p_fdr", "cohens_d", "direction")


def write_deltas(path: Path, manifest_hash: str, rows: Sequence[DeltaRow]) -> None:
    _write_rows(
        path,
        manifest_hash,
        DELTA_COLUMNS,
        (
            (
                r.dim_i.value, r.dim_j.value,
                r.test.statistic, r.test.df, r.test.p_raw, r.test.p_adjusted,
                r.test.cohens_d, r.direction,
            )
            for r in rows
        ),
    )


def read_deltas(path: Path) -> tuple[str, list[list[str]]]:
    file_hash, columns, rows = _read_rows(path)
    if tuple(columns) != DELTA_COLUMNS:
        raise DataError(f"{path} has unexpected columns {columns}")
    return file_hash, rows


STABILITY_COLUMNS = ("word_i", "word_j", "windows_significant", "windows_total", "stability_p")


def write_stability(path: Path, manifest_hash: str, rows: Iterable[Sequence]) -> None:
    _write_rows(path, manifest_hash, STABILITY_COLUMNS, rows)


# -- snapshot loading ----------------------------------------------------------

def load_snapshots(directory: Path) -> tuple[dict, list[Snapshot]]:
    """Load all windows of a dataset artifact directory as comparison
    snapshots, verifying that every file carries the manifest's hash.

    Windows skipped as degenerate (no emotion file) are excluded.
    """
    directory = Path(directory)
    manifest = read_manifest(directory)
    expected = manifest["manifest_hash"]
    cfg = SignificanceConfig(manifest["strength_threshold"], manifest["weight_percentile"])
    snapshots = []
    for window_id in manifest["window_ids"]:
        epath = emotion_path(directory, window_id)
        if not epath.is_file():
            continue
        enet = read_emotion_network(epath, expected)
        concept = read_concept_network(concept_path(directory, window_id), cfg, expected)
        snapshots.append(Snapshot.from_networks(enet, concept.significant_pairs))
    return manifest, snapshots
