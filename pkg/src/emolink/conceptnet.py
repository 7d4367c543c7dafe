"""Concept co-occurrence pairs, constrained-permutation null model and
significance filtering.

The null model randomly reassigns word occurrences to posts while preserving
(1) each word's total frequency and (2) each post's word count, with no
duplicate word inside a post. Each observed pair weight is scored as a
z-score against the replicate ensemble, and links pass when both the weight
percentile threshold and the strength threshold hold.

Randomness comes from Philox (a counter-based generator) keyed by
``numpy.random.SeedSequence`` so replicate streams are reproducible and
independent of scheduling.
"""

from __future__ import annotations

import math
from fractions import Fraction
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DataError, SamplerError
from .lexicon import Lexicon, match_concepts

# Replicates are processed in fixed-size chunks so that results do not depend
# on the worker count (integer accumulators make the merge exact regardless).
_CHUNK = 10
_MAX_RETRIES = 100


Pair = tuple[str, str]


def pair_key(a: str, b: str) -> Pair:
    """Canonical unordered pair key (lexicographic order)."""
    if a == b:
        raise DataError(f"a concept pair needs two distinct words, got {a!r} twice")
    return (a, b) if a < b else (b, a)


class OccurrenceTable:
    """Per-post sets of matched lexicon words for one window.

    Rows with zero words are excluded by construction; no word repeats
    within a row.
    """

    def __init__(self, rows: Iterable[tuple[str, Iterable[str]]]):
        post_ids: list[str] = []
        word_rows: list[tuple[str, ...]] = []
        for post_id, words in rows:
            words = tuple(words)
            if not words:
                raise DataError(f"row {post_id!r} has no words")
            if len(set(words)) != len(words):
                raise DataError(f"row {post_id!r} contains a duplicate word")
            post_ids.append(post_id)
            word_rows.append(words)
        self.post_ids: tuple[str, ...] = tuple(post_ids)
        self.rows: tuple[tuple[str, ...], ...] = tuple(word_rows)
        self._flat: _FlatTable | None = None

    def __len__(self) -> int:
        return len(self.rows)

    def sizes(self) -> tuple[int, ...]:
        return tuple(len(r) for r in self.rows)

    def flat(self) -> "_FlatTable":
        if self._flat is None:
            self._flat = _FlatTable.build(self.rows)
        return self._flat


def build_occurrence_table(posts, lex: Lexicon, mode: str = "substring") -> OccurrenceTable:
    """One row per post with at least one matched concept, ordered by post id."""
    rows = []
    for post in posts:
        words = match_concepts(post.text, lex, mode)
        if words:
            rows.append((post.id, words))
    rows.sort(key=lambda r: r[0])
    return OccurrenceTable(rows)


@dataclass
class _FlatTable:
    """Array-backed view of an occurrence table used by the null model."""

    words: np.ndarray  # int32 word id per slot, row-major
    row_of_slot: np.ndarray  # int32
    offsets: np.ndarray  # int64, len rows+1
    vocab: tuple[str, ...]
    word_counts: np.ndarray  # int64, len V
    size_groups: tuple[np.ndarray, ...]  # slot-index matrices (n_s, s) for sizes >= 2

    @staticmethod
    def build(rows: Sequence[tuple[str, ...]]) -> "_FlatTable":
        vocab = tuple(sorted({w for row in rows for w in row}))
        index = {w: i for i, w in enumerate(vocab)}
        sizes = np.fromiter((len(r) for r in rows), dtype=np.int64, count=len(rows))
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        words = np.fromiter(
            (index[w] for row in rows for w in row), dtype=np.int32, count=int(offsets[-1])
        )
        row_of_slot = np.repeat(np.arange(len(rows), dtype=np.int32), sizes)
        groups = []
        for s in np.unique(sizes):
            if s < 2:
                continue
            starts = offsets[:-1][sizes == s]
            groups.append(starts[:, None] + np.arange(int(s))[None, :])
        return _FlatTable(
            words=words,
            row_of_slot=row_of_slot,
            offsets=offsets,
            vocab=vocab,
            word_counts=np.bincount(words, minlength=len(vocab)).astype(np.int64),
            size_groups=tuple(groups),
        )

    @property
    def n_slots(self) -> int:
        return int(self.words.size)

    def check_feasible(self) -> None:
        rows = len(self.offsets) - 1
        worst = int(np.argmax(self.word_counts)) if len(self.vocab) else 0
        if len(self.vocab) and int(self.word_counts[worst]) > rows:
            raise SamplerError(
                f"infeasible shuffle: word {self.vocab[worst]!r} occurs "
                f"{int(self.word_counts[worst])} times over {rows} rows"
            )

    def pair_counts(self, words: np.ndarray) -> np.ndarray:
        """Dense unordered-pair counts, indexed by lo * V + hi."""
        V = len(self.vocab)
        parts = []
        for mat in self.size_groups:
            vals = words[mat]
            s = mat.shape[1]
            for a in range(s):
                for b in range(a + 1, s):
                    lo = np.minimum(vals[:, a], vals[:, b]).astype(np.int64)
                    hi = np.maximum(vals[:, a], vals[:, b]).astype(np.int64)
                    parts.append(lo * V + hi)
        if not parts:
            return np.zeros(V * V, dtype=np.int64)
        return np.bincount(np.concatenate(parts), minlength=V * V).astype(np.int64)


class ConceptPairTable:
    """Unordered word pair -> number of posts containing both words."""

    def __init__(self, weights: Mapping[Pair, int]):
        self.weights: dict[Pair, int] = dict(weights)

    def __len__(self) -> int:
        return len(self.weights)

    def items(self):
        return self.weights.items()

    def get(self, pair: Pair, default: int = 0) -> int:
        return self.weights.get(pair, default)


def count_pairs(table: OccurrenceTable) -> ConceptPairTable:
    """All k(k-1)/2 unordered pairs per row, summed over rows."""
    flat = table.flat()
    dense = flat.pair_counts(flat.words)
    V = len(flat.vocab)
    weights: dict[Pair, int] = {}
    for key in np.flatnonzero(dense):
        lo, hi = divmod(int(key), V)
        weights[pair_key(flat.vocab[lo], flat.vocab[hi])] = int(dense[key])
    return ConceptPairTable(weights)


def total_pair_mass(table: OccurrenceTable) -> int:
    """Sum over rows of k(k-1)/2; invariant under any valid shuffle."""
    return sum(k * (k - 1) // 2 for k in table.sizes())


def _entropy(seed: int | Sequence[int]) -> tuple[int, ...]:
    if isinstance(seed, (tuple, list)):
        out: list[int] = []
        for part in seed:
            out.extend(_entropy(part))
        return tuple(out)
    return (int(seed),)


def _rng(entropy: tuple[int, ...]) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _repair(perm: np.ndarray, flat: _FlatTable, rng: np.random.Generator, budget: int) -> bool:
    """Swap duplicate occurrences between rows until every row is
    duplicate-free. Mutates `perm`; returns False once `budget` failed swap
    attempts have accumulated."""
    V = len(flat.vocab)
    row = flat.row_of_slot.astype(np.int64)
    keys = row * V + perm
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    dup_pos = np.flatnonzero(sk[1:] == sk[:-1]) + 1
    if dup_pos.size == 0:
        return True
    conflicts = np.sort(order[dup_pos])
    n = flat.n_slots
    delta: dict[int, int] = {}

    def live_count(key: int) -> int:
        lo = int(np.searchsorted(sk, key, "left"))
        hi = int(np.searchsorted(sk, key, "right"))
        return hi - lo + delta.get(key, 0)

    failed = 0
    for c in conflicts:
        w = int(perm[c])
        r = int(row[c])
        if live_count(r * V + w) <= 1:
            continue
        while True:
            if failed >= budget:
                return False
            t = int(rng.integers(n))
            r2 = int(row[t])
            u = int(perm[t])
            if r2 == r or u == w or live_count(r2 * V + w) >= 1 or live_count(r * V + u) >= 1:
                failed += 1
                continue
            perm[c], perm[t] = u, w
            for k, dv in ((r * V + w, -1), (r2 * V + w, 1), (r2 * V + u, -1), (r * V + u, 1)):
                delta[k] = delta.get(k, 0) + dv
            break
    return True


def _has_row_duplicates(perm: np.ndarray, flat: _FlatTable) -> bool:
    keys = flat.row_of_slot.astype(np.int64) * len(flat.vocab) + perm
    sk = np.sort(keys)
    return bool(np.any(sk[1:] == sk[:-1]))


def _shuffled_words(flat: _FlatTable, rng: np.random.Generator) -> np.ndarray:
    """One valid random reassignment of the word occurrences to slots.

    Fisher-Yates permutation of the occurrence multiset followed by bounded
    local repair; fresh permutation after 10 * N failed swaps; abort after
    100 retries. Only approximately uniform over valid assignments (exactly
    uniform when the initial permutation needs no repair).
    """
    flat.check_feasible()
    budget = 10 * max(flat.n_slots, 1)
    for _ in range(_MAX_RETRIES):
        perm = rng.permutation(flat.words)
        if not _repair(perm, flat, rng, budget):
            continue
        # marginal-preservation checks on every replicate
        if _has_row_duplicates(perm, flat):  # pragma: no cover - repair guarantees this
            continue
        if not np.array_equal(
            np.bincount(perm, minlength=len(flat.vocab)), flat.word_counts
        ):  # pragma: no cover - swaps preserve the multiset
            raise SamplerError("shuffle corrupted word frequencies")
        return perm
    raise SamplerError(f"no valid assignment found after {_MAX_RETRIES} permutation retries")


def shuffle_assignment(table: OccurrenceTable, seed: int | Sequence[int]) -> OccurrenceTable:
    """Randomly reassign word occurrences across posts, preserving each
    word's total count and each post's word count, with no within-post
    duplicates."""
    flat = table.flat()
    perm = _shuffled_words(flat, _rng(_entropy(seed)))
    rows = []
    for i, post_id in enumerate(table.post_ids):
        lo, hi = int(flat.offsets[i]), int(flat.offsets[i + 1])
        rows.append((post_id, tuple(sorted(flat.vocab[w] for w in perm[lo:hi]))))
    return OccurrenceTable(rows)


@dataclass(frozen=True)
class NullEntry:
    """Replicate-ensemble moments for one pair (population std)."""

    mean: float
    std: float


class NullStats:
    """Per-pair null mean/std over R replicate weights (absent -> weight 0)."""

    def __init__(
        self,
        vocab: tuple[str, ...],
        keys: np.ndarray,
        means: np.ndarray,
        stds: np.ndarray,
        replicates: int,
        seed: tuple[int, ...],
    ):
        self.vocab = vocab
        self.keys = keys
        self.means = means
        self.stds = stds
        self.replicates = replicates
        self.seed = seed
        self._by_pair: dict[Pair, NullEntry] | None = None

    def _index(self) -> dict[Pair, NullEntry]:
        if self._by_pair is None:
            V = len(self.vocab)
            self._by_pair = {}
            for key, mean, std in zip(self.keys, self.means, self.stds):
                lo, hi = divmod(int(key), V)
                self._by_pair[pair_key(self.vocab[lo], self.vocab[hi])] = NullEntry(
                    float(mean), float(std)
                )
        return self._by_pair

    def __len__(self) -> int:
        return int(self.keys.size)

    def get(self, pair: Pair) -> NullEntry | None:
        return self._index().get(pair)

    def items(self):
        return self._index().items()


def _null_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    flat, entropy, start, stop = args
    V = len(flat.vocab)
    total = np.zeros(V * V, dtype=np.int64)
    total_sq = np.zeros(V * V, dtype=np.int64)
    for i in range(start, stop):
        perm = _shuffled_words(flat, _rng(entropy + (i,)))
        counts = flat.pair_counts(perm)
        total += counts
        total_sq += counts * counts
    return total, total_sq


def null_stats(
    table: OccurrenceTable,
    replicates: int = 100,
    seed: int | Sequence[int] = 0,
    workers: int = 1,
) -> NullStats:
    """Estimate each pair's null mean and (population) std from `replicates`
    independent shuffles, with per-replicate seeds derived from `seed`.

    Entries exist for every pair observed in the real table or in any
    replicate. Results are identical for a fixed seed regardless of
    `workers`: replicate seeds depend only on the replicate index and the
    integer accumulators merge exactly.
    """
    if replicates < 2:
        raise ConfigError(f"replicates must be >= 2, got {replicates}")
    flat = table.flat()
    flat.check_feasible()
    entropy = _entropy(seed)
    chunks = [(flat, entropy, s, min(s + _CHUNK, replicates)) for s in range(0, replicates, _CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_null_chunk, chunks))
    else:
        parts = [_null_chunk(c) for c in chunks]
    V = len(flat.vocab)
    total = np.zeros(V * V, dtype=np.int64)
    total_sq = np.zeros(V * V, dtype=np.int64)
    for part, part_sq in parts:
        total += part
        total_sq += part_sq
    observed = flat.pair_counts(flat.words)
    keys = np.flatnonzero((observed > 0) | (total > 0))
    means, stds = _moments(total[keys], total_sq[keys], replicates)
    return NullStats(flat.vocab, keys, means, stds, replicates, entropy)


def _moments(total: np.ndarray, total_sq: np.ndarray, replicates: int) -> tuple[np.ndarray, np.ndarray]:
    mean = total / replicates
    var = total_sq / replicates - mean * mean
    return mean, np.sqrt(np.clip(var, 0.0, None))


def link_strength(weight: float, entry: NullEntry) -> float:
    """Z-score of the observed weight against the null ensemble.

    With zero null std: +inf when the weight exceeds the null mean (passes
    any finite strength threshold), 0 when equal, -inf when below.
    """
    if entry.std > 0.0:
        return (weight - entry.mean) / entry.std
    if weight > entry.mean:
        return math.inf
    if weight < entry.mean:
        return -math.inf
    return 0.0


def compute_strengths(pairs: ConceptPairTable, null: NullStats) -> dict[Pair, float]:
    """Strength for every stored pair; a pair missing from the null stats
    (cannot happen for stats built from the same table) is an error."""
    strengths: dict[Pair, float] = {}
    for pair, weight in pairs.items():
        entry = null.get(pair)
        if entry is None:
            raise DataError(f"no null statistics for pair {pair!r}")
        strengths[pair] = link_strength(weight, entry)
    return strengths


@dataclass(frozen=True)
class SignificanceConfig:
    """Dual thresholds: strength (z-score) and top weight percentile."""

    strength_threshold: float = 3.0
    weight_percentile: float = 10.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.strength_threshold):
            raise ConfigError("strength threshold must be finite")
        if not (0.0 < self.weight_percentile <= 100.0):
            raise ConfigError(
                f"weight percentile must be in (0, 100], got {self.weight_percentile}"
            )


def weight_cutoff(weights: Sequence[int], percentile: float) -> int:
    """Smallest observed weight w such that at most ceil(percentile% * n)
    stored pairs weigh >= w; ties at the cutoff are included. Falls back to
    the maximum weight when ties at the top alone exceed the budget."""
    if not weights:
        raise DataError("cannot compute a weight cutoff for an empty pair table")
    arr = np.sort(np.asarray(weights, dtype=np.int64))
    n = arr.size
    # exact rational budget: ceil(0.1 * 1770) must be 177, not 178
    budget = math.ceil(Fraction(str(percentile)) * n / 100)
    for w in np.unique(arr):
        at_or_above = n - int(np.searchsorted(arr, w, "left"))
        if at_or_above <= budget:
            return int(w)
    return int(arr[-1])


@dataclass(frozen=True)
class ConceptLinkRecord:
    pair: Pair
    weight: int
    strength: float
    significant: bool


@dataclass(frozen=True)
class ConceptNetwork:
    """All stored pair records for one snapshot, with significance flags."""

    snapshot_id: str
    records: tuple[ConceptLinkRecord, ...]
    weight_cutoff: int | None
    config: SignificanceConfig

    @property
    def significant_pairs(self) -> frozenset[Pair]:
        return frozenset(r.pair for r in self.records if r.significant)


def significant_links(
    pairs: ConceptPairTable,
    strengths: Mapping[Pair, float],
    cfg: SignificanceConfig,
    snapshot_id: str = "",
) -> ConceptNetwork:
    """Flag links whose weight reaches the top-percentile cutoff and whose
    strength reaches the threshold. An empty pair table yields an empty
    network."""
    if len(pairs) == 0:
        return ConceptNetwork(snapshot_id, (), None, cfg)
    cutoff = weight_cutoff(list(pairs.weights.values()), cfg.weight_percentile)
    records = []
    for pair in sorted(pairs.weights):
        weight = pairs.weights[pair]
        strength = strengths[pair]
        significant = weight >= cutoff and strength >= cfg.strength_threshold
        records.append(ConceptLinkRecord(pair, weight, strength, significant))
    return ConceptNetwork(snapshot_id, tuple(records), cutoff, cfg)
