"""Statistical kernels and network comparison operations.

Spearman rank correlation (tie-aware, Pearson on average ranks),
Benjamini-Hochberg FDR adjustment, Jaccard overlap of significant-link sets,
pooled/Welch two-sample t-tests with Cohen's d, repeated-significance
stability resampling, and the within/across snapshot comparison reports built
from them.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.special import stdtr

from .emotionet import INTER_INDICES, LINK_KEYS, EmotionNetwork
from .errors import ConfigError, DegenerateStatisticsError
from .lexicon import EmotionDim

log = logging.getLogger(__name__)

SCOPES = ("all21", "inter15")


def rank_average(values: Sequence[float]) -> np.ndarray:
    """Ranks 1..n with average ranks for ties (so they always sum to n(n+1)/2)."""
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size, dtype=np.float64)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(
    x: Sequence[float], y: Sequence[float], exact: bool = False
) -> tuple[float, float]:
    """Spearman rank correlation with a two-sided p-value.

    rho is the Pearson correlation of the tie-averaged rank vectors. The
    p-value uses the t approximation t = rho * sqrt((n-2) / (1-rho^2)) with
    n-2 degrees of freedom; `exact=True` (n <= 8 only) replaces it with the
    exact permutation p-value P(|rho_perm| >= |rho|).

    Constant input vectors leave rho undefined and raise
    :class:`DegenerateStatisticsError` rather than returning NaN.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.size} vs {y.size}")
    n = x.size
    if n < 3:
        raise DegenerateStatisticsError(f"need at least 3 observations, got {n}")
    rx, ry = rank_average(x), rank_average(y)
    sx, sy = rx.std(), ry.std()
    if sx == 0.0 or sy == 0.0:
        raise DegenerateStatisticsError("constant vector: rank correlation undefined")
    # identical (or exactly reversed) rank vectors are +-1 by definition;
    # short-circuit so rank-preserving perturbations give rho exactly 1
    if np.array_equal(rx, ry):
        rho = 1.0
    elif np.array_equal(rx + ry, np.full(n, n + 1.0)):
        rho = -1.0
    else:
        rho = float(np.mean((rx - rx.mean()) * (ry - ry.mean())) / (sx * sy))
        rho = max(-1.0, min(1.0, rho))
    if exact:
        if n > 8:
            raise ConfigError(f"exact permutation p-value supported for n <= 8, got {n}")
        hits = 0
        total = 0
        for perm in itertools.permutations(ry):
            pv = np.asarray(perm)
            r = float(np.mean((rx - rx.mean()) * (pv - pv.mean())) / (sx * sy))
            if abs(r) >= abs(rho) - 1e-12:
                hits += 1
            total += 1
        return rho, hits / total
    if abs(rho) >= 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, _t_two_sided(t, n - 2)


def _t_two_sided(t: float, df: float) -> float:
    if math.isinf(t):
        return 0.0
    return float(2.0 * stdtr(df, -abs(t)))


def fdr_adjust(p: Sequence[float]) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values (original order preserved)."""
    arr = np.asarray(p, dtype=np.float64)
    if arr.size == 0:
        return arr.copy()
    if np.any((arr < 0.0) | (arr > 1.0)) or not np.all(np.isfinite(arr)):
        raise ValueError("p-values must lie in [0, 1]")
    m = arr.size
    order = np.argsort(arr, kind="stable")
    scaled = arr[order] * m / np.arange(1, m + 1)
    adjusted = np.minimum.accumulate(scaled[::-1])[::-1]
    adjusted = np.minimum(adjusted, 1.0)
    out = np.empty(m, dtype=np.float64)
    out[order] = adjusted
    return out


def jaccard(a: Iterable, b: Iterable) -> float:
    """Intersection over union of two link sets; 1.0 for two empty sets
    (identical emptiness, reported with a warning), never NaN."""
    sa, sb = set(a), set(b)
    if not sa and not sb:
        log.warning("jaccard of two empty sets defined as 1.0")
        return 1.0
    return len(sa & sb) / len(sa | sb)


@dataclass(frozen=True)
class StatTest:
    """One test outcome; `p_adjusted` is filled by the multiple-testing pass."""

    statistic: float
    df: float
    p_raw: float
    p_adjusted: float | None = None
    cohens_d: float | None = None


def ttest_two_sample(
    a: Sequence[float], b: Sequence[float], pooled: bool = True
) -> StatTest:
    """Two-sample t-test; the pooled (Student) variant is the default, with
    df = n_a + n_b - 2. `pooled=False` gives Welch's test. Cohen's d uses the
    pooled standard deviation in both variants.

    Degenerate inputs (zero variance on both sides, equal means) return
    statistic 0 and p = 1; equal-variance-zero with unequal means returns an
    infinite statistic and p = 0.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = a.size, b.size
    if na < 2 or nb < 2:
        raise DegenerateStatisticsError("each sample needs at least 2 observations")
    ma, mb = a.mean(), b.mean()
    va, vb = a.var(ddof=1), b.var(ddof=1)
    sp2 = ((na - 1) * va + (nb - 1) * vb) / (na + nb - 2)
    sp = math.sqrt(sp2)
    d = (ma - mb) / sp if sp > 0.0 else (0.0 if ma == mb else math.copysign(math.inf, ma - mb))
    if pooled:
        df = float(na + nb - 2)
        se = sp * math.sqrt(1.0 / na + 1.0 / nb)
    else:
        se = math.sqrt(va / na + vb / nb)
        if se > 0.0:
            df = (va / na + vb / nb) ** 2 / (
                (va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1)
            )
        else:
            df = float(na + nb - 2)
    if se == 0.0:
        if ma == mb:
            return StatTest(0.0, df, 1.0, cohens_d=0.0)
        t = math.copysign(math.inf, ma - mb)
        return StatTest(t, df, 0.0, cohens_d=d)
    t = (ma - mb) / se
    return StatTest(float(t), df, _t_two_sided(t, df), cohens_d=float(d))


def link_stability(
    sig_flags: np.ndarray,
    possible_links: int,
    resamples: int = 1000,
    seed: int | Sequence[int] = 0,
) -> np.ndarray:
    """Repeated-significance p-value per link.

    `sig_flags` is a (pairs x windows) boolean matrix. For each window the
    null draws the same number of significant links uniformly from the
    `possible_links` candidates, so a fixed link is included with probability
    n_sig(t) / possible_links (the exact marginal of a uniform subset). A
    link's p-value is the fraction of null repetition counts that reach its
    observed repetition count.
    """
    flags = np.asarray(sig_flags, dtype=bool)
    if flags.ndim != 2:
        raise ValueError("sig_flags must be a pairs x windows matrix")
    n_pairs, n_windows = flags.shape
    if n_windows < 2:
        raise DegenerateStatisticsError(f"need at least 2 windows, got {n_windows}")
    if resamples < 100:
        raise ConfigError(f"resamples must be >= 100 for stable p estimates, got {resamples}")
    drawn = flags.sum(axis=0)
    if possible_links < int(drawn.max(initial=0)):
        raise ValueError("possible_links is smaller than a window's significant-link count")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(
        tuple(seed) if isinstance(seed, (tuple, list)) else (int(seed),)
    )))
    rates = drawn / possible_links
    null_reps = np.zeros((resamples, n_pairs), dtype=np.int32)
    for t in range(n_windows):
        null_reps += rng.random((resamples, n_pairs)) < rates[t]
    observed = flags.sum(axis=1)
    return (null_reps >= observed[None, :]).mean(axis=0)


@dataclass(frozen=True)
class Snapshot:
    """One window's emotion network plus its significant concept links."""

    snapshot_id: str
    emotion_raw: np.ndarray  # (21,) in LINK_KEYS order
    emotion_rescaled: np.ndarray  # (21,)
    concept_links: frozenset

    @staticmethod
    def from_networks(enet: EmotionNetwork, concept_links: frozenset) -> "Snapshot":
        if enet.rescaled is None:
            raise ValueError("snapshot requires a rescaled emotion network")
        return Snapshot(enet.snapshot_id, enet.raw, enet.rescaled, concept_links)


def _scope_values(values: np.ndarray, scope: str) -> np.ndarray:
    if scope == "all21":
        return values
    if scope == "inter15":
        return values[list(INTER_INDICES)]
    raise ConfigError(f"unknown scope {scope!r}; expected one of {SCOPES}")


@dataclass
class ComparisonReport:
    """Pairwise snapshot (or dataset) comparison matrices.

    For the across mode each cell averages the comparisons between the two
    datasets' snapshots; self cells average the dataset's distinct within
    pairs (a snapshot is never compared with itself).
    """

    mode: str  # "within-dataset" | "across-datasets"
    scope: str
    labels: tuple[str, ...]
    rho: np.ndarray
    p_raw: np.ndarray
    p_adjusted: np.ndarray
    jaccard: np.ndarray
    comparisons: int


def compare_within(snapshots: Sequence[Snapshot], scope: str = "all21") -> ComparisonReport:
    """Score every distinct snapshot pair with Spearman rho (on raw emotion
    strengths; rescaling is a positive scaling so ranks are identical) and
    Jaccard overlap of significant concept links. P-values are FDR-adjusted
    over the n(n-1)/2 comparison family."""
    n = len(snapshots)
    if n < 2:
        raise DegenerateStatisticsError(f"need at least 2 snapshots, got {n}")
    rho = np.eye(n)
    p_raw = np.zeros((n, n))
    jac = np.eye(n)
    pair_idx = list(itertools.combinations(range(n), 2))
    p_family = []
    for i, j in pair_idx:
        r, p = spearman(
            _scope_values(snapshots[i].emotion_raw, scope),
            _scope_values(snapshots[j].emotion_raw, scope),
        )
        rho[i, j] = rho[j, i] = r
        p_raw[i, j] = p_raw[j, i] = p
        p_family.append(p)
        jv = jaccard(snapshots[i].concept_links, snapshots[j].concept_links)
        jac[i, j] = jac[j, i] = jv
    adjusted = fdr_adjust(p_family)
    p_adj = np.zeros((n, n))
    for (i, j), q in zip(pair_idx, adjusted):
        p_adj[i, j] = p_adj[j, i] = q
    return ComparisonReport(
        mode="within-dataset",
        scope=scope,
        labels=tuple(s.snapshot_id for s in snapshots),
        rho=rho,
        p_raw=p_raw,
        p_adjusted=p_adj,
        jaccard=jac,
        comparisons=len(pair_idx),
    )


def compare_across(
    datasets: Sequence[Sequence[Snapshot]],
    labels: Sequence[str],
    scope: str = "all21",
) -> ComparisonReport:
    """Average pairwise snapshot comparisons between datasets.

    Cell (i, j), i != j, averages all n_i * n_j cross pairs; cell (i, i)
    averages the dataset's distinct within pairs. The whole report's
    comparisons form one FDR family; each cell then reports the mean raw and
    mean adjusted p. Averaging adjusted p-values mirrors how such heatmaps
    are commonly annotated but is statistically unconventional; both columns
    are exported so either can be read.
    """
    if len(datasets) < 2:
        raise DegenerateStatisticsError("need at least 2 datasets")
    if len(labels) != len(datasets):
        raise ValueError("labels must match datasets")
    for label, snaps in zip(labels, datasets):
        if len(snaps) < 1:
            raise DegenerateStatisticsError(f"dataset {label!r} has no snapshots")
    m = len(datasets)
    cells: dict[tuple[int, int], list[int]] = {}
    rhos: list[float] = []
    ps: list[float] = []
    jacs: list[float] = []
    for i in range(m):
        for j in range(i, m):
            if i == j:
                pairs = list(itertools.combinations(datasets[i], 2))
            else:
                pairs = [(a, b) for a in datasets[i] for b in datasets[j]]
            idx = []
            for a, b in pairs:
                r, p = spearman(
                    _scope_values(a.emotion_raw, scope), _scope_values(b.emotion_raw, scope)
                )
                idx.append(len(rhos))
                rhos.append(r)
                ps.append(p)
                jacs.append(jaccard(a.concept_links, b.concept_links))
            cells[(i, j)] = idx
    adjusted = fdr_adjust(ps)
    rho = np.full((m, m), np.nan)
    p_raw = np.full((m, m), np.nan)
    p_adj = np.full((m, m), np.nan)
    jac = np.full((m, m), np.nan)
    for (i, j), idx in cells.items():
        if not idx:  # a single-snapshot dataset has no within pairs
            if i == j:
                rho[i, i] = 1.0
                p_raw[i, i] = 0.0
                p_adj[i, i] = 0.0
                jac[i, i] = 1.0
            continue
        rho[i, j] = rho[j, i] = float(np.mean([rhos[k] for k in idx]))
        p_raw[i, j] = p_raw[j, i] = float(np.mean([ps[k] for k in idx]))
        p_adj[i, j] = p_adj[j, i] = float(np.mean([adjusted[k] for k in idx]))
        jac[i, j] = jac[j, i] = float(np.mean([jacs[k] for k in idx]))
    return ComparisonReport(
        mode="across-datasets",
        scope=scope,
        labels=tuple(labels),
        rho=rho,
        p_raw=p_raw,
        p_adjusted=p_adj,
        jaccard=jac,
        comparisons=len(rhos),
    )


@dataclass(frozen=True)
class DeltaRow:
    """One emotion link's strength comparison between two datasets."""

    dim_i: EmotionDim
    dim_j: EmotionDim
    test: StatTest
    direction: str  # "a" (stronger in first dataset), "b", or "none"


def strength_deltas(
    ds_a: Sequence[Snapshot], ds_b: Sequence[Snapshot]
) -> tuple[DeltaRow, ...]:
    """Pooled two-sample t-test per emotion link between the per-window
    rescaled strengths of two datasets (positive t = stronger in `ds_a`).
    P-values are FDR-adjusted over the 21-link family."""
    if len(ds_a) < 2 or len(ds_b) < 2:
        raise DegenerateStatisticsError("each dataset needs at least 2 snapshots")
    tests = []
    for n in range(21):
        a = [float(s.emotion_rescaled[n]) for s in ds_a]
        b = [float(s.emotion_rescaled[n]) for s in ds_b]
        tests.append(ttest_two_sample(a, b, pooled=True))
    adjusted = fdr_adjust([t.p_raw for t in tests])
    rows = []
    for (dim_i, dim_j), test, q in zip(LINK_KEYS, tests, adjusted):
        direction = "none" if test.statistic == 0.0 else ("a" if test.statistic > 0 else "b")
        rows.append(
            DeltaRow(
                dim_i,
                dim_j,
                StatTest(test.statistic, test.df, test.p_raw, float(q), test.cohens_d),
                direction,
            )
        )
    return tuple(rows)
