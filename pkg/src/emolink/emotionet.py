"""Aggregate significant concept links into a 6-node emotion network.

Each snapshot carries 21 links (6 intra + 15 inter). The raw strength of a
link is the number of significant concept links between the two dimensions
divided by the number of possible word pairs between them; rescaled strength
divides by the snapshot's median raw strength so snapshots of different
volume can be compared.
"""

from __future__ import annotations

import logging

import numpy as np

from .conceptnet import ConceptNetwork
from .errors import DegenerateStatisticsError
from .lexicon import DIMS, EmotionDim, Lexicon

log = logging.getLogger(__name__)

LinkKey = tuple[EmotionDim, EmotionDim]

# Canonical order of the 21 emotion link keys: (i, j) with i <= j by
# dimension index, sorted by (i, j).
LINK_KEYS: tuple[LinkKey, ...] = tuple(
    (DIMS[i], DIMS[j]) for i in range(len(DIMS)) for j in range(i, len(DIMS))
)
_KEY_INDEX = {key: n for n, key in enumerate(LINK_KEYS)}
INTRA_INDICES: tuple[int, ...] = tuple(n for n, (a, b) in enumerate(LINK_KEYS) if a is b)
INTER_INDICES: tuple[int, ...] = tuple(n for n, (a, b) in enumerate(LINK_KEYS) if a is not b)


def link_key(a: EmotionDim, b: EmotionDim) -> LinkKey:
    return (a, b) if a.index <= b.index else (b, a)


def key_index(a: EmotionDim, b: EmotionDim) -> int:
    return _KEY_INDEX[link_key(a, b)]


def possible_pairs(lex: Lexicon, key: LinkKey) -> int:
    """Number of distinct word pairs between the two dimensions:
    n_i * n_j for an inter link, n_i * (n_i - 1) / 2 for an intra link."""
    a, b = key
    if a is b:
        n = lex.counts[a]
        return n * (n - 1) // 2
    return lex.counts[a] * lex.counts[b]


class EmotionNetwork:
    """21-link strength vectors for one snapshot (all arrays in LINK_KEYS order)."""

    def __init__(
        self,
        snapshot_id: str,
        sig_counts: np.ndarray,
        possible: np.ndarray,
        rescaled: np.ndarray | None = None,
    ):
        self.snapshot_id = snapshot_id
        self.sig_counts = np.asarray(sig_counts, dtype=np.int64)
        self.possible = np.asarray(possible, dtype=np.int64)
        if self.sig_counts.shape != (21,) or self.possible.shape != (21,):
            raise ValueError("emotion network vectors must have exactly 21 entries")
        # possible = 0 (a dimension with fewer than the needed words) gives
        # raw strength 0, not a division by zero.
        self.raw = np.where(self.possible > 0, self.sig_counts / np.maximum(self.possible, 1), 0.0)
        self.rescaled = None if rescaled is None else np.asarray(rescaled, dtype=np.float64)


def aggregate(net: ConceptNetwork, lex: Lexicon) -> EmotionNetwork:
    """Count significant concept links per emotion link key (raw part only).

    Every concept link maps to exactly one of the 21 keys, so the counts sum
    to the number of significant links in the network.
    """
    counts = np.zeros(21, dtype=np.int64)
    for record in net.records:
        if not record.significant:
            continue
        w1, w2 = record.pair
        counts[key_index(lex.dimension_of(w1), lex.dimension_of(w2))] += 1
    possible = np.array([possible_pairs(lex, key) for key in LINK_KEYS], dtype=np.int64)
    return EmotionNetwork(net.snapshot_id, counts, possible)


def rescale(enet: EmotionNetwork) -> EmotionNetwork:
    """Divide raw strengths by the snapshot median over all 21 values.

    When the median is positive the rescaled median is exactly 1. A zero
    median with some positive entries falls back to the smallest positive raw
    value (with a warning); an all-zero snapshot has no rescale and raises
    :class:`DegenerateStatisticsError`.
    """
    med = float(np.median(enet.raw))
    if med > 0.0:
        denom = med
    else:
        positive = enet.raw[enet.raw > 0.0]
        if positive.size == 0:
            raise DegenerateStatisticsError(
                f"degenerate snapshot {enet.snapshot_id!r}: all emotion strengths are zero"
            )
        denom = float(positive.min())
        log.warning(
            "snapshot %s: zero median raw strength; rescaling by the smallest "
            "positive value %g instead",
            enet.snapshot_id,
            denom,
        )
    return EmotionNetwork(enet.snapshot_id, enet.sig_counts, enet.possible, enet.raw / denom)
