"""Six-dimension emotion lexicon: loading, validation, expansion and matching.

The lexicon maps each word to exactly one of six mood dimensions. All words
are stored in one canonical unicode normalization (NFKC), and matching
operates on text normalized the same way.
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import DataError

log = logging.getLogger(__name__)


class EmotionDim(Enum):
    """The six mood dimensions, in canonical order.

    The order is load-bearing: emotion link keys, export rows and rank
    vectors all index dimensions by this order.
    """

    TENSION = "Tension"
    DEPRESSION = "Depression"
    ANGER = "Anger"
    VIGOR = "Vigor"
    FATIGUE = "Fatigue"
    CONFUSION = "Confusion"

    @property
    def index(self) -> int:
        return _DIM_INDEX[self]

    def __lt__(self, other: "EmotionDim") -> bool:
        return self.index < other.index


DIMS: tuple[EmotionDim, ...] = tuple(EmotionDim)
_DIM_INDEX = {d: i for i, d in enumerate(DIMS)}
_DIM_BY_LABEL = {d.value.lower(): d for d in DIMS}


def parse_dimension(label: str) -> EmotionDim:
    """Map a dimension label (case-insensitive) to its enum member."""
    dim = _DIM_BY_LABEL.get(label.strip().lower())
    if dim is None:
        raise DataError(
            f"unknown dimension label {label!r}; expected one of "
            + ", ".join(d.value for d in DIMS)
        )
    return dim


def canonicalize(text: str) -> str:
    """Apply the canonical unicode normalization (NFKC) used everywhere."""
    return unicodedata.normalize("NFKC", text)


class Lexicon:
    """Immutable word -> dimension map with per-dimension counts.

    Words are held in canonical order (dimension order, then word), which
    fixes the output order of :func:`match_concepts` independently of the
    order entries were supplied in.
    """

    def __init__(self, entries: dict[str, EmotionDim]):
        for word in entries:
            if not word:
                raise DataError("lexicon contains an empty word")
            if any(ch.isspace() for ch in word):
                # occurrence artifacts join a post's words with spaces
                raise DataError(f"lexicon word {word!r} contains whitespace")
        self._entries = dict(
            sorted(entries.items(), key=lambda kv: (kv[1].index, kv[0]))
        )
        self._rank = {w: i for i, w in enumerate(self._entries)}
        self.counts: dict[EmotionDim, int] = {d: 0 for d in DIMS}
        for dim in self._entries.values():
            self.counts[dim] += 1
        self._lengths = sorted({len(w) for w in self._entries}, reverse=True)
        self._first_chars = frozenset(w[0] for w in self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, word: str) -> bool:
        return word in self._entries

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def dimension_of(self, word: str) -> EmotionDim:
        try:
            return self._entries[word]
        except KeyError:
            raise DataError(f"word {word!r} is not in the lexicon") from None

    def rank(self, word: str) -> int:
        """Position of `word` in canonical lexicon order."""
        return self._rank[word]

    def sort_canonical(self, words: Iterable[str]) -> tuple[str, ...]:
        return tuple(sorted(words, key=self._rank.__getitem__))

    def serialize(self, fh: TextIO) -> None:
        """Write the tab-delimited lexicon format (canonical row order)."""
        for word, dim in self._entries.items():
            fh.write(f"{word}\t{dim.value}\n")


def load_lexicon(source: str | Path | TextIO | Iterable[str]) -> Lexicon:
    """Load and validate a lexicon from tab-delimited `word<TAB>dimension` rows.

    Lines starting with `#` and blank lines are skipped. Words are NFKC
    normalized. Raises :class:`DataError` for empty words, unknown dimension
    labels, and words listed under more than one dimension (the message names
    the word and both dimensions).
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return load_lexicon(fh)

    entries: dict[str, EmotionDim] = {}
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"lexicon line {lineno}: expected `word<TAB>dimension`, got {line!r}")
        word, label = canonicalize(parts[0].strip()), parts[1]
        if not word:
            raise DataError(f"lexicon line {lineno}: empty word")
        dim = parse_dimension(label)
        if word in entries and entries[word] is not dim:
            raise DataError(
                f"duplicate word {word!r} listed under both "
                f"{entries[word].value} and {dim.value}"
            )
        entries[word] = dim
    return Lexicon(entries)


class EmbeddingTable:
    """Word -> dense vector table with a fixed dimensionality."""

    def __init__(self, words: Iterable[str], matrix: np.ndarray):
        self.words = tuple(words)
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != len(self.words):
            raise DataError("embedding matrix shape does not match word list")
        if matrix.shape[1] < 1:
            raise DataError("embedding dimensionality must be positive")
        if not np.all(np.isfinite(matrix)):
            raise DataError("embedding table contains NaN or infinite components")
        self.matrix = matrix
        self._index = {w: i for i, w in enumerate(self.words)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self._index

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def vector(self, word: str) -> np.ndarray:
        return self.matrix[self._index[word]]


def load_embeddings(source: str | Path | TextIO) -> EmbeddingTable:
    """Parse the text embedding format: optional `count dim` header, then
    `word v1 v2 ... vd` rows (space separated)."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return load_embeddings(fh)

    words: list[str] = []
    rows: list[list[float]] = []
    dim: int | None = None
    for lineno, line in enumerate(source, start=1):
        parts = line.split()
        if not parts:
            continue
        if lineno == 1 and len(parts) == 2 and all(_is_int(p) for p in parts):
            continue  # `count dim` header
        word = canonicalize(parts[0])
        try:
            vec = [float(v) for v in parts[1:]]
        except ValueError:
            raise DataError(f"embedding line {lineno}: non-numeric component") from None
        if not vec:
            raise DataError(f"embedding line {lineno}: missing vector")
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise DataError(
                f"embedding line {lineno}: expected {dim} components, got {len(vec)}"
            )
        words.append(word)
        rows.append(vec)
    if not words:
        raise DataError("embedding table is empty")
    return EmbeddingTable(words, np.array(rows))


def _is_int(token: str) -> bool:
    try:
        int(token)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class Candidate:
    """One expansion proposal awaiting human review."""

    word: str
    source: str
    dimension: EmotionDim
    cosine: float


def expand_candidates(
    seed: Lexicon, emb: EmbeddingTable, threshold: float = 0.7
) -> list[Candidate]:
    """Propose new lexicon entries by embedding-space similarity to seed words.

    Every returned candidate has cosine(candidate, source) strictly greater
    than `threshold`; words already in the seed lexicon are excluded, and each
    candidate appears once (attributed to its highest-cosine source). The list
    is sorted by descending cosine. Seed words missing from the embedding
    table are skipped and reported via a log warning. Human screening of the
    output happens outside this function.
    """
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if len(emb) == 0:
        raise DataError("embedding table is empty")

    norms = np.linalg.norm(emb.matrix, axis=1)
    nonzero = norms > 0.0
    unit = np.zeros_like(emb.matrix)
    unit[nonzero] = emb.matrix[nonzero] / norms[nonzero, None]

    missing = [w for w in seed.words if w not in emb]
    if missing:
        log.warning(
            "%d seed word(s) absent from the embedding table (skipped): %s",
            len(missing),
            ", ".join(missing[:10]) + ("..." if len(missing) > 10 else ""),
        )

    best: dict[str, Candidate] = {}
    seed_present = [w for w in seed.words if w in emb]
    for source in seed_present:
        cos = unit @ unit[emb._index[source]]
        for j in np.flatnonzero(cos > threshold):
            word = emb.words[j]
            if word in seed:
                continue
            c = float(cos[j])
            prev = best.get(word)
            if prev is None or c > prev.cosine:
                best[word] = Candidate(word, source, seed.dimension_of(source), c)
    return sorted(best.values(), key=lambda c: (-c.cosine, c.word))


def match_concepts(text: str, lex: Lexicon, mode: str = "substring") -> tuple[str, ...]:
    """Detect lexicon words in `text`, deduplicated, in canonical lexicon order.

    `mode` is `substring` (longest-match scan, default; suited to scripts
    without whitespace) or `token` (whitespace tokens, exact match). A word is
    reported at most once regardless of how often it appears. `text` must
    already be in the lexicon's canonical normalization (see
    :func:`canonicalize`).
    """
    if mode == "token":
        found = {tok for tok in text.split() if tok in lex}
    elif mode == "substring":
        found = _scan_longest(text, lex)
    else:
        raise ValueError(f"unknown matcher mode {mode!r} (expected 'substring' or 'token')")
    return lex.sort_canonical(found)


def _scan_longest(text: str, lex: Lexicon) -> set[str]:
    # Left-to-right scan; at each position keep only the longest lexicon word
    # starting there, then continue past it (nested shorter variants are not
    # double-counted).
    found: set[str] = set()
    first = lex._first_chars
    lengths = lex._lengths
    i, n = 0, len(text)
    while i < n:
        if text[i] not in first:
            i += 1
            continue
        for length in lengths:
            if i + length <= n and text[i : i + length] in lex:
                found.add(text[i : i + length])
                i += length
                break
        else:
            i += 1
    return found
