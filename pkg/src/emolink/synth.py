"""Seed-reproducible synthetic corpora with planted co-occurrence signal.

Each word appears in each post independently at its baseline probability;
a planted pair additionally forces both of its words into a post at the
planted rate, creating excess joint occurrence over the independence
baseline. Every planted pair draws from its own random stream, so changing
one pair's rate leaves all other draws untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Mapping, Sequence, TextIO

import numpy as np

from .corpus import format_instant, parse_instant
from .errors import ConfigError
from .lexicon import DIMS, EmotionDim, Lexicon

_GEN_CHUNK = 100_000


@dataclass(frozen=True)
class PlantedPair:
    word_a: str
    word_b: str
    rate: float


@dataclass(frozen=True)
class SynthSpec:
    posts: int
    words_per_dim: Mapping[EmotionDim, int]
    baseline: Mapping[EmotionDim, float]
    planted: tuple[PlantedPair, ...] = ()
    seed: int = 0
    start: datetime = datetime(2024, 1, 1, tzinfo=timezone.utc)
    spacing_seconds: int = 1

    def __post_init__(self) -> None:
        if self.posts < 1:
            raise ConfigError("posts must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.spacing_seconds < 1:
            raise ConfigError("spacing_seconds must be positive")
        vocab = set(self.words())
        for dim in DIMS:
            if self.words_per_dim.get(dim, 0) < 0:
                raise ConfigError(f"negative word count for {dim.value}")
            q = self.baseline.get(dim, 0.0)
            if not (0.0 <= q <= 1.0):
                raise ConfigError(f"baseline probability for {dim.value} must be in [0, 1]")
        for pair in self.planted:
            if not (0.0 <= pair.rate <= 1.0):
                raise ConfigError(f"planted rate for ({pair.word_a}, {pair.word_b}) must be in [0, 1]")
            for w in (pair.word_a, pair.word_b):
                if w not in vocab:
                    raise ConfigError(f"planted pair references undeclared word {w!r}")
            if pair.word_a == pair.word_b:
                raise ConfigError("planted pair must use two distinct words")

    def words(self) -> tuple[str, ...]:
        out = []
        for dim in DIMS:
            for i in range(self.words_per_dim.get(dim, 0)):
                out.append(f"{dim.value.lower()}{i:02d}")
        return tuple(out)

    def lexicon(self) -> Lexicon:
        entries = {}
        for dim in DIMS:
            for i in range(self.words_per_dim.get(dim, 0)):
                entries[f"{dim.value.lower()}{i:02d}"] = dim
        return Lexicon(entries)


def load_synth_spec(path: str | Path, seed_override: int | None = None) -> SynthSpec:
    """Parse the JSON synth spec. Fields: posts, words_per_dim (int or map by
    dimension), baseline (float or map), planted [{word_a, word_b, rate}],
    seed, start (ISO-8601), spacing_seconds."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read synth spec {path}: {exc}") from None
    return synth_spec_from_dict(raw, seed_override)


def synth_spec_from_dict(raw: dict, seed_override: int | None = None) -> SynthSpec:
    def per_dim(value, caster):
        if isinstance(value, dict):
            return {d: caster(value.get(d.value, value.get(d.value.lower(), 0))) for d in DIMS}
        return {d: caster(value) for d in DIMS}

    try:
        planted = tuple(
            PlantedPair(str(p["word_a"]), str(p["word_b"]), float(p["rate"]))
            for p in raw.get("planted", [])
        )
        spec = SynthSpec(
            posts=int(raw["posts"]),
            words_per_dim=per_dim(raw.get("words_per_dim", 10), int),
            baseline=per_dim(raw.get("baseline", 0.02), float),
            planted=planted,
            seed=int(raw["seed"]) if seed_override is None else int(seed_override),
            start=parse_instant(raw.get("start", "2024-01-01T00:00:00Z")),
            spacing_seconds=int(raw.get("spacing_seconds", 1)),
        )
    except KeyError as exc:
        raise ConfigError(f"synth spec missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"malformed synth spec: {exc}") from None
    return spec


def _presence_chunk(spec: SynthSpec, words: tuple[str, ...], lo: int, hi: int) -> np.ndarray:
    """Boolean (posts, words) presence matrix for post indices [lo, hi)."""
    n = hi - lo
    base_rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence((spec.seed, 0, lo)))
    )
    probs = np.array(
        [spec.baseline[d] for d in DIMS for _ in range(spec.words_per_dim.get(d, 0))]
    )
    present = base_rng.random((n, len(words))) < probs[None, :]
    index = {w: i for i, w in enumerate(words)}
    for k, pair in enumerate(spec.planted):
        pair_rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence((spec.seed, 1, k, lo)))
        )
        hit = pair_rng.random(n) < pair.rate
        present[hit, index[pair.word_a]] = True
        present[hit, index[pair.word_b]] = True
    return present


def generate_posts(spec: SynthSpec, fh: TextIO) -> int:
    """Write the corpus in ingestion format (JSON lines); returns post count.

    Timestamps are evenly spaced from `spec.start`. Text is the space-joined
    list of present words, so the token matcher recovers them exactly; posts
    with no words are still emitted.
    """
    words = spec.words()
    written = 0
    for lo in range(0, spec.posts, _GEN_CHUNK):
        hi = min(lo + _GEN_CHUNK, spec.posts)
        present = _presence_chunk(spec, words, lo, hi)
        for i in range(hi - lo):
            idx = lo + i
            text = " ".join(words[j] for j in np.flatnonzero(present[i]))
            ts = spec.start + timedelta(seconds=idx * spec.spacing_seconds)
            rec = {"id": f"p{idx:08d}", "created_at": format_instant(ts), "text": text}
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
            written += 1
    return written


def write_corpus(spec: SynthSpec, posts_path: str | Path, lexicon_path: str | Path | None = None) -> int:
    """Write the post file and (optionally) the matching lexicon file."""
    with open(posts_path, "w", encoding="utf-8") as fh:
        count = generate_posts(spec, fh)
    if lexicon_path is not None:
        with open(lexicon_path, "w", encoding="utf-8") as fh:
            spec.lexicon().serialize(fh)
    return count
