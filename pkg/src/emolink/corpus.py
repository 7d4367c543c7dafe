"""Post ingestion, keyword filtering and time-window partitioning.

All timestamps are converted to UTC at ingest; window specs are declared in
UTC. Windows are half-open intervals [start, end), start-inclusive.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .errors import ConfigError, DataError
from .lexicon import canonicalize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Post:
    """One timestamped text item; the sampling unit for co-occurrence."""

    id: str
    timestamp: datetime  # tz-aware UTC, seconds precision
    text: str


def parse_instant(value: str, default_offset: timezone | None = None) -> datetime:
    """Parse an ISO-8601 instant to tz-aware UTC, truncated to seconds.

    Naive timestamps are interpreted in `default_offset` (UTC if not given).
    """
    if value.endswith("Z") or value.endswith("z"):
        value = value[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(value)
    except ValueError:
        raise DataError(f"unparseable timestamp {value!r}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=default_offset or timezone.utc)
    return ts.astimezone(timezone.utc).replace(microsecond=0)


def format_instant(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class Window:
    """Half-open [start, end) interval with a deterministic id."""

    start: datetime
    end: datetime

    @property
    def id(self) -> str:
        return self.start.strftime("%Y%m%dT%H%M%S")

    def __contains__(self, ts: datetime) -> bool:
        return self.start <= ts < self.end


@dataclass(frozen=True)
class WindowSpec:
    """An ordered, non-overlapping partition of a dataset period.

    Built through the scheme constructors below. For every scheme except
    `explicit` the windows are contiguous and cover the period exactly; the
    `explicit` scheme allows gaps between intervals (the covered period is
    their union) so that disjoint collection months can form one dataset.
    Posts falling in a gap are dropped like any out-of-period post.
    """

    scheme: str
    windows: tuple[Window, ...]

    def __post_init__(self) -> None:
        if not self.windows:
            raise ConfigError("window spec has no windows")
        prev_end: datetime | None = None
        for w in self.windows:
            if w.start >= w.end:
                raise ConfigError(f"window {w.id} is empty or inverted")
            if prev_end is not None and w.start < prev_end:
                raise ConfigError(f"windows overlap or are out of order at {w.id}")
            if prev_end is not None and w.start > prev_end and self.scheme != "explicit":
                raise ConfigError(f"gap before window {w.id} in scheme {self.scheme!r}")
            prev_end = w.end

    @property
    def period(self) -> tuple[datetime, datetime]:
        return self.windows[0].start, self.windows[-1].end

    @staticmethod
    def daily(start: datetime, end: datetime) -> "WindowSpec":
        return WindowSpec("daily", _clip(_day_bounds(start, end), start, end))

    @staticmethod
    def daily_split(start: datetime, end: datetime, split: datetime) -> "WindowSpec":
        """Daily windows with the day containing `split` cut in two
        (before / after the split instant)."""
        if not (start <= split < end):
            raise ConfigError("split instant lies outside the period")
        bounds = _day_bounds(start, end)
        if split in bounds or split == start:
            raise ConfigError("split instant coincides with a window boundary")
        bounds = sorted(bounds + [split])
        return WindowSpec("daily-split", _clip(bounds, start, end))

    @staticmethod
    def quarterly(start: datetime, end: datetime, anchor_month: int = 1) -> "WindowSpec":
        """Calendar quarters anchored at `anchor_month` (1 = Jan/Apr/Jul/Oct)."""
        if not (1 <= anchor_month <= 12):
            raise ConfigError("anchor month must be 1..12")
        bounds = []
        y, m = start.year, start.month
        m = m - ((m - anchor_month) % 3)  # quarter boundary at or before start
        if m < 1:
            m += 12
            y -= 1
        cursor = datetime(y, m, 1, tzinfo=timezone.utc)
        while cursor < end:
            bounds.append(cursor)
            y, m = cursor.year, cursor.month + 3
            if m > 12:
                m -= 12
                y += 1
            cursor = datetime(y, m, 1, tzinfo=timezone.utc)
        return WindowSpec("quarterly", _clip(bounds, start, end))

    @staticmethod
    def weekly(start: datetime, end: datetime) -> "WindowSpec":
        """Consecutive 7-day blocks counted from the period start."""
        bounds = []
        cursor = start
        while cursor < end:
            bounds.append(cursor)
            cursor = cursor + timedelta(days=7)
        return WindowSpec("weekly", _clip(bounds, start, end))

    @staticmethod
    def explicit(intervals: Sequence[tuple[datetime, datetime]]) -> "WindowSpec":
        return WindowSpec("explicit", tuple(Window(s, e) for s, e in intervals))


def _day_bounds(start: datetime, end: datetime) -> list[datetime]:
    bounds = []
    cursor = start.astimezone(timezone.utc).replace(hour=0, minute=0, second=0, microsecond=0)
    while cursor < end:
        bounds.append(cursor)
        cursor = cursor + timedelta(days=1)
    return bounds


def _clip(bounds: Sequence[datetime], start: datetime, end: datetime) -> tuple[Window, ...]:
    edges = sorted({max(b, start) for b in bounds if b < end} | {start, end})
    return tuple(Window(a, b) for a, b in zip(edges[:-1], edges[1:]))


@dataclass
class IngestResult:
    """Parsed posts plus a report of what was discarded on the way."""

    posts: list[Post]
    malformed: int = 0
    malformed_lines: list[tuple[int, str]] = field(default_factory=list)
    duplicates: int = 0


def ingest(
    source: str | Path | TextIO | Iterable[str],
    strict: bool = False,
    default_offset: timezone | None = None,
) -> IngestResult:
    """Parse line-delimited JSON records with fields `id`, `created_at`, `text`.

    Malformed lines are counted and reported, not fatal, unless `strict` is
    set, in which case the first malformed line aborts with its line number.
    Duplicate post ids keep the last occurrence, with a warning. Text is NFKC
    normalized on the way in.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return ingest(fh, strict=strict, default_offset=default_offset)

    result = IngestResult(posts=[])
    seen: dict[str, int] = {}
    for lineno, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            post = _parse_record(line, default_offset)
        except DataError as exc:
            if strict:
                raise DataError(f"line {lineno}: {exc}") from None
            result.malformed += 1
            if len(result.malformed_lines) < 20:
                result.malformed_lines.append((lineno, str(exc)))
            continue
        if post.id in seen:
            result.duplicates += 1
            result.posts[seen[post.id]] = post  # last occurrence wins
        else:
            seen[post.id] = len(result.posts)
            result.posts.append(post)
    if result.malformed:
        log.warning("ingest: %d malformed line(s) skipped", result.malformed)
    if result.duplicates:
        log.warning("ingest: %d duplicate post id(s); last occurrence kept", result.duplicates)
    return result


def _parse_record(line: str, default_offset: timezone | None) -> Post:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON ({exc.msg})") from None
    if not isinstance(rec, dict):
        raise DataError("record is not an object")
    for key in ("id", "created_at", "text"):
        if key not in rec:
            raise DataError(f"missing field {key!r}")
    post_id = str(rec["id"])
    if not post_id:
        raise DataError("empty post id")
    if "\t" in post_id or "\n" in post_id:
        raise DataError("post id contains a tab or newline")
    if not isinstance(rec["text"], str):
        raise DataError("field 'text' is not a string")
    ts = parse_instant(str(rec["created_at"]), default_offset)
    return Post(id=post_id, timestamp=ts, text=canonicalize(rec["text"]))


def filter_keywords(
    posts: Iterable[Post], include: Sequence[str], exclude: Sequence[str]
) -> list[Post]:
    """Keep a post iff (no include list, or it contains at least one include
    keyword) and it contains no exclude keyword. Matching is raw substring on
    NFKC-normalized text."""
    inc = [canonicalize(k) for k in include]
    exc = [canonicalize(k) for k in exclude]
    kept = []
    for post in posts:
        text = post.text  # already canonical from ingest
        if inc and not any(k in text for k in inc):
            continue
        if any(k in text for k in exc):
            continue
        kept.append(post)
    return kept


@dataclass(frozen=True)
class WindowedCorpus:
    """Posts partitioned into the windows of a spec; empty windows kept."""

    spec: WindowSpec
    windows: tuple[tuple[Window, tuple[Post, ...]], ...]
    dropped: int

    def __iter__(self):
        return iter(self.windows)


def assign_windows(posts: Iterable[Post], spec: WindowSpec) -> WindowedCorpus:
    """Assign each post to the window containing its timestamp.

    Posts outside every window are dropped and counted. Windows are emitted
    even when empty. Per-window post order is (timestamp, id), so the
    partition does not depend on input order.
    """
    buckets: list[list[Post]] = [[] for _ in spec.windows]
    starts = [w.start for w in spec.windows]
    dropped = 0
    for post in posts:
        idx = _bisect_right(starts, post.timestamp) - 1
        if idx >= 0 and post.timestamp in spec.windows[idx]:
            buckets[idx].append(post)
        else:
            dropped += 1
    windows = tuple(
        (w, tuple(sorted(bucket, key=lambda p: (p.timestamp, p.id))))
        for w, bucket in zip(spec.windows, buckets)
    )
    return WindowedCorpus(spec=spec, windows=windows, dropped=dropped)


def _bisect_right(values: list[datetime], ts: datetime) -> int:
    lo, hi = 0, len(values)
    while lo < hi:
        mid = (lo + hi) // 2
        if ts < values[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo
