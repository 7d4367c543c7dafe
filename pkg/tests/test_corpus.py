import io
import random
from datetime import timedelta, timezone

import pytest

from emolink.corpus import (
    Post,
    Window,
    WindowSpec,
    assign_windows,
    filter_keywords,
    format_instant,
    ingest,
    parse_instant,
)
from emolink.errors import ConfigError, DataError


def utc(s):
    return parse_instant(s)


def make_post(pid, ts, text="hello"):
    return Post(id=pid, timestamp=utc(ts), text=text)


class TestIngest:
    def test_three_valid_lines(self):
        lines = [
            '{"id":"a","created_at":"2020-01-01T00:00:00Z","text":"one"}',
            '{"id":"b","created_at":"2020-01-01T00:00:01Z","text":"two"}',
            '{"id":"c","created_at":"2020-01-01T00:00:02Z","text":"three"}',
        ]
        result = ingest(lines)
        assert len(result.posts) == 3 and result.malformed == 0

    def test_missing_text_counted_lenient(self):
        lines = [
            '{"id":"a","created_at":"2020-01-01T00:00:00Z","text":"one"}',
            '{"id":"b","created_at":"2020-01-01T00:00:01Z"}',
            '{"id":"c","created_at":"2020-01-01T00:00:02Z","text":"three"}',
        ]
        result = ingest(lines)
        assert len(result.posts) == 2 and result.malformed == 1
        assert result.malformed_lines[0][0] == 2

    def test_strict_aborts_with_line_number(self):
        lines = ['{"id":"a","created_at":"2020-01-01T00:00:00Z","text":"x"}', "not json"]
        with pytest.raises(DataError, match="line 2"):
            ingest(lines, strict=True)

    def test_empty_stream(self):
        assert ingest([]).posts == []

    def test_duplicate_id_last_wins(self, caplog):
        lines = [
            '{"id":"a","created_at":"2020-01-01T00:00:00Z","text":"first"}',
            '{"id":"a","created_at":"2020-01-01T00:00:05Z","text":"second"}',
        ]
        with caplog.at_level("WARNING"):
            result = ingest(lines)
        assert len(result.posts) == 1
        assert result.posts[0].text == "second"
        assert result.duplicates == 1
        assert "duplicate" in caplog.text

    def test_timezone_conversion(self):
        line = '{"id":"a","created_at":"2020-06-05T10:00:00+09:00","text":"x"}'
        (post,) = ingest([line]).posts
        assert format_instant(post.timestamp) == "2020-06-05T01:00:00Z"

    def test_naive_timestamp_uses_default_offset(self):
        line = '{"id":"a","created_at":"2020-06-05T09:00:00","text":"x"}'
        jst = timezone(timedelta(hours=9))
        (post,) = ingest([line], default_offset=jst).posts
        assert format_instant(post.timestamp) == "2020-06-05T00:00:00Z"


class TestFilterKeywords:
    POSTS = [make_post("1", "2020-01-01T00:00:00Z", "big quake"),
             make_post("2", "2020-01-01T00:00:01Z", "sunny day")]

    def test_include(self):
        assert [p.id for p in filter_keywords(self.POSTS, ["quake"], [])] == ["1"]

    def test_exclude(self):
        assert [p.id for p in filter_keywords(self.POSTS, [], ["quake"])] == ["2"]

    def test_identity_when_both_empty(self):
        assert filter_keywords(self.POSTS, [], []) == self.POSTS

    def test_include_then_exclude_same_keywords_is_empty(self):
        kept = filter_keywords(self.POSTS, ["quake", "sunny"], [])
        assert filter_keywords(kept, [], ["quake", "sunny"]) == []


class TestWindowSpec:
    def test_quarterly_five_windows(self):
        spec = WindowSpec.quarterly(utc("2020-01-01T00:00:00Z"), utc("2021-04-01T00:00:00Z"))
        assert len(spec.windows) == 5

    def test_daily_split_eight_windows(self):
        spec = WindowSpec.daily_split(
            utc("2011-03-11T00:00:00Z"), utc("2011-03-18T00:00:00Z"), utc("2011-03-11T14:46:00Z")
        )
        assert len(spec.windows) == 8

    def test_windows_cover_period_contiguously(self):
        spec = WindowSpec.daily(utc("2020-01-01T06:00:00Z"), utc("2020-01-04T18:00:00Z"))
        assert spec.windows[0].start == utc("2020-01-01T06:00:00Z")
        assert spec.windows[-1].end == utc("2020-01-04T18:00:00Z")
        for a, b in zip(spec.windows[:-1], spec.windows[1:]):
            assert a.end == b.start

    def test_weekly_blocks(self):
        spec = WindowSpec.weekly(utc("2024-06-01T00:00:00Z"), utc("2024-06-29T00:00:00Z"))
        assert len(spec.windows) == 4
        assert all((w.end - w.start).days == 7 for w in spec.windows)

    def test_explicit_allows_gaps(self):
        spec = WindowSpec.explicit([
            (utc("2024-06-01T00:00:00Z"), utc("2024-07-01T00:00:00Z")),
            (utc("2024-12-01T00:00:00Z"), utc("2025-01-01T00:00:00Z")),
        ])
        assert len(spec.windows) == 2

    def test_explicit_overlap_rejected(self):
        with pytest.raises(ConfigError, match="overlap"):
            WindowSpec.explicit([
                (utc("2024-06-01T00:00:00Z"), utc("2024-06-20T00:00:00Z")),
                (utc("2024-06-10T00:00:00Z"), utc("2024-07-01T00:00:00Z")),
            ])

    def test_split_outside_period_rejected(self):
        with pytest.raises(ConfigError, match="outside"):
            WindowSpec.daily_split(
                utc("2011-03-11T00:00:00Z"), utc("2011-03-12T00:00:00Z"), utc("2011-03-13T00:00:00Z")
            )

    def test_split_on_boundary_rejected(self):
        with pytest.raises(ConfigError, match="boundary"):
            WindowSpec.daily_split(
                utc("2011-03-11T00:00:00Z"), utc("2011-03-13T00:00:00Z"), utc("2011-03-12T00:00:00Z")
            )

    def test_window_ids_unique_and_ordered(self):
        spec = WindowSpec.daily(utc("2020-01-01T00:00:00Z"), utc("2020-01-08T00:00:00Z"))
        ids = [w.id for w in spec.windows]
        assert ids == sorted(ids) and len(set(ids)) == len(ids)


class TestAssignWindows:
    def spec(self):
        return WindowSpec.daily(utc("2020-01-01T00:00:00Z"), utc("2020-01-04T00:00:00Z"))

    def test_boundary_instant_is_start_inclusive(self):
        spec = self.spec()
        post = make_post("x", "2020-01-02T00:00:00Z")
        corpus = assign_windows([post], spec)
        by_window = {w.id: [p.id for p in ps] for w, ps in corpus}
        assert by_window["20200102T000000"] == ["x"]

    def test_out_of_period_dropped_and_counted(self):
        corpus = assign_windows(
            [make_post("in", "2020-01-01T05:00:00Z"), make_post("out", "2020-02-01T00:00:00Z")],
            self.spec(),
        )
        assert corpus.dropped == 1
        assert sum(len(ps) for _, ps in corpus) == 1

    def test_empty_windows_emitted(self):
        corpus = assign_windows([make_post("a", "2020-01-01T05:00:00Z")], self.spec())
        assert len(corpus.windows) == 3

    def test_partition_sums_to_input(self):
        rng = random.Random(3)
        posts = [
            make_post(f"p{i}", f"2020-01-{rng.randint(1, 9):02d}T{rng.randint(0, 23):02d}:00:00Z")
            for i in range(200)
        ]
        corpus = assign_windows(posts, self.spec())
        assert sum(len(ps) for _, ps in corpus) + corpus.dropped == len(posts)

    def test_input_permutation_invariance(self):
        rng = random.Random(4)
        posts = [
            make_post(f"p{i}", f"2020-01-0{rng.randint(1, 3)}T{rng.randint(0, 23):02d}:00:00Z")
            for i in range(50)
        ]
        base = assign_windows(posts, self.spec())
        shuffled = posts[:]
        rng.shuffle(shuffled)
        other = assign_windows(shuffled, self.spec())
        for (w1, ps1), (w2, ps2) in zip(base, other):
            assert w1 == w2 and ps1 == ps2

    def test_gap_posts_dropped_in_explicit_scheme(self):
        spec = WindowSpec.explicit([
            (utc("2020-01-01T00:00:00Z"), utc("2020-01-02T00:00:00Z")),
            (utc("2020-01-05T00:00:00Z"), utc("2020-01-06T00:00:00Z")),
        ])
        corpus = assign_windows([make_post("gap", "2020-01-03T12:00:00Z")], spec)
        assert corpus.dropped == 1
