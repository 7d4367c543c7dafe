"""Run configuration: parsing, validation and the run manifest.

A run config is a JSON document declaring the lexicon, matcher mode,
significance thresholds, null-model replicates, master seed, output root and
one or more datasets (input path, period, window scheme, keyword filters).
The manifest hash fingerprints everything that determines a dataset's
artifacts, so stale or mixed outputs are detectable.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

from .conceptnet import SignificanceConfig
from .corpus import WindowSpec, format_instant, parse_instant
from .errors import ConfigError

OUTPUT_ROOT_ENV = "EMOLINK_OUTPUT_ROOT"

_SCHEMES = ("daily", "daily-split", "quarterly", "weekly", "explicit")
_MATCHER_MODES = ("substring", "token")


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    input: Path
    period: tuple[datetime, datetime]
    scheme: str
    split_instant: datetime | None = None
    anchor_month: int = 1
    explicit_windows: tuple[tuple[datetime, datetime], ...] = ()
    include_keywords: tuple[str, ...] = ()
    exclude_keywords: tuple[str, ...] = ()
    utc_offset_minutes: int = 0

    def window_spec(self) -> WindowSpec:
        start, end = self.period
        if self.scheme == "daily":
            return WindowSpec.daily(start, end)
        if self.scheme == "daily-split":
            if self.split_instant is None:
                raise ConfigError(f"dataset {self.name!r}: daily-split needs split_instant")
            return WindowSpec.daily_split(start, end, self.split_instant)
        if self.scheme == "quarterly":
            return WindowSpec.quarterly(start, end, self.anchor_month)
        if self.scheme == "weekly":
            return WindowSpec.weekly(start, end)
        if self.scheme == "explicit":
            return WindowSpec.explicit(self.explicit_windows)
        raise ConfigError(f"dataset {self.name!r}: unknown scheme {self.scheme!r}")

    def default_offset(self) -> timezone:
        return timezone(timedelta(minutes=self.utc_offset_minutes))


@dataclass(frozen=True)
class RunConfig:
    lexicon: Path
    matcher_mode: str
    significance: SignificanceConfig
    replicates: int
    seed: int
    output_root: Path
    datasets: tuple[DatasetConfig, ...]

    def dataset(self, name: str) -> DatasetConfig:
        for ds in self.datasets:
            if ds.name == name:
                return ds
        raise ConfigError(
            f"unknown dataset {name!r}; configured: {', '.join(d.name for d in self.datasets)}"
        )

    def dataset_dir(self, name: str) -> Path:
        return self.output_root / self.dataset(name).name


def load_run_config(
    path: str | Path,
    seed_override: int | None = None,
    output_override: str | Path | None = None,
) -> RunConfig:
    """Parse and validate a run config; problems are reported with the
    offending field path in the message."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None

    problems: list[str] = []

    def fail(fieldname: str, message: str) -> None:
        problems.append(f"{fieldname}: {message}")

    lexicon = Path(str(raw.get("lexicon", "")))
    if not raw.get("lexicon"):
        fail("lexicon", "required field is missing")
    elif not lexicon.is_file():
        fail("lexicon", f"file not found: {lexicon}")

    matcher_mode = raw.get("matcher_mode", "substring")
    if matcher_mode not in _MATCHER_MODES:
        fail("matcher_mode", f"expected one of {_MATCHER_MODES}, got {matcher_mode!r}")

    replicates = raw.get("replicates", 100)
    if not isinstance(replicates, int) or replicates < 2:
        fail("replicates", f"must be an integer >= 2, got {replicates!r}")

    seed = raw.get("seed") if seed_override is None else seed_override
    if seed is None:
        fail("seed", "required field is missing (or pass --seed)")
    elif not isinstance(seed, int) or seed < 0:
        fail("seed", f"must be a non-negative integer, got {seed!r}")

    try:
        significance = SignificanceConfig(
            strength_threshold=float(raw.get("strength_threshold", 3.0)),
            weight_percentile=float(raw.get("weight_percentile", 10.0)),
        )
    except (ConfigError, TypeError, ValueError) as exc:
        significance = SignificanceConfig()
        fail("strength_threshold/weight_percentile", str(exc))

    output_root = (
        output_override
        or raw.get("output_root")
        or os.environ.get(OUTPUT_ROOT_ENV)
        or "emolink-out"
    )

    datasets: list[DatasetConfig] = []
    raw_datasets = raw.get("datasets", [])
    if not raw_datasets:
        fail("datasets", "at least one dataset is required")
    names = set()
    for i, ds in enumerate(raw_datasets):
        prefix = f"datasets[{i}]"
        name = str(ds.get("name", "")) or f"dataset{i}"
        if not ds.get("name"):
            fail(f"{prefix}.name", "required field is missing")
        if name in names:
            fail(f"{prefix}.name", f"duplicate dataset name {name!r}")
        names.add(name)
        input_path = Path(str(ds.get("input", "")))
        if not ds.get("input"):
            fail(f"{prefix}.input", "required field is missing")
        elif not input_path.is_file():
            fail(f"{prefix}.input", f"file not found: {input_path}")
        scheme = ds.get("scheme", "daily")
        if scheme not in _SCHEMES:
            fail(f"{prefix}.scheme", f"expected one of {_SCHEMES}, got {scheme!r}")
        period = (datetime(2000, 1, 1, tzinfo=timezone.utc),) * 2
        try:
            raw_period = ds["period"]
            period = (parse_instant(str(raw_period[0])), parse_instant(str(raw_period[1])))
            if period[0] >= period[1]:
                fail(f"{prefix}.period", "start must precede end")
        except (KeyError, IndexError, TypeError):
            fail(f"{prefix}.period", "expected [start, end] ISO-8601 instants")
        except Exception as exc:  # unparseable instant
            fail(f"{prefix}.period", str(exc))
        split = None
        if ds.get("split_instant") is not None:
            try:
                split = parse_instant(str(ds["split_instant"]))
            except Exception as exc:
                fail(f"{prefix}.split_instant", str(exc))
        explicit = []
        for j, win in enumerate(ds.get("windows", [])):
            try:
                explicit.append((parse_instant(str(win[0])), parse_instant(str(win[1]))))
            except Exception as exc:
                fail(f"{prefix}.windows[{j}]", str(exc))
        cfg = DatasetConfig(
            name=name,
            input=input_path,
            period=period,
            scheme=scheme,
            split_instant=split,
            anchor_month=int(ds.get("anchor_month", 1)),
            explicit_windows=tuple(explicit),
            include_keywords=tuple(str(k) for k in ds.get("include_keywords", [])),
            exclude_keywords=tuple(str(k) for k in ds.get("exclude_keywords", [])),
            utc_offset_minutes=int(ds.get("utc_offset_minutes", 0)),
        )
        if not problems:
            try:
                cfg.window_spec()  # overlap/gap/split validation
            except ConfigError as exc:
                fail(f"{prefix}", str(exc))
        datasets.append(cfg)

    if problems:
        raise ConfigError("invalid config:\n  " + "\n  ".join(problems))
    return RunConfig(
        lexicon=lexicon,
        matcher_mode=matcher_mode,
        significance=significance,
        replicates=replicates,
        seed=int(seed),
        output_root=Path(output_root),
        datasets=tuple(datasets),
    )


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def build_manifest(cfg: RunConfig, ds: DatasetConfig, lexicon_words: int) -> dict:
    """Everything that determines the dataset's artifacts, plus its hash."""
    spec = ds.window_spec()
    body = {
        "dataset": ds.name,
        "input_sha256": _sha256_file(ds.input),
        "lexicon_sha256": _sha256_file(cfg.lexicon),
        "lexicon_words": lexicon_words,
        "matcher_mode": cfg.matcher_mode,
        "period": [format_instant(ds.period[0]), format_instant(ds.period[1])],
        "scheme": ds.scheme,
        "split_instant": format_instant(ds.split_instant) if ds.split_instant else None,
        "anchor_month": ds.anchor_month,
        "explicit_windows": [
            [format_instant(a), format_instant(b)] for a, b in ds.explicit_windows
        ],
        "include_keywords": list(ds.include_keywords),
        "exclude_keywords": list(ds.exclude_keywords),
        "utc_offset_minutes": ds.utc_offset_minutes,
        "replicates": cfg.replicates,
        "seed": cfg.seed,
        "strength_threshold": cfg.significance.strength_threshold,
        "weight_percentile": cfg.significance.weight_percentile,
        "window_ids": [w.id for w in spec.windows],
    }
    encoded = json.dumps(body, sort_keys=True, separators=(",", ":"))
    body["manifest_hash"] = hashlib.sha256(encoded.encode("utf-8")).hexdigest()
    return body
