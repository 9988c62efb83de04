"""File formats: series and catalog CSVs, dataset manifests, report writers.

All parsing is locale-independent (ISO-8601 dates, plain decimal numbers) and
every parse error carries the file path and line number.  Writers are
deterministic: the same inputs always produce the same bytes.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .curation import CatalogEntry, SongRecord
from .series import TimeSeries

__all__ = [
    "MANIFEST_FORMAT_VERSION",
    "ParseError",
    "ManifestEntry",
    "DatasetManifest",
    "parse_series_file",
    "write_series_file",
    "parse_catalog_file",
    "parse_allowlist",
    "load_manifest",
    "write_manifest",
    "load_dataset",
    "write_report",
    "read_report",
]

MANIFEST_FORMAT_VERSION = 1

# non-negative decimal, optional exponent; covers repr() of any non-negative
# finite float, rejects signs, inf/nan, underscores and hex forms
_VALUE_RE = re.compile(r"^(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")

_SERIES_HEADER = ["date", "value"]
_CATALOG_HEADER = ["title", "artist", "release_date", "release_kind"]


class ParseError(ValueError):
    """Input-file error pinned to a path and line number."""

    def __init__(self, path, line_number: int | None, message: str):
        self.path = str(path)
        self.line_number = line_number
        where = f"{self.path}:{line_number}" if line_number is not None else self.path
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class ManifestEntry:
    song_id: str
    display_title: str
    short_video: str
    web_search: str | None = None


@dataclass(frozen=True)
class DatasetManifest:
    format_version: int
    songs: tuple[ManifestEntry, ...]


def _parse_date(text: str, path, lineno: int) -> int:
    try:
        return dt.date.fromisoformat(text).toordinal()
    except ValueError:
        raise ParseError(path, lineno, f"invalid ISO date {text!r}") from None


def _content_lines(path) -> Iterable[tuple[int, str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def parse_series_file(path) -> TimeSeries:
    """Read a ``date,value`` CSV into a series, sorting rows by date.

    Blank lines and ``#`` comments are skipped.  Duplicate dates are an
    error naming both offending lines.
    """
    rows: list[tuple[int, float]] = []
    first_day_line: dict[int, int] = {}
    saw_header = False
    for lineno, line in _content_lines(path):
        if not saw_header:
            if [part.strip() for part in line.split(",")] != _SERIES_HEADER:
                raise ParseError(path, lineno, "expected 'date,value' header")
            saw_header = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(path, lineno, f"expected 2 fields, got {len(parts)}")
        day = _parse_date(parts[0].strip(), path, lineno)
        value_text = parts[1].strip()
        if not _VALUE_RE.match(value_text):
            raise ParseError(path, lineno, f"invalid value {value_text!r}")
        value = float(value_text)
        if day in first_day_line:
            raise ParseError(
                path,
                lineno,
                f"duplicate date {parts[0].strip()} (first seen on line {first_day_line[day]})",
            )
        first_day_line[day] = lineno
        rows.append((day, value))
    if not saw_header:
        raise ParseError(path, None, "empty file, expected 'date,value' header")
    if not rows:
        raise ParseError(path, None, "no data rows")
    rows.sort(key=lambda r: r[0])
    return TimeSeries.from_points(rows)


def write_series_file(series: TimeSeries, path) -> None:
    """Inverse of :func:`parse_series_file`; values round-trip bit-exactly."""
    lines = ["date,value"]
    for day, value in zip(series.days, series.values):
        lines.append(f"{dt.date.fromordinal(int(day)).isoformat()},{float(value)!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_catalog_file(path) -> list[CatalogEntry]:
    """Read the release catalog CSV (titles and artists may contain commas)."""
    entries: list[CatalogEntry] = []
    saw_header = False
    for lineno, line in _content_lines(path):
        try:
            parts = next(csv.reader([line]))
        except csv.Error as exc:
            raise ParseError(path, lineno, f"malformed CSV: {exc}") from None
        parts = [p.strip() for p in parts]
        if not saw_header:
            if parts != _CATALOG_HEADER:
                raise ParseError(
                    path, lineno, "expected 'title,artist,release_date,release_kind' header"
                )
            saw_header = True
            continue
        if len(parts) != 4:
            raise ParseError(path, lineno, f"expected 4 fields, got {len(parts)}")
        title, artist, date_text, kind = parts
        day = _parse_date(date_text, path, lineno)
        if kind not in ("single", "album", "other"):
            raise ParseError(path, lineno, f"invalid release_kind {kind!r}")
        try:
            entries.append(
                CatalogEntry(
                    title=title,
                    artist=artist,
                    release_date=dt.date.fromordinal(day),
                    release_kind=kind,
                )
            )
        except ValueError as exc:
            raise ParseError(path, lineno, str(exc)) from None
    if not saw_header:
        raise ParseError(path, None, "empty file, expected catalog header")
    return entries


def parse_allowlist(path) -> list[str]:
    """One song id per line; blanks and ``#`` comments are skipped."""
    return [line for _, line in _content_lines(path)]


def load_manifest(path) -> DatasetManifest:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(path, exc.lineno, f"invalid JSON: {exc.msg}") from None
    if not isinstance(payload, dict):
        raise ParseError(path, None, "manifest must be a JSON object")
    version = payload.get("format_version")
    if version != MANIFEST_FORMAT_VERSION:
        raise ParseError(
            path, None, f"unsupported format_version {version!r}, expected {MANIFEST_FORMAT_VERSION}"
        )
    songs_raw = payload.get("songs")
    if not isinstance(songs_raw, list):
        raise ParseError(path, None, "manifest needs a 'songs' list")
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for index, item in enumerate(songs_raw):
        label = f"songs[{index}]"
        if not isinstance(item, dict):
            raise ParseError(path, None, f"{label} must be an object")
        song_id = item.get("song_id")
        display_title = item.get("display_title")
        short_video = item.get("short_video")
        web_search = item.get("web_search")
        if not isinstance(song_id, str) or not song_id.strip():
            raise ParseError(path, None, f"{label} needs a non-empty song_id")
        if not isinstance(display_title, str) or not display_title.strip():
            raise ParseError(path, None, f"{label} ({song_id}) needs a non-empty display_title")
        if not isinstance(short_video, str) or not short_video:
            raise ParseError(path, None, f"{label} ({song_id}) needs a short_video path")
        if web_search is not None and not isinstance(web_search, str):
            raise ParseError(path, None, f"{label} ({song_id}) web_search must be a path or null")
        if song_id in seen:
            raise ParseError(path, None, f"duplicate song identifier: {song_id}")
        seen.add(song_id)
        entries.append(
            ManifestEntry(
                song_id=song_id,
                display_title=display_title,
                short_video=short_video,
                web_search=web_search,
            )
        )
    return DatasetManifest(format_version=version, songs=tuple(entries))


def write_manifest(manifest: DatasetManifest, path) -> None:
    payload = {
        "format_version": manifest.format_version,
        "songs": [
            {
                "song_id": e.song_id,
                "display_title": e.display_title,
                "short_video": e.short_video,
                "web_search": e.web_search,
            }
            for e in manifest.songs
        ],
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def load_dataset(manifest_path) -> list[SongRecord]:
    """Build song records from a manifest, reading the referenced series.

    A missing web-search file (or a null path) leaves that series absent for
    curation stage 1 to handle.  A missing or malformed short-video file, or
    a malformed web-search file, is an error naming the offending song.
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    base = manifest_path.parent
    records: list[SongRecord] = []
    for entry in manifest.songs:
        sv_path = base / entry.short_video
        if not sv_path.is_file():
            raise ParseError(
                manifest_path, None, f"song '{entry.song_id}': missing series file {entry.short_video}"
            )
        try:
            short_video = parse_series_file(sv_path)
        except ParseError as exc:
            raise ParseError(
                manifest_path, None, f"song '{entry.song_id}': {exc}"
            ) from None
        web_search = None
        if entry.web_search is not None:
            ws_path = base / entry.web_search
            if ws_path.is_file():
                try:
                    web_search = parse_series_file(ws_path)
                except ParseError as exc:
                    raise ParseError(
                        manifest_path, None, f"song '{entry.song_id}': {exc}"
                    ) from None
        records.append(
            SongRecord(
                song_id=entry.song_id,
                display_title=entry.display_title,
                short_video_series=short_video,
                web_search_series=web_search,
            )
        )
    return records


def _format_sig12(value: float) -> str:
    return format(value, ".12g")


def _jsonl_value(value):
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (np.floating, float)):
        return float(_format_sig12(float(value)))
    if isinstance(value, (np.integer, int)):
        return int(value)
    return value


def _csv_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (np.floating, float)):
        return _format_sig12(float(value))
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return str(value)


def write_report(rows: Sequence[dict], fieldnames: Sequence[str], path, format: str) -> None:
    """Write rows as JSON Lines or CSV with a fixed column order.

    Floats are emitted with 12 significant digits in both formats, so
    repeated runs over the same data are byte-identical.
    """
    if format not in ("jsonl", "csv"):
        raise ValueError("format must be 'jsonl' or 'csv'")
    path = Path(path)
    if format == "jsonl":
        lines = []
        for row in rows:
            payload = {name: _jsonl_value(row.get(name)) for name in fieldnames}
            lines.append(json.dumps(payload, ensure_ascii=False))
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(fieldnames)
            for row in rows:
                writer.writerow([_csv_value(row.get(name)) for name in fieldnames])


def read_report(path, format: str) -> list[dict]:
    """Read a report back; JSONL restores types, CSV yields strings."""
    if format not in ("jsonl", "csv"):
        raise ValueError("format must be 'jsonl' or 'csv'")
    path = Path(path)
    if format == "jsonl":
        return [
            json.loads(line)
            for line in path.read_text(encoding="utf-8").splitlines()
            if line
        ]
    with open(path, encoding="utf-8", newline="") as fh:
        return [dict(row) for row in csv.DictReader(fh)]
