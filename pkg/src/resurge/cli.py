"""Command-line pipeline: curate, granger, bass, ccdf, pipeline.

Later stages re-run the earlier ones in memory from the same inputs, so
``pipeline`` writes byte-identical files to running the stages one by one.
Every output file is ``<command>_<schema>.<ext>`` inside --out-dir.
"""

from __future__ import annotations

import argparse
import datetime as dt
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bass as bass_mod
from . import curation, granger, ingest, series

__all__ = ["RunConfig", "main"]

_FORMATS = ("jsonl", "csv")


@dataclass(frozen=True)
class RunConfig:
    """All knobs of one run; defaults follow the published analysis."""

    manifest: Path | None = None
    catalog: Path | None = None
    allowlist: Path | None = None
    cutoff_date: dt.date = curation.DEFAULT_CUTOFF
    min_points: int = curation.DEFAULT_MIN_POINTS
    peak_threshold: float = 0.05
    peak_basis: str = "total"
    lag_min: int = 1
    lag_max: int = 5
    alpha: float = granger.DEFAULT_ALPHA
    bass_rmse_max: float = 0.05
    out_dir: Path = field(default_factory=lambda: Path("out"))
    format: str = "jsonl"

    def __post_init__(self) -> None:
        if self.min_points < 1:
            raise ValueError("--min-points must be at least 1")
        if not 0.0 < self.peak_threshold < 1.0:
            raise ValueError("--peak-threshold must lie in (0, 1)")
        if self.peak_basis not in ("total", "peak"):
            raise ValueError("--peak-basis must be 'total' or 'peak'")
        if not 1 <= self.lag_min <= self.lag_max:
            raise ValueError("--lag-min/--lag-max must satisfy 1 <= min <= max")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("--alpha must lie in (0, 1)")
        if self.bass_rmse_max <= 0.0:
            raise ValueError("--bass-rmse-max must be positive")
        if self.format not in _FORMATS:
            raise ValueError("--format must be 'jsonl' or 'csv'")

    @property
    def lag_spec(self) -> granger.LagSpec:
        return granger.LagSpec(self.lag_min, self.lag_max)


def _parse_iso_date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid ISO date {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resurge",
        description=(
            "Analyze whether short-video popularity spikes anticipate "
            "web-search interest, song by song."
        ),
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", type=Path, help="dataset manifest (JSON)")
    common.add_argument("--catalog", type=Path, help="release catalog CSV")
    common.add_argument("--allowlist", type=Path, help="manually curated song ids, one per line")
    common.add_argument("--cutoff-date", type=_parse_iso_date, default=curation.DEFAULT_CUTOFF,
                        help="latest allowed release date (ISO), default %(default)s")
    common.add_argument("--min-points", type=int, default=curation.DEFAULT_MIN_POINTS,
                        help="minimum points in the processed window, default %(default)s")
    common.add_argument("--peak-threshold", type=float, default=0.05,
                        help="peak-window threshold fraction, default %(default)s")
    common.add_argument("--peak-basis", choices=("total", "peak"), default="total",
                        help="whether the threshold fraction applies to the series total or the peak value")
    common.add_argument("--lag-min", type=int, default=1, help="smallest lag to sweep, default %(default)s")
    common.add_argument("--lag-max", type=int, default=5, help="largest lag to sweep, default %(default)s")
    common.add_argument("--alpha", type=float, default=granger.DEFAULT_ALPHA,
                        help="significance level for the causality verdict, default %(default)s")
    common.add_argument("--bass-rmse-max", type=float, default=0.05,
                        help="rmse ceiling a diffusion fit must meet to be flagged acceptable, default %(default)s")
    common.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory, default %(default)s")
    common.add_argument("--format", choices=_FORMATS, default="jsonl", help="report format, default %(default)s")

    sub = parser.add_subparsers(dest="command", required=True)
    for name, description in (
        ("curate", "filter the dataset and write the kept songs"),
        ("granger", "lag-based causality screen over the curated songs"),
        ("bass", "diffusion-curve fits for the causally flagged songs"),
        ("ccdf", "distribution of per-song total popularity"),
        ("pipeline", "curate, then granger, then bass"),
    ):
        sub.add_parser(name, parents=[common], help=description, description=description)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        manifest=args.manifest,
        catalog=args.catalog,
        allowlist=args.allowlist,
        cutoff_date=args.cutoff_date,
        min_points=args.min_points,
        peak_threshold=args.peak_threshold,
        peak_basis=args.peak_basis,
        lag_min=args.lag_min,
        lag_max=args.lag_max,
        alpha=args.alpha,
        bass_rmse_max=args.bass_rmse_max,
        out_dir=args.out_dir,
        format=args.format,
    )


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _require(config: RunConfig, *, catalog: bool) -> str | None:
    if config.manifest is None:
        return "--manifest is required"
    if catalog and config.catalog is None:
        return "--catalog is required"
    return None


def _load_inputs(config: RunConfig, *, catalog: bool):
    records = ingest.load_dataset(config.manifest)
    entries = ingest.parse_catalog_file(config.catalog) if catalog else []
    allowed = ingest.parse_allowlist(config.allowlist) if config.allowlist else []
    return records, entries, allowed


def _run_curation(config: RunConfig):
    records, entries, allowed = _load_inputs(config, catalog=True)
    return curation.curate(
        records,
        entries,
        cutoff_date=config.cutoff_date,
        min_points=config.min_points,
        allowlist=allowed,
        peak_threshold=config.peak_threshold,
        peak_basis=config.peak_basis,
    )


def _out_path(config: RunConfig, command: str, schema: str, ext: str | None = None) -> Path:
    suffix = ext if ext is not None else config.format
    return config.out_dir / f"{command}_{schema}.{suffix}"


# --- report rows ------------------------------------------------------------

_CURATE_FIELDS = ["song_id", "stage_reached", "stage_name", "kept", "reason"]
_GRANGER_FIELDS = [
    "song_id", "lag", "f_stat", "df_num", "df_den", "ssr_restricted",
    "ssr_unrestricted", "p_value", "best_p", "causal", "alpha",
    "statistic", "intercept", "error",
]
_HISTOGRAM_FIELDS = ["bin_lo", "bin_hi", "count"]
_BASS_FIELDS = [
    "song_id", "platform", "p", "q", "peak_time", "residual_norm", "rmse",
    "rmse_within_max", "converged", "n_points", "error",
]
_SCATTER_FIELDS = [
    "song_id", "p_short_video", "q_short_video", "p_web_search", "q_web_search",
]
_OVERLAY_FIELDS = ["song_id", "platform", "day", "observed_cum", "fitted_cum"]
_CCDF_POINT_FIELDS = ["popularity", "fraction_above"]
_CCDF_SUMMARY_FIELDS = ["n_songs", "min", "q1", "median", "q3", "max"]


def _curation_rows(report: curation.CurationReport) -> list[dict]:
    rows = []
    for outcome in report.outcomes:
        stage_name = curation.STAGE_NAMES[outcome.stage_reached - 1]
        rows.append(
            {
                "song_id": outcome.song_id,
                "stage_reached": outcome.stage_reached,
                "stage_name": stage_name,
                "kept": outcome.kept,
                "reason": outcome.reason,
            }
        )
    return rows


def _granger_rows(batch: granger.GrangerBatch) -> list[dict]:
    rows = []
    for item in batch.items:
        if item.result is None:
            rows.append({"song_id": item.song_id, "error": item.error})
            continue
        res = item.result
        for lag_result in res.per_lag:
            rows.append(
                {
                    "song_id": item.song_id,
                    "lag": lag_result.lag,
                    "f_stat": lag_result.f_stat,
                    "df_num": lag_result.df_num,
                    "df_den": lag_result.df_den,
                    "ssr_restricted": lag_result.ssr_restricted,
                    "ssr_unrestricted": lag_result.ssr_unrestricted,
                    "p_value": lag_result.p_value,
                    "best_p": res.best_p,
                    "causal": res.causal,
                    "alpha": res.alpha,
                    "statistic": res.statistic,
                    "intercept": res.intercept,
                    "error": None,
                }
            )
    return rows


def _histogram_rows(batch: granger.GrangerBatch) -> list[dict]:
    best = [it.result.best_p for it in batch.items if it.result is not None]
    edges = np.linspace(0.0, 1.0, 11)
    counts, _ = np.histogram(best, bins=edges) if best else (np.zeros(10, dtype=int), edges)
    return [
        {"bin_lo": float(edges[i]), "bin_hi": float(edges[i + 1]), "count": int(counts[i])}
        for i in range(10)
    ]


def _bass_rows(batch: bass_mod.BassBatch, config: RunConfig) -> list[dict]:
    rows = []
    for item in batch.items:
        if item.error is not None:
            rows.append({"song_id": item.song_id, "error": item.error})
            continue
        for fit in (item.short_video, item.web_search):
            rows.append(
                {
                    "song_id": item.song_id,
                    "platform": fit.platform,
                    "p": fit.params.p,
                    "q": fit.params.q,
                    "peak_time": fit.params.peak_time,
                    "residual_norm": fit.residual_norm,
                    "rmse": fit.rmse,
                    "rmse_within_max": fit.rmse <= config.bass_rmse_max,
                    "converged": fit.converged,
                    "n_points": fit.n_points,
                    "error": None,
                }
            )
    return rows


def _scatter_rows(batch: bass_mod.BassBatch) -> list[dict]:
    rows = []
    for item in batch.items:
        if item.error is not None:
            continue
        rows.append(
            {
                "song_id": item.song_id,
                "p_short_video": item.short_video.params.p,
                "q_short_video": item.short_video.params.q,
                "p_web_search": item.web_search.params.p,
                "q_web_search": item.web_search.params.q,
            }
        )
    return rows


def _overlay_rows(batch: bass_mod.BassBatch, kept: list[curation.SongRecord]) -> list[dict]:
    by_id = {record.song_id: record for record in kept}
    rows = []
    for item in batch.items:
        if item.error is not None:
            continue
        record = by_id[item.song_id]
        for fit, ts in (
            (item.short_video, record.short_video_series),
            (item.web_search, record.web_search_series),
        ):
            observed = series.cumulative_normalized(ts)
            times = (ts.days - ts.days[0]).astype(np.float64)
            fitted = bass_mod.bass_cumulative(fit.params, times)
            for offset, obs, model in zip(times, observed.values, fitted):
                rows.append(
                    {
                        "song_id": item.song_id,
                        "platform": fit.platform,
                        "day": int(offset),
                        "observed_cum": float(obs),
                        "fitted_cum": float(model),
                    }
                )
    return rows


def _ccdf_rows(totals: list[float]) -> tuple[list[dict], list[dict]]:
    points = series.ccdf(totals)
    point_rows = [
        {"popularity": pt.popularity, "fraction_above": pt.fraction_above}
        for pt in points
    ]
    arr = np.asarray(totals, dtype=np.float64)
    q1, median, q3 = np.quantile(arr, [0.25, 0.5, 0.75])
    summary = [
        {
            "n_songs": int(arr.size),
            "min": float(arr.min()),
            "q1": float(q1),
            "median": float(median),
            "q3": float(q3),
            "max": float(arr.max()),
        }
    ]
    return point_rows, summary


# --- commands ---------------------------------------------------------------


def _write_curation_outputs(config: RunConfig, kept, report) -> None:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    ingest.write_report(
        _curation_rows(report), _CURATE_FIELDS, _out_path(config, "curate", "report"), config.format
    )
    series_dir = config.out_dir / "curate_series"
    series_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for record in kept:
        sv_name = f"curate_series/{record.song_id}__short_video.csv"
        ws_name = f"curate_series/{record.song_id}__web_search.csv"
        ingest.write_series_file(record.short_video_series, config.out_dir / sv_name)
        ingest.write_series_file(record.web_search_series, config.out_dir / ws_name)
        entries.append(
            ingest.ManifestEntry(
                song_id=record.song_id,
                display_title=record.display_title,
                short_video=sv_name,
                web_search=ws_name,
            )
        )
    ingest.write_manifest(
        ingest.DatasetManifest(format_version=ingest.MANIFEST_FORMAT_VERSION, songs=tuple(entries)),
        _out_path(config, "curate", "manifest", "json"),
    )


def _print_funnel(report: curation.CurationReport) -> None:
    for name, count in report.funnel:
        print(f"{name}: {count}")


def _run_granger(config: RunConfig):
    kept, report = _run_curation(config)
    batch = granger.batch_granger(kept, lags=config.lag_spec, alpha=config.alpha)
    return kept, report, batch


def _write_granger_outputs(config: RunConfig, batch) -> None:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    ingest.write_report(
        _granger_rows(batch), _GRANGER_FIELDS, _out_path(config, "granger", "report"), config.format
    )
    ingest.write_report(
        _histogram_rows(batch), _HISTOGRAM_FIELDS, _out_path(config, "granger", "histogram"), config.format
    )


def _run_bass(config: RunConfig, kept, batch):
    causal_ids = {
        item.song_id for item in batch.items if item.result is not None and item.result.causal
    }
    flagged = [record for record in kept if record.song_id in causal_ids]
    return flagged, bass_mod.batch_bass(flagged)


def _write_bass_outputs(config: RunConfig, bass_batch, kept) -> None:
    config.out_dir.mkdir(parents=True, exist_ok=True)
    ingest.write_report(
        _bass_rows(bass_batch, config), _BASS_FIELDS, _out_path(config, "bass", "report"), config.format
    )
    ingest.write_report(
        _scatter_rows(bass_batch), _SCATTER_FIELDS, _out_path(config, "bass", "scatter"), config.format
    )
    ingest.write_report(
        _overlay_rows(bass_batch, kept), _OVERLAY_FIELDS, _out_path(config, "bass", "overlay"), config.format
    )


def cmd_curate(config: RunConfig) -> int:
    missing = _require(config, catalog=True)
    if missing:
        return _fail(missing)
    try:
        kept, report = _run_curation(config)
    except (OSError, ingest.ParseError, ValueError) as exc:
        return _fail(str(exc))
    _write_curation_outputs(config, kept, report)
    _print_funnel(report)
    print(f"kept {len(kept)} songs")
    return 0


def cmd_granger(config: RunConfig) -> int:
    missing = _require(config, catalog=True)
    if missing:
        return _fail(missing)
    try:
        kept, report, batch = _run_granger(config)
    except (OSError, ingest.ParseError, ValueError) as exc:
        return _fail(str(exc))
    _write_granger_outputs(config, batch)
    print(
        f"causality screen: {batch.n_causal} of {batch.n_tested} tested songs "
        f"flagged at alpha={config.alpha:g} ({batch.n_failed} failed)"
    )
    return 0


def cmd_bass(config: RunConfig) -> int:
    missing = _require(config, catalog=True)
    if missing:
        return _fail(missing)
    try:
        kept, report, batch = _run_granger(config)
        flagged, bass_batch = _run_bass(config, kept, batch)
    except (OSError, ingest.ParseError, ValueError) as exc:
        return _fail(str(exc))
    _write_bass_outputs(config, bass_batch, flagged)
    print(
        f"diffusion fits: {bass_batch.n_fits} fits over {len(flagged)} flagged songs "
        f"({bass_batch.n_failed} failed)"
    )
    return 0


def cmd_ccdf(config: RunConfig) -> int:
    missing = _require(config, catalog=False)
    if missing:
        return _fail(missing)
    try:
        records = ingest.load_dataset(config.manifest)
    except (OSError, ingest.ParseError, ValueError) as exc:
        return _fail(str(exc))
    if not records:
        return _fail("manifest lists no songs")
    totals = [record.short_video_series.total() for record in records]
    point_rows, summary_rows = _ccdf_rows(totals)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    ingest.write_report(point_rows, _CCDF_POINT_FIELDS, _out_path(config, "ccdf", "points"), config.format)
    ingest.write_report(summary_rows, _CCDF_SUMMARY_FIELDS, _out_path(config, "ccdf", "summary"), config.format)
    s = summary_rows[0]
    print(
        f"popularity over {s['n_songs']} songs: min {s['min']:.12g}, "
        f"q1 {s['q1']:.12g}, median {s['median']:.12g}, q3 {s['q3']:.12g}, max {s['max']:.12g}"
    )
    return 0


def cmd_pipeline(config: RunConfig) -> int:
    missing = _require(config, catalog=True)
    if missing:
        return _fail(missing)
    try:
        kept, report = _run_curation(config)
        batch = granger.batch_granger(kept, lags=config.lag_spec, alpha=config.alpha)
        flagged, bass_batch = _run_bass(config, kept, batch)
    except (OSError, ingest.ParseError, ValueError) as exc:
        return _fail(str(exc))
    _write_curation_outputs(config, kept, report)
    _write_granger_outputs(config, batch)
    _write_bass_outputs(config, bass_batch, flagged)
    _print_funnel(report)
    print(f"kept {len(kept)} songs")
    print(
        f"causality screen: {batch.n_causal} of {batch.n_tested} tested songs "
        f"flagged at alpha={config.alpha:g} ({batch.n_failed} failed)"
    )
    print(
        f"diffusion fits: {bass_batch.n_fits} fits over {len(flagged)} flagged songs "
        f"({bass_batch.n_failed} failed)"
    )
    return 0


_COMMANDS = {
    "curate": cmd_curate,
    "granger": cmd_granger,
    "bass": cmd_bass,
    "ccdf": cmd_ccdf,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
    except ValueError as exc:
        return _fail(str(exc))
    return _COMMANDS[args.command](config)


if __name__ == "__main__":
    sys.exit(main())
