"""Command line interface.

Subcommands mirror the pipeline stages::

    rainwarp ingest   --input gauge.csv --units mm-per-day --out years.json
    rainwarp dissim   --years years.json --out D.csv --heatmap D.svg
    rainwarp cluster  --matrix D.csv --k 4 --seeds 1,2,3 --out clust.json
    rainwarp indices  --years years.json --out idx.csv [--clustering clust.json]
    rainwarp trend    --clustering clust.json --window-length 26 --step 19 --out table.csv
    rainwarp pipeline --config pipeline.json

Exit codes: 0 success, 2 usage or input/config error, 3 computation failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, replace

from .clustering import best_of_restarts, load_clustering, save_clustering
from .config import (
    ClusterSettings,
    IndexSettings,
    IngestSettings,
    PipelineConfig,
    TrendSettings,
    settings_from_dict,
    load_json_config,
    provenance,
)
from .errors import ComputationError, ConfigError, InputError, RainwarpError
from .indices import compute_indices, indices_csv, profile_clusters
from .ingest import MissingPolicy, load_years, parse_daily_csv, save_years, split_hydro_years
from .matrix import build_matrix, load_matrix, rank_outliers, save_matrix
from .svg import alignment_svg, heatmap_svg
from .trend import WindowSpec, frequency_table, make_windows, uncovered_years
from .warp import WarpConfig, ims_dtw

logger = logging.getLogger("rainwarp")


# ---------------------------------------------------------------------------
# helpers


def _make_parent(*paths):
    for path in paths:
        if path:
            os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)


def _write_text(path, text):
    _make_parent(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_json(path, doc):
    _write_text(path, json.dumps(doc, indent=1) + "\n")


def _section(config_path, name):
    """Section ``name`` of a pipeline config, or the whole file if it is a bare section."""
    if config_path is None:
        return {}
    data = load_json_config(config_path)
    if not isinstance(data, dict):
        raise ConfigError(f"{config_path}: config must be a JSON object")
    pipeline_keys = {"ingest", "warp", "clustering", "indices", "trend", "figures", "input", "output_dir", "workers"}
    if data and set(data) <= pipeline_keys:
        return data.get(name, {})
    return data


def _override(settings, **flags):
    changes = {k: v for k, v in flags.items() if v is not None}
    try:
        return replace(settings, **changes) if changes else settings
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _svg_with_provenance(svg, prov):
    comment = "<!-- provenance: " + json.dumps(prov, sort_keys=True).replace("--", "- -") + " -->"
    head, rest = svg.split("\n", 1)
    return f"{head}\n{comment}\n{rest}"


def _year_lookup(years, label):
    for y in years:
        if y.start_year == label:
            return y
    raise InputError(f"unknown year label {label}")


# ---------------------------------------------------------------------------
# stage runners (shared by the subcommands and the pipeline)


def run_ingest(settings, input_path, out, report, prov_config=None):
    series = parse_daily_csv(input_path, settings.csv_format(), station_id=settings.station_id)
    years, excluded = split_hydro_years(series, MissingPolicy(settings.max_missing_fraction))
    prov = provenance("ingest", prov_config or asdict(settings), [input_path])
    _make_parent(out)
    save_years(out, years, excluded, prov)
    _write_json(report, {"provenance": prov, "excluded": excluded})
    logger.info("ingest: %d years kept, %d excluded", len(years), len(excluded))
    return years, excluded


def run_dissim(warp, years_path, out, heatmap=None, workers=1, prov_config=None):
    years, _ = load_years(years_path)
    matrix = build_matrix(years, warp, workers=workers)
    prov = provenance("dissim", prov_config or warp.to_dict(), [years_path])
    _make_parent(out)
    save_matrix(matrix, out, prov)
    if heatmap:
        _write_text(heatmap, _svg_with_provenance(heatmap_svg(matrix), prov))
    return matrix


def run_align(warp, years_path, y1, y2, out_svg, out_json=None, prov_config=None):
    years, _ = load_years(years_path)
    a, b = _year_lookup(years, y1), _year_lookup(years, y2)
    score, path = ims_dtw(a.values, b.values, warp)
    prov = provenance("align", prov_config or warp.to_dict(), [years_path])
    _write_text(out_svg, _svg_with_provenance(alignment_svg(a.values, b.values, path, y1, y2), prov))
    if out_json:
        _write_json(out_json, {"provenance": prov, "years": [y1, y2], **path.to_dict()})
    return score, path


def run_cluster(settings, matrix_path, out, prov_config=None):
    matrix = load_matrix(matrix_path)
    if settings.k > len(matrix):
        raise ConfigError(f"k={settings.k} exceeds the number of years ({len(matrix)})")
    clustering = best_of_restarts(matrix, settings.k, settings.seeds, settings.max_iter)
    _make_parent(out)
    save_clustering(clustering, out, provenance("cluster", prov_config or asdict(settings), [matrix_path]))
    return clustering


def run_indices(settings, years_path, out, clustering_path=None, profiles_out=None, prov_config=None):
    years, _ = load_years(years_path)
    rows = [(y.start_year, compute_indices(y, settings.wet_threshold)) for y in years]
    inputs = [years_path] + ([clustering_path] if clustering_path else [])
    prov = provenance("indices", prov_config or asdict(settings), inputs)
    _write_text(out, indices_csv(rows, prov))
    profiles = None
    if clustering_path:
        clustering = load_clustering(clustering_path)
        profiles = profile_clusters(clustering, dict(rows))
        _write_json(profiles_out, {"provenance": prov, "profiles": [p.to_dict() for p in profiles]})
    return rows, profiles


def run_trend(settings, clustering_path, out, json_out=None, prov_config=None):
    clustering = load_clustering(clustering_path)
    first = settings.first_start_year if settings.first_start_year is not None else min(clustering.labels)
    last = max(clustering.labels)
    try:
        spec = WindowSpec(first, settings.length_years, settings.step_years, settings.extend_last)
    except InputError as exc:
        raise ConfigError(str(exc)) from None
    windows = make_windows(spec, last)
    table = frequency_table(clustering, windows, settings.normalization, strict=settings.strict)
    prov = provenance("trend", prov_config or asdict(settings), [clustering_path])
    _write_text(out, table.to_csv(prov, settings.dead_band))
    if json_out:
        doc = table.to_dict()
        if len(windows) >= 2:
            doc["gradient"] = table.gradients(settings.dead_band)
        doc["uncovered_years"] = uncovered_years(windows, first, last)
        doc["provenance"] = prov
        _write_json(json_out, doc)
    return table


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(args):
    settings = settings_from_dict(IngestSettings, _section(args.config, "ingest"), "ingest")
    settings = _override(
        settings,
        units=args.units,
        station_id=args.station,
        date_column=args.date_column,
        value_column=args.value_column,
        date_format=args.date_format,
        delimiter=args.delimiter,
        decimal=args.decimal,
        missing_codes=tuple(args.missing_code) if args.missing_code else None,
        max_missing_fraction=args.max_missing,
    )
    report = args.report or os.path.splitext(args.out)[0] + ".exclusions.json"
    years, excluded = run_ingest(settings, args.input, args.out, report)
    print(f"{len(years)} hydrological years written to {args.out}; {len(excluded)} excluded (see {report})")


def _warp_from_args(args):
    warp = WarpConfig.from_dict(_section(args.config, "warp"))
    return _override(
        warp,
        band_days=args.band_days,
        radius=args.radius,
        coarsen_factor=args.coarsen_factor,
        min_coarse_len=args.min_coarse_len,
        cost_exponent=args.cost_exponent,
        normalize=False if args.no_normalize else None,
    )


def cmd_dissim(args):
    warp = _warp_from_args(args)
    if not args.out and not args.align:
        raise InputError("dissim needs --out and/or --align")
    if args.align:
        *labels, svg = args.align
        for text in labels:
            if not text.lstrip("-").isdigit():
                raise InputError(f"unknown year label {text}")
        y1, y2 = (int(t) for t in labels)
        score, path = run_align(warp, args.years, y1, y2, svg, args.align_json)
        print(f"{y1} vs {y2}: dissimilarity {score:.6g}, max offset {path.max_offset()} days -> {svg}")
    if args.out:
        matrix = run_dissim(warp, args.years, args.out, args.heatmap, args.workers)
        print(f"{len(matrix)}x{len(matrix)} matrix written to {args.out}")
        if args.outliers:
            for label, mean in rank_outliers(matrix, min(args.outliers, len(matrix))):
                print(f"  {label} (#{matrix.index_of(label) + 1}) mean dissimilarity {mean:.6g}")


def cmd_cluster(args):
    settings = settings_from_dict(ClusterSettings, _section(args.config, "clustering"), "clustering")
    seeds = None
    if args.seeds:
        try:
            seeds = tuple(int(s) for s in args.seeds.split(",") if s.strip())
        except ValueError:
            raise ConfigError(f"--seeds must be comma-separated integers, got {args.seeds!r}") from None
    settings = _override(settings, k=args.k, seeds=seeds, max_iter=args.max_iter)
    clustering = run_cluster(settings, args.matrix, args.out)
    print(
        f"k={clustering.k} best seed {clustering.seed}: total cost {clustering.total_cost:.6g}, "
        f"medoids {clustering.medoid_labels()} -> {args.out}"
    )


def cmd_indices(args):
    settings = settings_from_dict(IndexSettings, _section(args.config, "indices"), "indices")
    settings = _override(settings, wet_threshold=args.wet_threshold)
    profiles_out = args.profiles or os.path.splitext(args.out)[0] + ".profiles.json"
    rows, profiles = run_indices(settings, args.years, args.out, args.clustering, profiles_out)
    print(f"indices for {len(rows)} years written to {args.out}")
    if profiles:
        for p in profiles:
            print(f"  cluster {p.cluster}: {p.size} years, medoid {p.medoid}, label {p.label}")


def cmd_trend(args):
    settings = settings_from_dict(TrendSettings, _section(args.config, "trend"), "trend")
    settings = _override(
        settings,
        first_start_year=args.first_year,
        length_years=args.window_length,
        step_years=args.step,
        extend_last=False if args.no_extend else None,
        normalization=args.normalization,
        strict=True if args.strict else None,
    )
    table = run_trend(settings, args.clustering, args.out, args.json)
    sys.stdout.write(table.to_csv(dead_band=settings.dead_band))


def _stale(inputs, outputs):
    if not all(os.path.exists(p) for p in outputs):
        return True
    newest_in = max(os.stat(p).st_mtime_ns for p in inputs)
    oldest_out = min(os.stat(p).st_mtime_ns for p in outputs)
    return oldest_out < newest_in


def cmd_pipeline(args):
    cfg = PipelineConfig.load(args.config)
    cfg = _override(cfg, input=args.input, output_dir=args.output_dir, workers=args.workers)
    if not cfg.input:
        raise ConfigError("pipeline needs an input file (config 'input' or --input)")
    if not os.path.exists(cfg.input):
        raise InputError(f"input file {cfg.input} does not exist")
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    full = cfg.computational()
    p = {
        name: os.path.join(out, name)
        for name in (
            "years.json", "exclusions.json", "matrix.csv", "heatmap.svg", "alignment.svg",
            "clustering.json", "indices.csv", "profiles.json", "trend.csv", "trend.json",
        )
    }
    conf = os.path.abspath(args.config)

    def stage(name, inputs, outputs, fn):
        if not args.force and not _stale(inputs + [conf], outputs):
            print(f"[{name}] up to date, skipped")
            return
        try:
            fn()
        except RainwarpError as exc:
            raise type(exc)(f"stage {name}: {exc}") from exc
        print(f"[{name}] done")

    stage("ingest", [cfg.input], [p["years.json"], p["exclusions.json"]],
          lambda: run_ingest(cfg.ingest, cfg.input, p["years.json"], p["exclusions.json"], full))
    dissim_out = [p["matrix.csv"]] + ([p["heatmap.svg"]] if cfg.figures.heatmap else [])

    def dissim():
        run_dissim(cfg.warp, p["years.json"], p["matrix.csv"],
                   p["heatmap.svg"] if cfg.figures.heatmap else None, cfg.workers, full)
        if cfg.figures.align:
            run_align(cfg.warp, p["years.json"], *cfg.figures.align, p["alignment.svg"], prov_config=full)

    stage("dissim", [p["years.json"]], dissim_out, dissim)
    stage("cluster", [p["matrix.csv"]], [p["clustering.json"]],
          lambda: run_cluster(cfg.clustering, p["matrix.csv"], p["clustering.json"], full))
    stage("indices", [p["years.json"], p["clustering.json"]], [p["indices.csv"], p["profiles.json"]],
          lambda: run_indices(cfg.indices, p["years.json"], p["indices.csv"], p["clustering.json"],
                              p["profiles.json"], full))
    stage("trend", [p["clustering.json"]], [p["trend.csv"], p["trend.json"]],
          lambda: run_trend(cfg.trend, p["clustering.json"], p["trend.csv"], p["trend.json"], full))


# ---------------------------------------------------------------------------
# parser


def build_parser():
    ap = argparse.ArgumentParser(prog="rainwarp", description="IMS-DTW clustering of annual rainfall series")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a daily gauge CSV and split it into hydrological years")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="exclusion report path (default: <out>.exclusions.json)")
    p.add_argument("--config")
    p.add_argument("--units", choices=["mm-per-day", "mm-per-hour", "mm/day", "mm/h"])
    p.add_argument("--station")
    p.add_argument("--date-column", type=_int_or_str)
    p.add_argument("--value-column", type=_int_or_str)
    p.add_argument("--date-format", choices=["auto", "iso", "dmy"])
    p.add_argument("--delimiter")
    p.add_argument("--decimal")
    p.add_argument("--missing-code", action="append")
    p.add_argument("--max-missing", type=float, help="maximum missing fraction per year (default 0.05)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("dissim", help="pairwise IMS-DTW dissimilarity matrix")
    p.add_argument("--years", required=True)
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--heatmap")
    p.add_argument("--align", nargs=3, metavar=("YEAR1", "YEAR2", "SVG"))
    p.add_argument("--align-json")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--outliers", type=int, default=0, help="print the N most dissimilar years")
    p.add_argument("--band-days", type=int)
    p.add_argument("--radius", type=int)
    p.add_argument("--coarsen-factor", type=int)
    p.add_argument("--min-coarse-len", type=int)
    p.add_argument("--cost-exponent", type=int, choices=[1, 2])
    p.add_argument("--no-normalize", action="store_true")
    p.set_defaults(func=cmd_dissim)

    p = sub.add_parser("cluster", help="K-medoids clustering of the matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--k", type=int)
    p.add_argument("--seeds")
    p.add_argument("--max-iter", type=int)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("indices", help="per-year precipitation indices and cluster profiles")
    p.add_argument("--years", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--clustering")
    p.add_argument("--profiles")
    p.add_argument("--wet-threshold", type=float, help="mm/day (default 1.0)")
    p.set_defaults(func=cmd_indices)

    p = sub.add_parser("trend", help="cluster frequencies over sliding windows")
    p.add_argument("--clustering", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--json")
    p.add_argument("--config")
    p.add_argument("--first-year", type=int)
    p.add_argument("--window-length", type=int)
    p.add_argument("--step", type=int)
    p.add_argument("--no-extend", action="store_true")
    p.add_argument("--normalization", choices=["row", "column"])
    p.add_argument("--strict", action="store_true", help="fail on windowed years without a cluster")
    p.set_defaults(func=cmd_trend)

    p = sub.add_parser("pipeline", help="run every stage from one config file")
    p.add_argument("--config", required=True)
    p.add_argument("--input")
    p.add_argument("--output-dir")
    p.add_argument("--workers", type=int)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_pipeline)
    return ap


def _int_or_str(text):
    try:
        return int(text)
    except ValueError:
        return text


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except InputError as exc:
        print(f"rainwarp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"rainwarp {args.command}: failed: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"rainwarp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
