"""Pipeline orchestration and report artifacts (CSV tables and SVG heatmaps)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import pandas as pd

from . import io as wio
from .core import (
    DEFAULT_WT_STAR,
    DomainError,
    PipelineError,
    RegionOfInterest,
    SeasonWindow,
    ValidationError,
    WeatherType,
    WtselError,
    as_point,
    parse_wt_list,
)
from .frequencies import JointFrequencyField, build_joint
from .scores import (
    RangeBinRow,
    ScoreRow,
    WinnerMap,
    range_bins,
    score_correlations,
    score_trajectory,
    top_quantile_indicators,
    winner_map,
)
from .selection import FilterConfig, FilterOutcome, filter_trajectory
from .similarity import (
    ALL,
    D_OPT_OPTIONS,
    SimilarityField,
    as_similarity,
    d_opt,
    similarity_field,
)

# Approximate locations of seven reference points over Iberia, snapped to the
# default ROI lattice. They are read off a map, not taken from coordinates.
DEFAULT_KEY_POINTS: tuple[tuple[str, float, float], ...] = (
    ("northwest", -6.25, 42.5),
    ("north_central", -3.75, 42.5),
    ("central", -3.75, 40.0),
    ("central_east", -1.25, 40.0),
    ("southeast", -1.25, 37.5),
    ("southwest", -6.25, 37.5),
    ("mediterranean", 3.75, 40.0),
)

D_OPT_METRICS = ("overlap", "hellinger")
LOW_COLOUR = (247, 251, 255)
HIGH_COLOUR = (8, 48, 107)
UNDEFINED_COLOUR = "#bdbdbd"
WINNER_PALETTE = (
    "#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02",
    "#a6761d", "#666666", "#1f78b4", "#b2df8a", "#fb9a99", "#cab2d6",
)
CELL_PX = 64


# ---------------------------------------------------------------- heatmaps


def value_colour(value: float) -> str:
    """Linear ramp with endpoints fixed at 0 and 1; out-of-range values are clipped."""
    if value is None or math.isnan(value):
        return UNDEFINED_COLOUR
    t = min(max(float(value), 0.0), 1.0)
    rgb = [round(lo + (hi - lo) * t) for lo, hi in zip(LOW_COLOUR, HIGH_COLOUR)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _lattice(roi: RegionOfInterest):
    lons = sorted({p[0] for p in roi.points})
    lats = sorted({p[1] for p in roi.points}, reverse=True)
    return lons, lats


def emit_heatmap(obj: SimilarityField | WinnerMap, path, title: str | None = None) -> Path:
    """One ``<rect class="cell">`` per ROI point, north at the top."""
    roi = obj.roi
    lons, lats = _lattice(roi)
    top = 28
    width = CELL_PX * len(lons) + 2
    height = top + CELL_PX * len(lats) + 2
    is_winner = isinstance(obj, WinnerMap)
    if title is None:
        title = f"{'winner' if is_winner else obj.metric} {obj.mode}"
    palette: dict[str, str] = {}
    if is_winner:
        ids = sorted({w for w in obj.winners if w is not None})
        palette = {t: WINNER_PALETTE[k % len(WINNER_PALETTE)] for k, t in enumerate(ids)}
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<text x="2" y="18" font-size="13">{_escape(title)}</text>',
    ]
    for s, (lon, lat) in enumerate(roi.points):
        x = 1 + CELL_PX * lons.index(lon)
        y = top + CELL_PX * lats.index(lat)
        value = float(obj.values[s])
        if is_winner:
            label = obj.winners[s]
            fill = palette.get(label, UNDEFINED_COLOUR) if label else UNDEFINED_COLOUR
            text = [label or "none", "" if math.isnan(value) else f"{value:.3f}"]
            ink = "#ffffff"
        else:
            fill = value_colour(value)
            text = ["n/a" if math.isnan(value) else f"{value:.3f}"]
            ink = "#ffffff" if not math.isnan(value) and value > 0.55 else "#000000"
        out.append(
            f'<rect class="cell" data-lon="{wio.fmt_coord(lon)}" data-lat="{wio.fmt_coord(lat)}" '
            f'data-value="{wio.fmt_float(value)}" x="{x}" y="{y}" width="{CELL_PX}" '
            f'height="{CELL_PX}" fill="{fill}" stroke="#ffffff"/>'
        )
        for k, line in enumerate(t for t in text if t):
            out.append(
                f'<text x="{x + CELL_PX // 2}" y="{y + 26 + 14 * k}" font-size="9" '
                f'text-anchor="middle" fill="{ink}">{_escape(line[:14])}</text>'
            )
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------- key points


def key_point_profile(
    fields: Mapping[str, Mapping[str, SimilarityField]],
    points: Sequence[tuple[str, float, float]] = DEFAULT_KEY_POINTS,
) -> pd.DataFrame:
    """Similarity at named points, one row per (trajectory, point, mode).

    ``fields`` maps trajectory id to a mapping of mode label to field.
    """
    rows = []
    for traj, by_mode in fields.items():
        for name, lon, lat in points:
            for mode, fld in by_mode.items():
                pt = as_point(lon, lat)
                if pt not in fld.roi.points:
                    raise ValidationError(f"key point {name} {pt} is outside the ROI")
                rows.append((traj, name, pt[0], pt[1], mode, float(fld.values[fld.roi.index(pt)])))
    return pd.DataFrame(rows, columns=list(wio.KEY_POINT_HEADER))


def parse_key_points(text: str) -> tuple[tuple[str, float, float], ...]:
    """``name:lon:lat;name:lon:lat`` to key-point tuples."""
    out = []
    for item in text.split(";"):
        if not item.strip():
            continue
        parts = item.split(":")
        if len(parts) != 3:
            raise ValidationError(f"key point {item!r} is not name:lon:lat")
        try:
            out.append((parts[0].strip(), float(parts[1]), float(parts[2])))
        except ValueError:
            raise ValidationError(f"key point {item!r} has non-numeric coordinates") from None
    if not out:
        raise ValidationError("no key points given")
    return tuple(out)


def format_key_points(points) -> str:
    return ";".join(f"{n}:{wio.fmt_coord(lon)}:{wio.fmt_coord(lat)}" for n, lon, lat in points)


# ---------------------------------------------------------------- inputs


def trajectory_id(path) -> str:
    tid = wio.read_header(path).get("trajectory")
    return tid if tid else Path(path).stem


def load_joint(path, window: SeasonWindow | None) -> JointFrequencyField:
    """Joint rf from a joint-rf CSV or from a weather-type series CSV."""
    kind = wio.sniff_kind(path)
    if kind == "joint_rf":
        return wio.read_joint_rf(path)
    if kind == "wt_series":
        return build_joint(wio.read_wt_series(path), window)
    raise ValidationError(f"{path}: expected a weather-type series or joint rf file, got {kind}")


def resolve_models(paths: Sequence, exclude: Sequence = ()) -> list[Path]:
    """Expand directories to their ``*.csv`` files (sorted); keep files as given."""
    skip = {Path(p).resolve() for p in exclude}
    out: list[Path] = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            out.extend(sorted(q for q in p.glob("*.csv") if q.resolve() not in skip))
        elif p.is_file():
            out.append(p)
        else:
            raise ValidationError(f"model input {p} does not exist")
    if not out:
        raise ValidationError("no trajectories found")
    return out


# ---------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class RunConfig:
    ref: Path
    models: tuple[Path, ...]
    out: Path
    filter: FilterConfig = field(default_factory=FilterConfig)
    wt_star: tuple[WeatherType, ...] = DEFAULT_WT_STAR
    window: SeasonWindow = field(default_factory=SeasonWindow)
    key_points: tuple[tuple[str, float, float], ...] | None = None
    correlation: str = "pearson"
    norm: str = "abs"
    persist: bool = False
    heatmaps: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "ref", Path(self.ref))
        object.__setattr__(self, "models", tuple(Path(m) for m in self.models))
        object.__setattr__(self, "out", Path(self.out))
        object.__setattr__(self, "wt_star", parse_wt_list(self.wt_star))
        if self.correlation not in ("pearson", "spearman"):
            raise ValidationError(f"unknown correlation method {self.correlation!r}")
        if self.norm not in ("abs", "squared"):
            raise ValidationError(f"unknown persistence norm {self.norm!r}")

    @property
    def min_support(self) -> int:
        return self.filter.min_support

    def provenance(self) -> list[tuple[str, object]]:
        """Resolved settings echoed into every artifact; the output path is left out."""
        f = self.filter
        return [
            ("ref", self.ref.as_posix()),
            ("models", " ".join(m.as_posix() for m in self.models)),
            ("tsim", f.t_sim),
            ("limit", "auto" if f.limit is None else f.limit),
            ("condition", ",".join(w.name for w in f.conditioning_set)),
            ("metric", f.metric),
            ("subset", f.strategy.label),
            ("wt_star", ",".join(w.name for w in self.wt_star)),
            ("min_support", f.min_support),
            ("window", self.window.describe()),
            ("key_points", "default" if self.key_points is None else format_key_points(self.key_points)),
            ("correlation", self.correlation),
            ("norm", self.norm),
        ]


@dataclass
class TrajectoryResult:
    trajectory_id: str
    fields: dict[str, SimilarityField]
    overlap_fields: dict[str, SimilarityField]
    outcome: FilterOutcome
    scores: ScoreRow
    bins: list[RangeBinRow]
    d_opt: pd.DataFrame


@dataclass
class ReportBundle:
    ranking: list[ScoreRow]
    ledger: list[FilterOutcome]
    range_bins: list[RangeBinRow]
    winner_maps: list[WinnerMap]
    key_points: pd.DataFrame
    d_opt: dict[str, pd.DataFrame]
    correlations: pd.DataFrame | None
    indicators: pd.DataFrame
    paths: dict[str, Path] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)


def compare_fields(
    ref: JointFrequencyField, model: JointFrequencyField, config: FilterConfig, metric: str | None = None
) -> dict[str, SimilarityField]:
    """Daily plus one conditional field per conditioning type, keyed by mode label."""
    metric = metric or config.metric
    out = {}
    for wt in (None,) + tuple(config.conditioning_set):
        fld = similarity_field(ref, model, metric, wt, config.strategy, config.min_support)
        out[fld.mode] = fld
    return out


def d_opt_table(
    ref: JointFrequencyField,
    model: JointFrequencyField,
    modes: Sequence,
    min_support: int,
    metrics: Sequence[str] = D_OPT_METRICS,
    options=D_OPT_OPTIONS,
) -> pd.DataFrame:
    """D_opt of every subset option against the all-types baseline.

    Values are oriented so that larger means more similar (1 - Hellinger).
    Options that cannot be evaluated (empty subset, constant baseline) are NaN.
    """
    rows = []
    for metric in metrics:
        for mode in modes:
            base = similarity_field(ref, model, metric, mode, ALL, min_support)
            x = as_similarity(base.values, metric)
            for opt in options:
                try:
                    fld = similarity_field(ref, model, metric, mode, opt, min_support)
                    value = d_opt(as_similarity(fld.values, metric), x)
                except DomainError:
                    value = math.nan
                rows.append((opt.label, base.mode, metric, value))
    return pd.DataFrame(rows, columns=list(wio.D_OPT_HEADER))


def evaluate_trajectory(
    ref: JointFrequencyField, model: JointFrequencyField, tid: str, config: RunConfig
) -> TrajectoryResult:
    fc = config.filter
    fields = compare_fields(ref, model, fc)
    overlap_fields = fields if fc.metric == "overlap" else compare_fields(ref, model, fc, "overlap")
    daily = fields["daily"]
    conds = {f.conditioning_wt: f for f in list(fields.values())[1:]}
    outcome = filter_trajectory(daily, conds, fc, tid)
    row = score_trajectory(ref, model, tid, config.wt_star, fc.min_support, fc.strategy, config.norm)
    row.stage_counts = dict(zip(outcome.stages, outcome.counts))
    row.retained = outcome.retained
    bins = [range_bins(f, tid) for f in overlap_fields.values()]
    modes = (None,) + tuple(fc.conditioning_set)
    table = d_opt_table(ref, model, modes, fc.min_support)
    return TrajectoryResult(tid, fields, overlap_fields, outcome, row, bins, table)


def _safe_name(tid: str) -> str:
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in tid)


def run_pipeline(config: RunConfig) -> ReportBundle:
    """Frequencies, similarity, filter, scores and reports for one ensemble.

    Per-trajectory failures are collected; artifacts are written for the
    trajectories that succeeded and a :class:`PipelineError` listing every
    failure (stage and trajectory) is raised at the end.
    """
    prov = config.provenance()
    fc = config.filter
    model_paths = resolve_models(config.models, exclude=[config.ref])
    ref = load_joint(config.ref, config.window)
    n_points = ref.roi.n_points
    fc.resolved_limit(n_points)
    prov_limit = [(k, fc.resolved_limit(n_points) if k == "limit" else v) for k, v in prov]

    errors: list[str] = []
    results: list[TrajectoryResult] = []
    seen: dict[str, Path] = {}
    out = config.out
    for path in model_paths:
        stage = "load"
        tid = path.stem
        try:
            tid = trajectory_id(path)
            if tid in seen:
                raise ValidationError(f"trajectory id also used by {seen[tid]}")
            seen[tid] = path
            stage = "frequencies"
            model = load_joint(path, config.window)
            stage = "similarity"
            res = evaluate_trajectory(ref, model, tid, config)
        except WtselError as exc:
            errors.append(f"[{stage}] {tid}: {exc}")
            continue
        results.append(res)
        if config.persist:
            wio.write_joint_rf(model, out / "freq" / f"{_safe_name(tid)}.csv", tid, prov)
            wio.write_similarity_fields(
                list(res.fields.values()), out / "similarity" / f"{_safe_name(tid)}.csv", tid, prov
            )
    if not results:
        raise PipelineError("no trajectory could be evaluated:\n  " + "\n  ".join(errors))

    bundle = _assemble(results, config, ref)
    _write_bundle(bundle, results, config, prov_limit)
    if errors:
        raise PipelineError(
            f"{len(errors)} of {len(model_paths)} trajectories failed:\n  " + "\n  ".join(errors)
        )
    return bundle


def _assemble(results: Sequence[TrajectoryResult], config: RunConfig, ref) -> ReportBundle:
    notes = []
    retained = [r for r in results if r.outcome.retained]
    pool = retained or list(results)
    if not retained:
        notes.append("no trajectory retained; winner maps and key points use all trajectories")
    modes = list(results[0].fields)
    maps = [winner_map({r.trajectory_id: r.fields[m] for r in pool}, m) for m in modes]

    points = config.key_points
    if points is None:
        points = tuple(p for p in DEFAULT_KEY_POINTS if as_point(p[1], p[2]) in ref.roi.points)
        if len(points) < len(DEFAULT_KEY_POINTS):
            notes.append(f"{len(DEFAULT_KEY_POINTS) - len(points)} default key points outside the ROI skipped")
    profile = key_point_profile({r.trajectory_id: r.fields for r in pool}, points)

    rows = [r.scores for r in results]
    correlations = None
    if len(rows) >= 3:
        correlations = score_correlations(rows, config.correlation)
    else:
        notes.append("fewer than three trajectories; correlation matrix not computed")
    indicators = top_quantile_indicators({r.trajectory_id: r.overlap_fields["daily"] for r in results})
    return ReportBundle(
        ranking=rows,
        ledger=[r.outcome for r in results],
        range_bins=[b for r in results for b in r.bins],
        winner_maps=maps,
        key_points=profile,
        d_opt={r.trajectory_id: r.d_opt for r in results},
        correlations=correlations,
        indicators=indicators,
        notes=notes,
    )


def _write_bundle(bundle: ReportBundle, results, config: RunConfig, prov) -> None:
    out = config.out
    stages = bundle.ledger[0].stages
    p = bundle.paths
    p["ranking"] = wio.write_ranking(bundle.ranking, stages, out / "ranking.csv", prov)
    p["range_bins"] = wio.write_range_bins(bundle.range_bins, out / "range_bins.csv", prov)
    p["ledger"] = wio.write_ledger(bundle.ledger, out / "filter_ledger.csv", prov)
    p["winner_maps"] = wio.write_winner_maps(bundle.winner_maps, out / "winner_maps.csv", prov)
    p["key_points"] = wio.write_key_points(bundle.key_points, out / "key_points.csv", prov)
    for tid, table in bundle.d_opt.items():
        p[f"d_opt:{tid}"] = wio.write_d_opt(
            table, out / "d_opt" / f"{_safe_name(tid)}.csv", [("trajectory", tid)] + list(prov)
        )
    if bundle.correlations is not None:
        p["correlations"] = wio.write_correlations(bundle.correlations, out / "correlations.csv", prov)
    p["indicators"] = wio.write_indicators(bundle.indicators, out / "daily_indicators.csv", prov)
    if config.heatmaps:
        for m in bundle.winner_maps:
            name = m.mode.replace(":", "_")
            p[f"svg:{m.mode}"] = emit_heatmap(m, out / "maps" / f"winner_{name}.svg")
    if bundle.notes:
        text = "\n".join(wio.provenance_lines("notes", prov) + bundle.notes) + "\n"
        (out / "notes.txt").write_text(text, encoding="utf-8")
        p["notes"] = out / "notes.txt"


def read_bundle(out) -> dict[str, object]:
    """Re-parse every table in an output directory with this package's readers."""
    out = Path(out)
    data: dict[str, object] = {
        "ranking": wio.read_ranking(out / "ranking.csv"),
        "range_bins": wio.read_range_bins(out / "range_bins.csv"),
        "ledger": wio.read_ledger(out / "filter_ledger.csv"),
        "winner_maps": wio.read_winner_maps(out / "winner_maps.csv"),
        "key_points": wio.read_key_points(out / "key_points.csv"),
        "indicators": wio.read_indicators(out / "daily_indicators.csv"),
        "d_opt": {
            wio.read_header(f).get("trajectory", f.stem): wio.read_d_opt(f)
            for f in sorted((out / "d_opt").glob("*.csv"))
        },
    }
    if (out / "correlations.csv").exists():
        data["correlations"] = wio.read_correlations(out / "correlations.csv")
    return data


__all__ = [
    "DEFAULT_KEY_POINTS",
    "ReportBundle",
    "RunConfig",
    "compare_fields",
    "d_opt_table",
    "emit_heatmap",
    "key_point_profile",
    "load_joint",
    "read_bundle",
    "resolve_models",
    "run_pipeline",
    "value_colour",
]
