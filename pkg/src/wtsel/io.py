"""CSV readers and writers for every artifact the package consumes or emits.

Every written file starts with ``#`` comment lines: the artifact kind followed
by ``key: value`` provenance lines. Readers skip comment lines. Floats are
written with ``repr`` so values survive a round trip bit for bit; undefined
values are written as empty cells.
"""

from __future__ import annotations

import csv
import math
from io import StringIO
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .classifier import SlpField
from .core import (
    N_WT,
    GridSpec,
    RegionOfInterest,
    ValidationError,
    WeatherType,
    WtSeries,
    as_point,
    parse_wt,
)
from .frequencies import JointFrequencyField
from .scores import SCORE_NAMES, RangeBinRow, ScoreRow, WinnerMap
from .selection import FilterOutcome
from .similarity import SimilarityField, SubsetStrategy, parse_mode
from .synth import MarkovSpec, stationary_distribution

SERIES_HEADER = ("date", "lon", "lat", "wt")
JOINT_HEADER = ("lon", "lat", "wt_today", "wt_prev", "rf", "count")
SLP_HEADER = ("date", "lon", "lat", "slp_hpa")
TRANSITION_HEADER = ("lon", "lat", "wt_prev", "wt_today", "prob")
SIMILARITY_HEADER = ("lon", "lat", "metric", "mode", "strategy", "value", "defined")
WINNER_HEADER = ("lon", "lat", "mode", "winner", "value")
RANGE_BIN_HEADER = ("trajectory", "mode", "le_0.80", "gt_0.80_le_0.88", "gt_0.88_lt_0.95", "ge_0.95", "min", "max")
KEY_POINT_HEADER = ("trajectory", "point", "lon", "lat", "mode", "value")
D_OPT_HEADER = ("strategy", "mode", "metric", "d_opt")
JOINT_SUM_TOL = 1e-6

Provenance = Sequence[tuple[str, object]] | Mapping[str, object] | None


# ---------------------------------------------------------------- formatting


def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x + 0.0)


def fmt_coord(x) -> str:
    return repr(float(x) + 0.0)


def _fmt_opt_int(x) -> str:
    return "" if x is None else str(int(x))


def _fmt_bool(x) -> str:
    return "" if x is None else ("true" if x else "false")


def _parse_bool(text: str, where: str) -> bool | None:
    t = text.strip().lower()
    if t == "":
        return None
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValidationError(f"{where}: cannot parse boolean {text!r}")


def provenance_lines(kind: str, provenance: Provenance = None) -> list[str]:
    items = list(provenance.items()) if isinstance(provenance, Mapping) else list(provenance or [])
    lines = [f"# wtsel {kind}"]
    for key, value in items:
        text = str(value).replace("\n", " ")
        lines.append(f"# {key}: {text}")
    return lines


def _write(path, kind: str, header: Sequence[str], rows: Iterable[str], provenance: Provenance) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = provenance_lines(kind, provenance) + [",".join(header)]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(body))
        fh.write("\n")
        for line in rows:
            fh.write(line)
            fh.write("\n")
    return path


def read_header(path) -> dict[str, str]:
    """Provenance ``key: value`` pairs plus ``kind`` from a file's comment block."""
    out: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            text = line[1:].strip()
            if text.startswith("wtsel ") and "kind" not in out:
                out["kind"] = text[6:].strip()
            elif ":" in text:
                key, value = text.split(":", 1)
                out[key.strip()] = value.strip()
    return out


def first_data_line(path) -> str:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip() and not line.startswith("#"):
                return line.strip()
    return ""


class _Table:
    """Non-comment rows of a CSV with their 1-based file line numbers."""

    def __init__(self, path, expected: Sequence[str]):
        self.path = Path(path)
        try:
            text = self.path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read {self.path}: {exc.strerror}") from None
        lines = text.splitlines()
        data = [(k + 1, ln) for k, ln in enumerate(lines) if ln.strip() and not ln.startswith("#")]
        if not data:
            raise ValidationError(f"{self.path}: empty file, expected header {','.join(expected)}")
        header_line, header = data[0]
        got = tuple(h.strip() for h in next(csv.reader([header])))
        if got != tuple(expected):
            raise ValidationError(
                f"{self.path} line {header_line}: header {','.join(got)!r}, "
                f"expected {','.join(expected)!r}"
            )
        self.header = got
        self.line_numbers = np.array([k for k, _ in data[1:]], dtype=np.int64)
        body = [ln for _, ln in data[1:]]
        width = len(expected)
        # Fast path through the C parser; a short-row or long-row file falls
        # back to the csv module so the error can name the offending line.
        frame = None
        if body:
            try:
                frame = pd.read_csv(
                    StringIO("\n".join(body)),
                    header=None,
                    names=list(range(width)),
                    dtype=str,
                    keep_default_na=False,
                    na_filter=False,
                    engine="c",
                )
            except pd.errors.ParserError:
                frame = None
        if frame is not None and len(frame) == len(body) and _row_widths_ok(body, width):
            cols = [frame[c].to_numpy(dtype=object) for c in range(width)]
        else:
            rows = list(csv.reader(body))
            for k, row in enumerate(rows):
                if len(row) != width:
                    raise ValidationError(
                        f"{self.path} line {self.line_numbers[k]}: expected {width} fields, "
                        f"got {len(row)}"
                    )
            cols = [np.array([r[c] for r in rows], dtype=object) for c in range(width)]
        self.n_rows = len(body)
        self.columns = {name: cols[c] for c, name in enumerate(expected)}
        self._rows = None

    @property
    def rows(self) -> list[list[str]]:
        if self._rows is None:
            self._rows = [list(r) for r in zip(*self.columns.values())]
        return self._rows

    def __len__(self) -> int:
        return self.n_rows

    def where(self, k: int) -> str:
        return f"{self.path} line {self.line_numbers[k]}"

    def _blank(self, name: str) -> np.ndarray:
        return self.columns[name] == ""

    def require(self, name: str) -> np.ndarray:
        empty = np.flatnonzero(self._blank(name))
        if empty.size:
            raise ValidationError(f"{self.where(int(empty[0]))}: missing value for {name}")
        return self.columns[name]

    def floats(self, name: str, allow_blank: bool = False) -> np.ndarray:
        col = self.columns[name] if allow_blank else self.require(name)
        blank = self._blank(name)
        try:
            out = np.where(blank, "nan", col).astype(float)
            ok = True
        except ValueError:
            ok = False
        if ok and not np.any(np.isinf(out) | (np.isnan(out) & ~blank)):
            return out
        for k, token in enumerate(col):
            if blank[k]:
                continue
            try:
                v = float(token)
            except ValueError:
                v = math.nan
            if not math.isfinite(v):
                raise ValidationError(f"{self.where(k)}: {name} {token!r} is not a finite number")
        raise AssertionError("unreachable")

    def ints(self, name: str) -> np.ndarray:
        vals = self.floats(name)
        bad = vals != np.round(vals)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise ValidationError(f"{self.where(k)}: {name} {self.columns[name][k]!r} is not an integer")
        return vals.astype(np.int64)

    def wts(self, name: str) -> np.ndarray:
        col = self.require(name)
        try:
            out = col.astype(np.int64)
        except ValueError:
            out = np.zeros(len(col), dtype=np.int64)
            for k, token in enumerate(col):
                try:
                    out[k] = parse_wt(token).value
                except ValueError:
                    raise ValidationError(
                        f"{self.where(k)}: {name} {token!r} is not a weather type in 1..{N_WT}"
                    ) from None
        bad = (out < 1) | (out > N_WT)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise ValidationError(f"{self.where(k)}: {name} {col[k]} outside 1..{N_WT}")
        return out

    def dates(self, name: str) -> np.ndarray:
        col = self.require(name)
        try:
            return col.astype(str).astype("datetime64[D]")
        except ValueError:
            for k, token in enumerate(col):
                try:
                    np.datetime64(token, "D")
                except ValueError:
                    raise ValidationError(f"{self.where(k)}: malformed date {token!r}") from None
            raise

    def points(self) -> tuple[list[tuple[float, float]], np.ndarray]:
        """Distinct (lon, lat) in first-appearance order and each row's point index."""
        lons = np.round(self.floats("lon"), 6) + 0.0
        lats = np.round(self.floats("lat"), 6) + 0.0
        lon_code, lon_uniq = pd.factorize(lons)
        lat_code, lat_uniq = pd.factorize(lats)
        pidx, pairs = pd.factorize(lon_code.astype(np.int64) * len(lat_uniq) + lat_code)
        points = [
            as_point(lon_uniq[k // len(lat_uniq)], lat_uniq[k % len(lat_uniq)]) for k in pairs
        ]
        return points, pidx


def _row_widths_ok(body: Sequence[str], width: int) -> bool:
    # Quoted fields never occur in these formats; a long row already fails
    # the parser, so a matching total comma count rules out short rows.
    return sum(ln.count(",") for ln in body) == (width - 1) * len(body)


def _check_unique(table: _Table, key: np.ndarray, what: str) -> None:
    _, first, counts = np.unique(key, return_index=True, return_counts=True)
    if np.any(counts > 1):
        dup_key = np.flatnonzero(counts > 1)[0]
        rows = np.flatnonzero(key == key[first[dup_key]])
        raise ValidationError(f"{table.where(int(rows[1]))}: duplicate {what}")


# ---------------------------------------------------------------- WT series


def write_wt_series(series: WtSeries, path, provenance: Provenance = None) -> Path:
    prov = [("trajectory", series.trajectory_id)] + _items(provenance)
    date_s = [str(d) for d in series.dates]
    point_s = [f"{fmt_coord(lon)},{fmt_coord(lat)}" for lon, lat in series.points]
    vals = series.values
    rows = (
        f"{date_s[d]},{point_s[s]},{int(vals[d, s])}"
        for d in range(len(date_s))
        for s in range(len(point_s))
    )
    return _write(path, "wt_series", SERIES_HEADER, rows, prov)


def read_wt_series(path, trajectory_id: str | None = None) -> WtSeries:
    table = _Table(path, SERIES_HEADER)
    if len(table) == 0:
        raise ValidationError(f"{table.path}: no data rows")
    dates = table.dates("date")
    wt = table.wts("wt")
    points, pidx = table.points()
    uniq_dates, didx = np.unique(dates, return_inverse=True)
    didx = didx.reshape(-1)
    _check_unique(table, didx * len(points) + pidx, "(date, lon, lat) cell")
    values = np.zeros((uniq_dates.size, len(points)), dtype=np.int8)
    values[didx, pidx] = wt
    if len(table) != values.size:
        missing = np.argwhere(values == 0)[0]
        raise ValidationError(
            f"{table.path}: missing cell for date {uniq_dates[missing[0]]} "
            f"at point {points[missing[1]]}"
        )
    tid = trajectory_id or read_header(path).get("trajectory") or Path(path).stem
    return WtSeries(tid, tuple(points), uniq_dates, values)


def _items(provenance: Provenance) -> list[tuple[str, object]]:
    if provenance is None:
        return []
    return list(provenance.items()) if isinstance(provenance, Mapping) else list(provenance)


# ---------------------------------------------------------------- joint rf


def write_joint_rf(
    joint: JointFrequencyField, path, trajectory_id: str = "", provenance: Provenance = None
) -> Path:
    prov = [("trajectory", trajectory_id)] + _items(provenance)

    def rows():
        for s, (lon, lat) in enumerate(joint.roi.points):
            pt = f"{fmt_coord(lon)},{fmt_coord(lat)}"
            nz = np.argwhere(joint.rf[s] > 0)
            for i, j in nz:
                count = "" if joint.counts is None else str(int(joint.counts[s, i, j]))
                yield f"{pt},{i + 1},{j + 1},{fmt_float(joint.rf[s, i, j])},{count}"

    return _write(path, "joint_rf", JOINT_HEADER, rows(), prov)


def read_joint_rf(path) -> JointFrequencyField:
    table = _Table(path, JOINT_HEADER)
    if len(table) == 0:
        raise ValidationError(f"{table.path}: no data rows")
    points, pidx = table.points()
    today = table.wts("wt_today") - 1
    prev = table.wts("wt_prev") - 1
    rf_vals = table.floats("rf")
    if np.any(rf_vals < 0):
        k = int(np.flatnonzero(rf_vals < 0)[0])
        raise ValidationError(f"{table.where(k)}: negative rf")
    _check_unique(table, (pidx * N_WT + today) * N_WT + prev, "(point, wt_today, wt_prev) cell")
    count_col = table.columns["count"]
    has_count = np.char.str_len(count_col.astype(str)) > 0
    if has_count.any() and not has_count.all():
        k = int(np.flatnonzero(~has_count)[0])
        raise ValidationError(f"{table.where(k)}: count must be given on every row or none")
    n = len(points)
    rf = np.zeros((n, N_WT, N_WT))
    rf[pidx, today, prev] = rf_vals
    sums = rf.sum(axis=(1, 2))
    bad = np.flatnonzero(np.abs(sums - 1.0) > JOINT_SUM_TOL)
    if bad.size:
        s = int(bad[0])
        raise ValidationError(
            f"{table.path}: joint rf at point {points[s]} sums to {sums[s]:.6g}, not 1"
        )
    roi = RegionOfInterest(tuple(points))
    if not has_count.all():
        return JointFrequencyField(roi, rf, np.full(n, np.nan), None)
    counts = np.zeros((n, N_WT, N_WT), dtype=np.int64)
    counts[pidx, today, prev] = table.ints("count")
    return JointFrequencyField(roi, rf, counts.sum(axis=(1, 2)).astype(float), counts)


# ---------------------------------------------------------------- SLP


def write_slp(field: SlpField, path, provenance: Provenance = None) -> Path:
    grid = field.grid

    def rows():
        for d, date in enumerate(field.dates):
            for iy, lat in enumerate(grid.lat_values):
                for ix, lon in enumerate(grid.lon_values):
                    yield f"{date},{fmt_coord(lon)},{fmt_coord(lat)},{fmt_float(field.pressure[d, iy, ix])}"

    return _write(path, "slp", SLP_HEADER, rows(), provenance)


def read_slp(path) -> SlpField:
    table = _Table(path, SLP_HEADER)
    if len(table) == 0:
        raise ValidationError(f"{table.path}: no data rows")
    dates = table.dates("date")
    lons = np.round(table.floats("lon"), 6) + 0.0
    lats = np.round(table.floats("lat"), 6) + 0.0
    slp = table.floats("slp_hpa")
    grid = GridSpec.from_axes(lons, lats)
    uniq_dates, didx = np.unique(dates, return_inverse=True)
    ix = np.searchsorted(np.asarray(grid.lon_values), lons)
    iy = np.searchsorted(np.asarray(grid.lat_values), lats)
    nlat, nlon = grid.shape
    key = (didx.reshape(-1) * nlat + iy) * nlon + ix
    _check_unique(table, key, "(date, lon, lat) cell")
    if len(table) != uniq_dates.size * nlat * nlon:
        raise ValidationError(
            f"{table.path}: {len(table)} rows do not cover {uniq_dates.size} dates x "
            f"{nlat} x {nlon} grid"
        )
    pressure = np.empty((uniq_dates.size, nlat, nlon))
    pressure.reshape(-1)[key] = slp
    return SlpField(grid, uniq_dates, pressure)


# ---------------------------------------------------------------- transitions


def write_transition(spec: MarkovSpec, path, provenance: Provenance = None) -> Path:
    def rows():
        for s, (lon, lat) in enumerate(spec.roi.points):
            pt = f"{fmt_coord(lon)},{fmt_coord(lat)}"
            for j, i in np.argwhere(spec.transition[s] > 0):
                yield f"{pt},{j + 1},{i + 1},{fmt_float(spec.transition[s, j, i])}"

    return _write(path, "transition", TRANSITION_HEADER, rows(), provenance)


def read_transition(path, seed: int = 0, initial: np.ndarray | None = None) -> MarkovSpec:
    """Transition CSV to a spec; the initial law defaults to each chain's stationary law."""
    table = _Table(path, TRANSITION_HEADER)
    if len(table) == 0:
        raise ValidationError(f"{table.path}: no data rows")
    points, pidx = table.points()
    prev = table.wts("wt_prev") - 1
    today = table.wts("wt_today") - 1
    prob = table.floats("prob")
    if np.any(prob < 0):
        k = int(np.flatnonzero(prob < 0)[0])
        raise ValidationError(f"{table.where(k)}: negative probability")
    _check_unique(table, (pidx * N_WT + prev) * N_WT + today, "(point, wt_prev, wt_today) cell")
    t = np.zeros((len(points), N_WT, N_WT))
    t[pidx, prev, today] = prob
    sums = t.sum(axis=2)
    bad = np.argwhere(np.abs(sums - 1.0) > JOINT_SUM_TOL)
    if bad.size:
        s, j = bad[0]
        raise ValidationError(
            f"{table.path}: transition row {WeatherType(j + 1).name} at point {points[s]} "
            f"sums to {sums[s, j]:.6g}, not 1"
        )
    # Rows within the file tolerance are renormalised; exact rows are kept bit for bit.
    t = np.where(np.abs(sums - 1.0)[:, :, None] > 1e-12, t / sums[:, :, None], t)
    p0 = stationary_distribution(t) if initial is None else np.asarray(initial, dtype=float)
    return MarkovSpec(RegionOfInterest(tuple(points)), t, p0, seed)


# ---------------------------------------------------------------- similarity fields


def write_similarity_fields(
    fields: Sequence[SimilarityField], path, trajectory_id: str = "", provenance: Provenance = None
) -> Path:
    prov = [("trajectory", trajectory_id)] + _items(provenance)

    def rows():
        for f in fields:
            for (lon, lat), v in zip(f.roi.points, f.values):
                defined = "0" if math.isnan(v) else "1"
                yield (
                    f"{fmt_coord(lon)},{fmt_coord(lat)},{f.metric},{f.mode},"
                    f"{f.strategy.label},{fmt_float(v)},{defined}"
                )

    return _write(path, "similarity", SIMILARITY_HEADER, rows(), prov)


def read_similarity_fields(path) -> list[SimilarityField]:
    """Fields in file order, one per (metric, mode, strategy) block."""
    table = _Table(path, SIMILARITY_HEADER)
    if len(table) == 0:
        raise ValidationError(f"{table.path}: no data rows")
    values = table.floats("value", allow_blank=True)
    defined = table.ints("defined")
    mismatch = (defined == 1) == np.isnan(values)
    if mismatch.any():
        k = int(np.flatnonzero(mismatch)[0])
        raise ValidationError(f"{table.where(k)}: value and defined flag disagree")
    lons, lats = table.floats("lon"), table.floats("lat")
    blocks: dict[tuple[str, str, str], list[int]] = {}
    for k, row in enumerate(table.rows):
        blocks.setdefault((row[2].strip(), row[3].strip(), row[4].strip()), []).append(k)
    out = []
    for (metric, mode, strategy), ks in blocks.items():
        pts = tuple(as_point(lons[k], lats[k]) for k in ks)
        try:
            roi = RegionOfInterest(pts)
            strat = SubsetStrategy.parse(strategy)
            parse_mode(mode)
        except ValueError as exc:
            raise ValidationError(f"{table.where(ks[0])}: {exc}") from None
        out.append(SimilarityField(roi, metric, mode, strat, values[ks]))
    return out


# ---------------------------------------------------------------- ranking


def ranking_header(stages: Sequence[str]) -> tuple[str, ...]:
    return (
        ("trajectory",)
        + SCORE_NAMES
        + ("coverage",)
        + tuple(f"n_below_{s}" for s in stages)
        + ("retained",)
    )


def write_ranking(
    rows: Sequence[ScoreRow], stages: Sequence[str], path, provenance: Provenance = None
) -> Path:
    def lines():
        for r in rows:
            scores = ",".join(fmt_float(r.score(n)) for n in SCORE_NAMES)
            counts = ",".join(_fmt_opt_int(r.stage_counts.get(s)) for s in stages)
            yield f"{r.trajectory_id},{scores},{fmt_float(r.coverage)},{counts},{_fmt_bool(r.retained)}"

    return _write(path, "ranking", ranking_header(stages), lines(), provenance)


def _stages_from_header(path, prefix: str) -> tuple[str, ...]:
    header = next(csv.reader([first_data_line(path)]))
    return tuple(h[len(prefix):] for h in header if h.startswith(prefix))


def read_ranking(path) -> list[ScoreRow]:
    stages = _stages_from_header(path, "n_below_")
    table = _Table(path, ranking_header(stages))
    scores = {n: table.floats(n, allow_blank=True) for n in SCORE_NAMES + ("coverage",)}
    counts = {s: table.columns[f"n_below_{s}"] for s in stages}
    out = []
    for k, row in enumerate(table.rows):
        stage_counts = {s: (int(counts[s][k]) if counts[s][k] != "" else None) for s in stages}
        out.append(
            ScoreRow(
                trajectory_id=row[0],
                **{n: float(scores[n][k]) for n in SCORE_NAMES},
                coverage=float(scores["coverage"][k]),
                stage_counts=stage_counts,
                retained=_parse_bool(row[-1], table.where(k)),
            )
        )
    return out


# ---------------------------------------------------------------- range bins


def write_range_bins(rows: Sequence[RangeBinRow], path, provenance: Provenance = None) -> Path:
    lines = (
        f"{r.trajectory_id},{r.mode},{','.join(str(c) for c in r.counts)},"
        f"{fmt_float(r.min)},{fmt_float(r.max)}"
        for r in rows
    )
    return _write(path, "range_bins", RANGE_BIN_HEADER, lines, provenance)


def read_range_bins(path) -> list[RangeBinRow]:
    table = _Table(path, RANGE_BIN_HEADER)
    counts = [table.ints(h) for h in RANGE_BIN_HEADER[2:6]]
    mins, maxs = table.floats("min"), table.floats("max")
    return [
        RangeBinRow(
            row[0],
            row[1],
            tuple(int(c[k]) for c in counts),
            float(mins[k]),
            float(maxs[k]),
        )
        for k, row in enumerate(table.rows)
    ]


# ---------------------------------------------------------------- filter ledger


def ledger_header(stages: Sequence[str]) -> tuple[str, ...]:
    return ("trajectory",) + tuple(f"stage_{s}" for s in stages) + ("retained", "eliminated_at")


def write_ledger(outcomes: Sequence[FilterOutcome], path, provenance: Provenance = None) -> Path:
    if not outcomes:
        raise ValidationError("filter ledger has no rows")
    stages = outcomes[0].stages
    lines = (
        f"{o.trajectory_id},{','.join(_fmt_opt_int(c) for c in o.counts)},"
        f"{_fmt_bool(o.retained)},{o.eliminated_at or ''}"
        for o in outcomes
    )
    return _write(path, "filter_ledger", ledger_header(stages), lines, provenance)


def read_ledger(path) -> list[FilterOutcome]:
    stages = _stages_from_header(path, "stage_")
    table = _Table(path, ledger_header(stages))
    limit = read_header(path).get("limit")
    out = []
    for k, row in enumerate(table.rows):
        counts = tuple(int(c) if c != "" else None for c in row[1 : 1 + len(stages)])
        retained = _parse_bool(row[-2], table.where(k))
        eliminated = row[-1] or None
        kwargs = {} if limit in (None, "", "auto") else {"limit": int(limit)}
        out.append(FilterOutcome(row[0], stages, counts, bool(retained), eliminated, **kwargs))
    return out


# ---------------------------------------------------------------- winner maps


def write_winner_maps(maps: Sequence[WinnerMap], path, provenance: Provenance = None) -> Path:
    def lines():
        for m in maps:
            for (lon, lat), w, v in zip(m.roi.points, m.winners, m.values):
                yield f"{fmt_coord(lon)},{fmt_coord(lat)},{m.mode},{w or ''},{fmt_float(v)}"

    return _write(path, "winner_map", WINNER_HEADER, lines(), provenance)


def read_winner_maps(path) -> list[WinnerMap]:
    table = _Table(path, WINNER_HEADER)
    values = table.floats("value", allow_blank=True)
    lons, lats = table.floats("lon"), table.floats("lat")
    blocks: dict[str, list[int]] = {}
    for k, row in enumerate(table.rows):
        blocks.setdefault(row[2], []).append(k)
    out = []
    for mode, ks in blocks.items():
        roi = RegionOfInterest(tuple(as_point(lons[k], lats[k]) for k in ks))
        winners = tuple(table.rows[k][3] or None for k in ks)
        out.append(WinnerMap(roi, mode, winners, values[ks]))
    return out


# ---------------------------------------------------------------- key points, D_opt, correlations


def write_key_points(frame: pd.DataFrame, path, provenance: Provenance = None) -> Path:
    lines = (
        f"{r.trajectory},{r.point},{fmt_coord(r.lon)},{fmt_coord(r.lat)},{r.mode},{fmt_float(r.value)}"
        for r in frame.itertuples(index=False)
    )
    return _write(path, "key_points", KEY_POINT_HEADER, lines, provenance)


def read_key_points(path) -> pd.DataFrame:
    table = _Table(path, KEY_POINT_HEADER)
    return pd.DataFrame(
        {
            "trajectory": table.columns["trajectory"].astype(str),
            "point": table.columns["point"].astype(str),
            "lon": table.floats("lon"),
            "lat": table.floats("lat"),
            "mode": table.columns["mode"].astype(str),
            "value": table.floats("value", allow_blank=True),
        },
        columns=list(KEY_POINT_HEADER),
    )


def write_d_opt(frame: pd.DataFrame, path, provenance: Provenance = None) -> Path:
    lines = (
        f"{r.strategy},{r.mode},{r.metric},{fmt_float(r.d_opt)}"
        for r in frame.itertuples(index=False)
    )
    return _write(path, "d_opt", D_OPT_HEADER, lines, provenance)


def read_d_opt(path) -> pd.DataFrame:
    table = _Table(path, D_OPT_HEADER)
    return pd.DataFrame(
        {
            "strategy": table.columns["strategy"].astype(str),
            "mode": table.columns["mode"].astype(str),
            "metric": table.columns["metric"].astype(str),
            "d_opt": table.floats("d_opt", allow_blank=True),
        },
        columns=list(D_OPT_HEADER),
    )


def write_correlations(frame: pd.DataFrame, path, provenance: Provenance = None) -> Path:
    names = list(frame.columns)
    lines = (
        f"{name},{','.join(fmt_float(v) for v in frame.loc[name].to_numpy(dtype=float))}"
        for name in frame.index
    )
    return _write(path, "correlations", ["score"] + names, lines, provenance)


def read_correlations(path) -> pd.DataFrame:
    header = tuple(next(csv.reader([first_data_line(path)])))
    if not header or header[0] != "score":
        raise ValidationError(f"{path}: correlation matrix must start with a 'score' column")
    table = _Table(path, header)
    names = list(header[1:])
    index = list(table.columns["score"].astype(str))
    if index != names:
        raise ValidationError(f"{path}: row labels {index} do not match columns {names}")
    data = np.column_stack([table.floats(n, allow_blank=True) for n in names]) if len(table) else np.empty((0, len(names)))
    return pd.DataFrame(data, index=index, columns=names)


def write_indicators(frame: pd.DataFrame, path, provenance: Provenance = None) -> Path:
    """Daily-overlap quantile indicators, one row per trajectory."""
    cols = list(frame.columns)
    flags = [c for c in cols if c.startswith("top_")]
    lines = (
        f"{tid},"
        + ",".join(
            str(int(frame.at[tid, c])) if c in flags else fmt_float(frame.at[tid, c]) for c in cols
        )
        for tid in frame.index
    )
    return _write(path, "indicators", ["trajectory"] + cols, lines, provenance)


def read_indicators(path) -> pd.DataFrame:
    header = tuple(next(csv.reader([first_data_line(path)])))
    if not header or header[0] != "trajectory":
        raise ValidationError(f"{path}: indicator table must start with a 'trajectory' column")
    table = _Table(path, header)
    data = {}
    for c in header[1:]:
        data[c] = table.ints(c) if c.startswith("top_") else table.floats(c, allow_blank=True)
    return pd.DataFrame(data, index=list(table.columns["trajectory"].astype(str)))


def sniff_kind(path) -> str:
    """Artifact kind from the provenance block, else from the header row."""
    kind = read_header(path).get("kind")
    if kind:
        return kind
    header = tuple(h.strip() for h in next(csv.reader([first_data_line(path) or ""]), []))
    by_header = {
        SERIES_HEADER: "wt_series",
        JOINT_HEADER: "joint_rf",
        SLP_HEADER: "slp",
        TRANSITION_HEADER: "transition",
        SIMILARITY_HEADER: "similarity",
    }
    if header not in by_header:
        raise ValidationError(f"{path}: unrecognised header {','.join(header)!r}")
    return by_header[header]


__all__ = [name for name in dir() if name.startswith(("read_", "write_"))] + [
    "fmt_float",
    "provenance_lines",
    "sniff_kind",
]
