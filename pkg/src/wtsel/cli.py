"""Command-line entry point: ``wtsel <subcommand> [options]``.

Exit codes: 0 success, 1 validation or domain error, 2 pipeline or other error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from . import io as wio
from .classifier import ClassifierConfig, classify_series
from .core import (
    DEFAULT_ROI_LATS,
    DEFAULT_ROI_LONS,
    DomainError,
    PipelineError,
    RegionOfInterest,
    SeasonWindow,
    ValidationError,
    parse_wt_list,
)
from .frequencies import DEFAULT_MIN_SUPPORT, build_joint
from .report import (
    RunConfig,
    compare_fields,
    load_joint,
    parse_key_points,
    resolve_models,
    run_pipeline,
    trajectory_id,
)
from .scores import score_trajectory
from .selection import FilterConfig, filter_trajectory
from .similarity import METRICS, SubsetStrategy
from .synth import PERTURB_KINDS, perturb, random_spec, simulate, uniform_spec

EXIT_OK, EXIT_VALIDATION, EXIT_PIPELINE = 0, 1, 2


def _years(text: str) -> tuple[int, int]:
    try:
        a, b = (int(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"years must look like 1979:2005, got {text!r}") from None
    return a, b


def _months(text: str) -> frozenset[int]:
    try:
        return frozenset(int(m) for m in text.split(",") if m.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"months must be comma-separated integers, got {text!r}") from None


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _window_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--years", type=_years, default=(1979, 2005), help="first:last year (default 1979:2005)")
    p.add_argument("--months", type=_months, default=frozenset({6, 7, 8, 9}), help="season months (default 6,7,8,9)")


def _filter_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tsim", type=float, default=0.8, help="similarity threshold (default 0.8)")
    p.add_argument("--limit", type=int, default=None, help="points at or below tsim that eliminate (default ceil(N_S/3))")
    p.add_argument("--condition", default="PA,PC,PDNE,U", help="conditioning types in stage order")
    p.add_argument("--metric", default="overlap", choices=METRICS)
    p.add_argument("--subset", default="all", help="all|topK|cumP|minrf:T (e.g. top9, cum70, minrf:0.05)")
    p.add_argument("--min-support", type=int, default=DEFAULT_MIN_SUPPORT, help="minimum days behind a conditional")


def _ref_models(p: argparse.ArgumentParser) -> None:
    p.add_argument("--ref", required=True, help="reference series or joint-rf CSV")
    p.add_argument("--models", required=True, nargs="+", help="candidate CSV files or directories")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wtsel", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"wtsel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="daily weather types from a sea-level pressure CSV")
    p.add_argument("--slp", required=True, help="CSV with header date,lon,lat,slp_hpa")
    p.add_argument("--lons", type=_floats, default=DEFAULT_ROI_LONS, help="ROI longitudes")
    p.add_argument("--lats", type=_floats, default=DEFAULT_ROI_LATS, help="ROI latitudes")
    p.add_argument("--lon-span", type=float, default=10.0)
    p.add_argument("--lat-span", type=float, default=5.0)
    p.add_argument("--u-flow", type=float, default=6.0)
    p.add_argument("--u-vort", type=float, default=6.0)
    p.add_argument("--id", default=None, help="trajectory id (default: file stem)")
    p.add_argument("--out", required=True)

    p = sub.add_parser("freq", help="joint relative frequencies from a weather-type series")
    p.add_argument("series", help="CSV with header date,lon,lat,wt")
    _window_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("compare", help="per-point similarity fields for each candidate")
    _ref_models(p)
    _filter_args(p)
    _window_args(p)
    p.add_argument("--out", required=True, help="output directory, one CSV per trajectory")

    p = sub.add_parser("filter", help="sequential threshold filter ledger")
    _ref_models(p)
    _filter_args(p)
    _window_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("score", help="ranking table of regional scores")
    _ref_models(p)
    _filter_args(p)
    _window_args(p)
    p.add_argument("--wt-star", default="PA,PDNE,PC,U", help="relevant types for starred scores")
    p.add_argument("--norm", default="abs", choices=("abs", "squared"))
    p.add_argument("--out", required=True)

    p = sub.add_parser("simulate", help="synthetic series from a Markov chain")
    p.add_argument("--transition", default=None, help="CSV lon,lat,wt_prev,wt_today,prob (default: built-in random chain)")
    p.add_argument("--preset", default="random", choices=("random", "uniform"), help="chain used without --transition")
    p.add_argument("--preset-seed", type=int, default=0, help="seed that draws the preset chain")
    p.add_argument("--perturb", default=None, help="kind:delta, kind in " + ",".join(PERTURB_KINDS))
    p.add_argument("--perturb-seed", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--id", default=None)
    _window_args(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="run the whole pipeline and write every report artifact")
    _ref_models(p)
    _filter_args(p)
    _window_args(p)
    p.add_argument("--wt-star", default="PA,PDNE,PC,U")
    p.add_argument("--norm", default="abs", choices=("abs", "squared"))
    p.add_argument("--correlation", default="pearson", choices=("pearson", "spearman"))
    p.add_argument("--key-points", default=None, help="name:lon:lat;... (default: built-in seven points)")
    p.add_argument("--persist", action="store_true", help="also write joint rf and similarity intermediates")
    p.add_argument("--no-svg", action="store_true", help="skip SVG winner maps")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _window(args) -> SeasonWindow:
    return SeasonWindow(args.months, args.years[0], args.years[1])


def _filter_config(args) -> FilterConfig:
    return FilterConfig(
        t_sim=args.tsim,
        limit=args.limit,
        conditioning_set=parse_wt_list(args.condition),
        metric=args.metric,
        strategy=SubsetStrategy.parse(args.subset),
        min_support=args.min_support,
    )


def _provenance(args, skip=("out",)) -> list[tuple[str, object]]:
    items = [("command", args.command)]
    for key, value in sorted(vars(args).items()):
        if key in skip or key == "command":
            continue
        if isinstance(value, (frozenset, set)):
            value = ",".join(str(v) for v in sorted(value))
        elif isinstance(value, (list, tuple)):
            value = " ".join(str(v) for v in value)
        items.append((key, value))
    return items


def _cmd_classify(args) -> None:
    field = wio.read_slp(args.slp)
    roi = RegionOfInterest.box(args.lons, args.lats)
    config = ClassifierConfig(args.lon_span, args.lat_span, args.u_flow, args.u_vort)
    series = classify_series(field, roi, config, args.id or Path(args.slp).stem)
    wio.write_wt_series(series, args.out, _provenance(args))


def _cmd_freq(args) -> None:
    series = wio.read_wt_series(args.series)
    joint = build_joint(series, _window(args))
    wio.write_joint_rf(joint, args.out, series.trajectory_id, _provenance(args))


def _load_ensemble(args):
    ref = load_joint(args.ref, _window(args))
    for path in resolve_models(args.models, exclude=[args.ref]):
        tid = trajectory_id(path)
        try:
            yield tid, ref, load_joint(path, _window(args))
        except ValidationError as exc:
            raise ValidationError(f"trajectory {tid}: {exc}") from None


def _cmd_compare(args) -> None:
    config = _filter_config(args)
    out = Path(args.out)
    for tid, ref, model in _load_ensemble(args):
        fields = compare_fields(ref, model, config)
        wio.write_similarity_fields(list(fields.values()), out / f"{tid}.csv", tid, _provenance(args))


def _cmd_filter(args) -> None:
    config = _filter_config(args)
    outcomes = []
    for tid, ref, model in _load_ensemble(args):
        fields = compare_fields(ref, model, config)
        conds = {f.conditioning_wt: f for f in list(fields.values())[1:]}
        outcomes.append(filter_trajectory(fields["daily"], conds, config, tid))
    limit = outcomes[0].limit
    prov = [(k, limit if k == "limit" else v) for k, v in _provenance(args)]
    wio.write_ledger(outcomes, args.out, prov)


def _cmd_score(args) -> None:
    config = _filter_config(args)
    wt_star = parse_wt_list(args.wt_star)
    rows = []
    stages = config.stages
    for tid, ref, model in _load_ensemble(args):
        fields = compare_fields(ref, model, config)
        conds = {f.conditioning_wt: f for f in list(fields.values())[1:]}
        outcome = filter_trajectory(fields["daily"], conds, config, tid)
        row = score_trajectory(ref, model, tid, wt_star, config.min_support, config.strategy, args.norm)
        row.stage_counts = dict(zip(outcome.stages, outcome.counts))
        row.retained = outcome.retained
        rows.append(row)
    wio.write_ranking(rows, stages, args.out, _provenance(args))


def _cmd_simulate(args) -> None:
    window = _window(args)
    if args.transition:
        spec = wio.read_transition(args.transition, seed=args.seed)
    else:
        roi = RegionOfInterest.box(DEFAULT_ROI_LONS, DEFAULT_ROI_LATS)
        base = random_spec(roi, args.preset_seed) if args.preset == "random" else uniform_spec(roi)
        spec = base.with_seed(args.seed)
    if args.perturb:
        kind, _, delta = args.perturb.partition(":")
        try:
            delta = float(delta)
        except ValueError:
            raise ValidationError(f"--perturb expects kind:delta, got {args.perturb!r}") from None
        spec = perturb(spec, delta, kind, args.perturb_seed)
    tid = args.id or Path(args.out).stem
    wio.write_wt_series(simulate(spec, window, tid), args.out, _provenance(args, skip=("out", "id")))


def _cmd_report(args) -> None:
    config = RunConfig(
        ref=Path(args.ref),
        models=tuple(Path(m) for m in args.models),
        out=Path(args.out),
        filter=_filter_config(args),
        wt_star=parse_wt_list(args.wt_star),
        window=_window(args),
        key_points=parse_key_points(args.key_points) if args.key_points else None,
        correlation=args.correlation,
        norm=args.norm,
        persist=args.persist,
        heatmaps=not args.no_svg,
    )
    bundle = run_pipeline(config)
    retained = sum(1 for o in bundle.ledger if o.retained)
    print(f"{len(bundle.ledger)} trajectories evaluated, {retained} retained; reports in {args.out}")


COMMANDS = {
    "classify": _cmd_classify,
    "freq": _cmd_freq,
    "compare": _cmd_compare,
    "filter": _cmd_filter,
    "score": _cmd_score,
    "simulate": _cmd_simulate,
    "report": _cmd_report,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # Malformed arguments are validation errors; --help and --version exit 0.
        return EXIT_OK if exc.code in (0, None) else EXIT_VALIDATION
    try:
        COMMANDS[args.command](args)
    except (ValidationError, DomainError) as exc:
        print(f"wtsel {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PipelineError as exc:
        print(f"wtsel {args.command}: pipeline error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    except Exception as exc:  # noqa: BLE001 - report, never traceback, from the CLI
        print(f"wtsel {args.command}: unexpected error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PIPELINE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
