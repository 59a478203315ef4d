"""Command-line entry point: ``seqloc <subcommand> ...``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .baseline import RssFingerprintMap, default_survey_points, survey
from .config import MODES, TrackConfig, apply_scenario_overrides, load_config, split_config
from .errors import SeqLocError
from .evaluation import SWEEP_PARAMETERS, run_track, sweep, sweep_csv
from .logio import read_log, write_log
from .seqmap import FingerprintMap, build_map
from .simulator import Scenario, default_scenario, generate


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key=value config file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--scenario", type=Path, help="scenario JSON (default: built-in office)")


def _load(args) -> tuple[TrackConfig, Scenario]:
    raw = load_config(args.config) if args.config else {}
    cfg, over = split_config(raw)
    if getattr(args, "mode", None):
        cfg = replace(cfg, mode=args.mode)
    scenario = Scenario.load(args.scenario) if args.scenario else default_scenario()
    scenario = apply_scenario_overrides(scenario, over)
    if "seed" not in over:
        scenario = replace(scenario, seed=args.seed)
    return cfg, scenario


def cmd_build_map(args) -> None:
    cfg, scenario = _load(args)
    grid = args.grid_size if args.grid_size is not None else cfg.grid_size
    build_map(scenario.bounds, grid, scenario.aps).save(args.out)


def cmd_simulate(args) -> None:
    _, scenario = _load(args)
    if args.noiseless:
        scenario = scenario.noiseless()
    write_log(generate(scenario), args.out)
    if args.write_scenario:
        scenario.save(args.write_scenario)


def cmd_survey(args) -> None:
    cfg, scenario = _load(args)
    pts = default_survey_points(scenario, cfg.survey_points)
    survey(scenario, pts, cfg.survey_duration_s).save(args.out)


def _reference(cfg: TrackConfig, args):
    if cfg.mode == "baseline":
        if not args.survey:
            raise SeqLocError("baseline mode needs --survey")
        return RssFingerprintMap.load(args.survey)
    if args.map:
        return FingerprintMap.load(args.map)
    if cfg.mode != "imu":
        raise SeqLocError(f"{cfg.mode} mode needs --map")
    return None


def cmd_track(args) -> None:
    cfg, scenario = _load(args)
    report = run_track(_reference(cfg, args), read_log(args.log), cfg, seed=args.seed, bounds=scenario.bounds)
    report.write(args.out)
    s = report.summary
    print(f"mode={cfg.mode} mean={s['mean_error_m']:.3f} m median={s['median_error_m']:.3f} m "
          f"p90={s['p90_error_m']:.3f} m update={report.timing['mean_update_ms']:.2f} ms")


def cmd_sweep(args) -> None:
    cfg, scenario = _load(args)
    values = [float(v) for v in args.values.split(",")]
    table = sweep(args.parameter, values, cfg, scenario, args.repetitions, seed=args.seed, jobs=args.jobs)
    args.out.write_text(sweep_csv(table), encoding="utf-8")
    for row in table:
        print(f"{row['parameter']}={row['value']}: {row['mean_error_m']:.3f} +/- {row['std_error_m']:.3f} m")


def cmd_eval(args) -> None:
    """Track one log in every mode whose reference is available."""
    cfg, scenario = _load(args)
    records = read_log(args.log)
    fmap = FingerprintMap.load(args.map)
    lines = ["mode,mean_error_m,median_error_m,p90_error_m,mean_update_ms,max_update_ms"]
    for mode in MODES:
        if mode == "baseline" and not args.survey:
            continue
        ref = RssFingerprintMap.load(args.survey) if mode == "baseline" else fmap
        r = run_track(ref, records, replace(cfg, mode=mode), seed=args.seed, bounds=scenario.bounds)
        s, t = r.summary, r.timing
        lines.append(f"{mode},{s['mean_error_m']!r},{s['median_error_m']!r},{s['p90_error_m']!r},"
                     f"{t['mean_update_ms']!r},{t['max_update_ms']!r}")
        print(f"{mode:9s} mean={s['mean_error_m']:.3f} m")
    args.out.write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-map", help="fingerprint map from AP geometry")
    _common(p)
    p.add_argument("--grid-size", type=float)
    p.set_defaults(func=cmd_build_map)

    p = sub.add_parser("simulate", help="generate a measurement log")
    _common(p)
    p.add_argument("--noiseless", action="store_true", help="zero every noise source")
    p.add_argument("--write-scenario", type=Path, help="also save the scenario used")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("survey", help="simulate an RSS fingerprint survey for the baseline")
    _common(p)
    p.set_defaults(func=cmd_survey)

    for name, func, helptext in (
        ("track", cmd_track, "replay a log through the tracker"),
        ("eval", cmd_eval, "compare all modes on one log"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--log", type=Path, required=True)
        p.add_argument("--map", type=Path, required=(name == "eval"))
        p.add_argument("--survey", type=Path)
        if name == "track":
            p.add_argument("--mode", choices=MODES)
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="mean error over seeds for each parameter value")
    _common(p)
    p.add_argument("--parameter", required=True, choices=sorted(SWEEP_PARAMETERS))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--repetitions", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--mode", choices=MODES)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (SeqLocError, OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
