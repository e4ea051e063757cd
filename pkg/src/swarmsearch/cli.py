"""Command-line surface.

    swarmsearch run -c config.json --seed 7 --out runs/demo
    swarmsearch sweep -c sweep.json --jobs 4 --out runs/sweep1
    swarmsearch metrics -c config.json --seed 7 --out runs/m1
    swarmsearch frames -c config.json --seed 7 --ticks 500 --out runs/f1

`run` executes one simulation and writes its metrics report; `sweep` runs a
SweepSpec and writes the summary table plus its JSON twin; `metrics` runs in
metrics mode (targets removed, fixed tick budget) with component and coverage
recording; `frames` records the trajectory and dumps per-tick frame records.
Every command writes a manifest.json last, as the commit marker.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io as sio
from .engine import SimConfig, run_simulation
from .experiments import SweepSpec, run_sweep
from .metrics import build_report


def _read_config(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _apply_seed(config: SimConfig, seed) -> SimConfig:
    if seed is not None:
        return config.replace(seed=seed)
    if config.seed is None:
        raise sio.ConfigError("missing required key: 'seed' "
                              "(set it in the config file or pass --seed)")
    return config


def _cmd_run(args) -> int:
    text = _read_config(args.config)
    config = sio.parse_config(text)
    if isinstance(config, SweepSpec):
        raise sio.ConfigError("'run' expects a simulation config, got a sweep spec")
    config = _apply_seed(config, args.seed)
    log = run_simulation(config)
    report = build_report(log)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    files = []
    report_path = out / "report.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2,
                                      sort_keys=True) + "\n")
    files.append(report_path)
    config_path = out / "config.json"
    config_path.write_text(sio.serialize_config(config))
    files.append(config_path)
    if config.record_trajectory:
        files.append(sio.write_frames(log, out / "frames.tsv"))
    sio.write_manifest(out, sio.serialize_config(config), config.seed, files)
    print(f"run: {log.n_ticks} ticks, {log.arrived_count}/{log.n} arrived "
          f"-> {report_path}")
    return 0


def _cmd_sweep(args) -> int:
    spec = sio.parse_config(_read_config(args.config))
    if isinstance(spec, SimConfig):
        raise sio.ConfigError("'sweep' expects a sweep spec with axes")
    result = run_sweep(spec, jobs=args.jobs, cache_dir=args.cache_dir)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = sio.write_summary(result, out / "summary.tsv")
    config_path = out / "sweep.json"
    config_path.write_text(sio.serialize_config(spec))
    twin = summary.with_suffix(summary.suffix + ".json")
    sio.write_manifest(out, sio.serialize_config(spec), spec.base_seed,
                       [summary, twin, config_path])
    print(f"sweep: {len(result.rows)} instances -> {summary}")
    return 0


def _cmd_metrics(args) -> int:
    config = sio.parse_config(_read_config(args.config))
    if isinstance(config, SweepSpec):
        raise sio.ConfigError("'metrics' expects a simulation config")
    config = _apply_seed(config, args.seed)
    config = config.replace(targets_enabled=False, record_components=True,
                            record_coverage=True)
    if args.ticks is not None:
        config = config.replace(metrics_ticks=args.ticks)
    log = run_simulation(config)
    report = build_report(log, cover_fractions=tuple(args.cover_fraction))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "metrics.json"
    report_path.write_text(json.dumps(report.to_dict(), indent=2,
                                      sort_keys=True) + "\n")
    config_path = out / "config.json"
    config_path.write_text(sio.serialize_config(config))
    sio.write_manifest(out, sio.serialize_config(config), config.seed,
                       [report_path, config_path])
    print(f"metrics: {log.n_ticks} ticks -> {report_path}")
    return 0


def _cmd_frames(args) -> int:
    config = sio.parse_config(_read_config(args.config))
    if isinstance(config, SweepSpec):
        raise sio.ConfigError("'frames' expects a simulation config")
    config = _apply_seed(config, args.seed)
    config = config.replace(record_trajectory=True)
    if args.ticks is not None:
        if config.targets_enabled:
            config = config.replace(max_ticks=args.ticks)
        else:
            config = config.replace(metrics_ticks=args.ticks)
    log = run_simulation(config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames_path = sio.write_frames(log, out / "frames.tsv")
    config_path = out / "config.json"
    config_path.write_text(sio.serialize_config(config))
    sio.write_manifest(out, sio.serialize_config(config), config.seed,
                       [frames_path, config_path])
    print(f"frames: {log.n_ticks + 1} snapshots -> {frames_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swarmsearch",
        description="Deterministic collective food-search simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_seed=True):
        p.add_argument("-c", "--config", required=True,
                       help="path to a JSON config ('-' for stdin)")
        p.add_argument("--out", default="out", help="output directory")
        if needs_seed:
            p.add_argument("--seed", type=int, default=None,
                           help="simulation seed (overrides the config)")

    p_run = sub.add_parser("run", help="run one simulation")
    common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    common(p_sweep, needs_seed=False)
    p_sweep.add_argument("--jobs", type=int, default=1,
                         help="parallel replicate workers")
    p_sweep.add_argument("--cache-dir", default=None,
                         help="optional batch cache directory")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_metrics = sub.add_parser(
        "metrics", help="run with targets excluded and report group metrics")
    common(p_metrics)
    p_metrics.add_argument("--ticks", type=int, default=None,
                           help="metrics-mode tick budget")
    p_metrics.add_argument("--cover-fraction", type=float, action="append",
                           default=[0.5], help="coverage fraction clock(s)")
    p_metrics.set_defaults(func=_cmd_metrics)

    p_frames = sub.add_parser("frames", help="dump per-tick frame records")
    common(p_frames)
    p_frames.add_argument("--ticks", type=int, default=None,
                          help="tick budget for the recorded run")
    p_frames.set_defaults(func=_cmd_frames)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (sio.ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
