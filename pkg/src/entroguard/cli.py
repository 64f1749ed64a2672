"""Command-line interface.

Subcommands: ingest (pcap -> summary CSV), entropy (feature time series),
simulate (scenario -> traffic + labels), train (RL arm only, persists agents),
compare (static vs RL, full exports), report (re-emit exports from a saved
report). Exit codes: 0 success, 2 configuration error, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import experiment, qlearn, windows
from . import simulate as simulate_mod
from .experiment import ConfigError, InputError
from .packets import (DeviceMap, IngestError, parse_pcap, parse_summary_csv,
                      write_summary_csv)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def _write(path: str, text: str) -> None:
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load_device_map(path: str | None) -> DeviceMap | None:
    if path is None:
        return None
    try:
        return DeviceMap.from_csv(_read(path))
    except IngestError as exc:
        raise InputError(f"device map {path}: {exc}") from None


def cmd_ingest(args) -> int:
    device_map = _load_device_map(args.device_map)
    try:
        capture = parse_pcap(_read_bytes(args.pcap), device_map)
    except IngestError as exc:
        raise InputError(f"pcap {args.pcap}: {exc}") from None
    _write(args.out, write_summary_csv(capture.records))
    print(f"{len(capture.records)} records written to {args.out} "
          f"({capture.skipped_frames} of {capture.total_frames} frames skipped)")
    return EXIT_OK


def cmd_entropy(args) -> int:
    try:
        records = parse_summary_csv(_read(args.csv))
    except IngestError as exc:
        raise InputError(f"packets {args.csv}: {exc}") from None
    device_map = _load_device_map(args.device_map)
    if device_map is None:
        raise ConfigError("--device-map is required to resolve traffic sides")
    features = tuple(windows.FeatureKind.from_label(f) for f in args.features)
    wins = windows.assign_windows(records, args.window_len)
    rows = windows.entropy_series(wins, features, device_map.device_ids(),
                                  device_map)
    _write(args.out, windows.write_entropy_csv(rows))
    print(f"{len(rows)} entropy rows written to {args.out}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc = json.loads(_read(args.scenario))
    scenario = experiment.scenario_from_dict(doc, path="")
    result = simulate_mod.simulate(scenario)
    os.makedirs(args.out_dir, exist_ok=True)
    packets_path = os.path.join(args.out_dir, "packets.csv")
    labels_path = os.path.join(args.out_dir, "labels.csv")
    map_path = os.path.join(args.out_dir, "device_map.csv")
    _write(packets_path, write_summary_csv(result.records))
    _write(labels_path, simulate_mod.labels_csv(result.truth, scenario.device_ids()))
    _write(map_path, result.device_map.to_csv())
    print(f"{len(result.records)} records over {result.truth.n_windows} windows "
          f"written to {args.out_dir}")
    return EXIT_OK


def _apply_overrides(cfg: experiment.ExperimentConfig, args) -> experiment.ExperimentConfig:
    if getattr(args, "seed", None) is not None:
        from dataclasses import replace
        cfg.agent = replace(cfg.agent, seed=args.seed)
    if getattr(args, "out_dir", None) is not None:
        cfg.output_dir = args.out_dir
    return cfg


def cmd_train(args) -> int:
    cfg = _apply_overrides(experiment.load_config(args.config), args)
    report, agents = experiment.run_training(cfg, state_in=args.state_in)
    out_dir = cfg.output_dir or "."
    experiment.emit_metrics(report, out_dir)
    state_path = args.state_out or os.path.join(out_dir, "agents.json")
    experiment.persist_state(agents, state_path)
    print(f"trained {len(agents)} agents over {len(report.rows)} episodes; "
          f"state in {state_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _apply_overrides(experiment.load_config(args.config), args)
    report = experiment.run_compare(cfg)
    out_dir = cfg.output_dir or "."
    paths = experiment.emit_metrics(report, out_dir)
    ratio = (report.rl_cumulative / report.static_cumulative
             if report.static_cumulative else float("inf"))
    print(f"episodes={len(report.rows)} rl_utility={report.rl_cumulative:.6g} "
          f"static_utility={report.static_cumulative:.6g} ratio={ratio:.3f}")
    print(f"{len(paths)} export files in {out_dir}")
    return EXIT_OK


def cmd_report(args) -> int:
    report = experiment.RunReport.from_json(_read(args.report))
    paths = experiment.emit_metrics(report, args.out_dir)
    print(f"{len(paths)} export files in {args.out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entroguard",
        description="Entropy-based IoT attack detection with adaptive thresholds")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a classic pcap into the summary CSV")
    p.add_argument("--pcap", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--device-map", help="CSV address,device_id")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("entropy", help="export normalized-entropy time series")
    p.add_argument("--csv", required=True, help="summary CSV input")
    p.add_argument("--device-map", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window-len", type=float, default=300.0)
    p.add_argument("--features", nargs="+",
                   default=["PROTOCOL", "SRC_IP_RECEIVED", "PORT_SENT"])
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("simulate", help="generate labeled synthetic traffic")
    p.add_argument("--scenario", required=True, help="scenario JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train the RL agents and persist their state")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--state-in", help="resume from persisted agent state")
    p.add_argument("--state-out", help="where to write agent state "
                                       "(default <out-dir>/agents.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compare", help="static-vs-RL comparison run")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="re-emit export files from a saved report")
    p.add_argument("--report", required=True, help="report.json path")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, IngestError, qlearn.SchemaVersionMismatch,
            qlearn.FingerprintMismatch) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
