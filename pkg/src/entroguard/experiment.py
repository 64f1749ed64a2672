"""Experiment orchestration: configs, the static-vs-RL comparison, exports.

A run builds one shared pipeline — records, windows, per-(device, feature)
normalized entropies, ground-truth labels — then pushes the identical window
stream through a calibrated static threshold vector and through the adaptive
agents. The two arms differ only at thresholding; rewards, rates, thresholds,
and policies are reported per episode and exported as plot-ready CSV.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import qlearn, windows
from . import simulate as simulate_mod
from .detector import (ConfusionCounts, CombinationPolicy, ThresholdEntry,
                       ThresholdVector, UtilityParams, alarm_log_line,
                       combine_verdicts, evaluate_feature, period_rates,
                       period_reward, update_confusion, NoMeasurement,
                       ALARM, NO_MEASUREMENT, ALARM_IF_BELOW, ALARM_IF_ABOVE)
from .entropy import EntropyConfig, normalized_entropy
from .packets import DeviceMap, PacketRecord, IngestError, parse_summary_csv
from .qlearn import AgentConfig, ThresholdAgent
from .windows import FeatureDistribution, FeatureKind, Window, assign_windows

SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Configuration document is invalid; message carries the field path."""


class InputError(Exception):
    """An input file is missing or unparseable."""


@dataclass(frozen=True)
class FeatureSpec:
    """An enabled feature plus its alarm direction."""

    feature: FeatureKind
    direction: str = ALARM_IF_BELOW


@dataclass
class ExperimentConfig:
    """Everything one comparison run needs; built from a JSON document."""

    mode: str
    features: tuple[FeatureSpec, ...]
    combination: CombinationPolicy = CombinationPolicy()
    entropy: EntropyConfig = EntropyConfig()
    utility: UtilityParams = UtilityParams()
    agent: AgentConfig = AgentConfig()
    scenario: simulate_mod.Scenario | None = None
    packets_csv: str | None = None
    labels_csv: str | None = None
    device_map_csv: str | None = None
    window_len: float = 300.0
    calibration_fraction: float = 0.25
    static_thresholds: dict[str, float] | None = None
    device_classes: dict[str, str] = field(default_factory=dict)
    output_dir: str | None = None

    def class_of(self, device_id: str) -> str:
        return self.device_classes.get(device_id, device_id)


# ---------------------------------------------------------------------------
# Shared pipeline


@dataclass
class DeviceSeries:
    """Per-device window series: one entropy column per feature, NaN = unmeasured."""

    device_id: str
    entropies: np.ndarray
    labels: np.ndarray


@dataclass
class Pipeline:
    """The shared upstream computation both comparison arms consume."""

    windows: list[Window]
    devices: list[DeviceSeries]
    features: tuple[FeatureSpec, ...]
    t0: float


def build_feature_distributions(window: Window, features: Sequence[FeatureKind],
                                device_ids: Sequence[str], device_map: DeviceMap,
                                ) -> dict[tuple[str, FeatureKind], FeatureDistribution]:
    """All (device, feature) distributions of one window in a single pass.

    Equivalent to calling windows.build_distribution per pair; pairs with no
    measurement are absent from the result.
    """
    wanted = set(device_ids)
    counters: dict[tuple[str, FeatureKind], dict] = {}

    def bump(dev, feature, value):
        if value is None:
            return
        key = (dev, feature)
        c = counters.setdefault(key, {})
        c[value] = c.get(value, 0) + 1

    protocol_feats = [f for f in features if f.name == "PROTOCOL"]
    sent_feats = [f for f in features if f.side == windows.SIDE_SENT]
    recv_feats = [f for f in features if f.side == windows.SIDE_RECEIVED]

    for r in window.records:
        src_dev = device_map.lookup(r.src_ip)
        dst_dev = device_map.lookup(r.dst_ip)
        touching = {d for d in (src_dev, dst_dev) if d in wanted}
        for dev in touching:
            for f in protocol_feats:
                bump(dev, f, r.protocol)
        if src_dev in wanted:
            for f in sent_feats:
                bump(src_dev, f, windows._feature_value(r, f))
        if dst_dev in wanted:
            for f in recv_feats:
                bump(dst_dev, f, windows._feature_value(r, f))

    out = {}
    for (dev, feature), counts in counters.items():
        dist = FeatureDistribution.from_counts(feature, counts)
        if dist is not None:
            out[(dev, feature)] = dist
    return out


def build_pipeline(records: Sequence[PacketRecord], device_ids: Sequence[str],
                   device_map: DeviceMap, features: Sequence[FeatureSpec],
                   window_len: float, labels: dict[tuple[str, int], bool],
                   entropy_cfg: EntropyConfig, t0: float | None = None,
                   span_end: float | None = None) -> Pipeline:
    """Window the stream once and precompute every entropy either arm needs."""
    wins = assign_windows(list(records), window_len, t0, span_end=span_end)
    n = len(wins)
    kinds = [spec.feature for spec in features]
    series = {dev: DeviceSeries(dev, np.full((n, len(kinds)), np.nan),
                                np.zeros(n, dtype=bool))
              for dev in device_ids}
    for dev in device_ids:
        s = series[dev]
        for i in range(n):
            s.labels[i] = labels.get((dev, i), False)
    for window in wins:
        dists = build_feature_distributions(window, kinds, device_ids, device_map)
        for (dev, feature), dist in dists.items():
            j = kinds.index(feature)
            series[dev].entropies[window.index, j] = normalized_entropy(dist, entropy_cfg)
    origin = wins[0].start if wins else (t0 or 0.0)
    return Pipeline(wins, [series[dev] for dev in device_ids],
                    tuple(features), origin)


# ---------------------------------------------------------------------------
# Static baseline calibration


def calibrate_static_thresholds(pipeline: Pipeline, device_ids: Sequence[str],
                                class_of, fraction: float) -> dict[str, ThresholdVector]:
    """Midpoint thresholds from a calibration prefix of the window stream.

    Per class and feature: theta = (mean benign entropy + mean attacked
    entropy) / 2 over the first ``fraction`` of windows. When the prefix
    contains no attacked (or no benign) measurement, fall back to the benign
    mean offset by three standard deviations in the alarm direction.
    """
    n = len(pipeline.windows)
    cut = max(1, int(n * fraction))
    vectors: dict[str, ThresholdVector] = {}
    by_class: dict[str, list[DeviceSeries]] = {}
    for dev in pipeline.devices:
        if dev.device_id in device_ids:
            by_class.setdefault(class_of(dev.device_id), []).append(dev)

    for cls, devs in sorted(by_class.items()):
        vector = ThresholdVector(cls)
        for j, spec in enumerate(pipeline.features):
            benign_vals, attack_vals = [], []
            for dev in devs:
                h = dev.entropies[:cut, j]
                lab = dev.labels[:cut]
                ok = ~np.isnan(h)
                benign_vals.extend(h[ok & ~lab])
                attack_vals.extend(h[ok & lab])
            if benign_vals and attack_vals:
                theta = (float(np.mean(benign_vals)) + float(np.mean(attack_vals))) / 2.0
            elif benign_vals:
                mean, std = float(np.mean(benign_vals)), float(np.std(benign_vals))
                offset = 3.0 * std
                theta = mean - offset if spec.direction == ALARM_IF_BELOW else mean + offset
            else:
                theta = 0.0 if spec.direction == ALARM_IF_BELOW else 1.0
            theta = min(1.0, max(0.0, theta))
            vector.set_entry(ThresholdEntry(spec.feature, theta, spec.direction))
        vectors[cls] = vector
    return vectors


# ---------------------------------------------------------------------------
# Episode processing


@dataclass
class ArmEpisode:
    reward: float
    hit: float
    fa: float
    counts: ConfusionCounts
    decided: int


@dataclass
class EpisodeRow:
    episode: int
    rl: ArmEpisode
    static: ArmEpisode
    thresholds: dict[str, float]


@dataclass
class RunReport:
    """Full outcome of a comparison run; serializes to one JSON document."""

    rows: list[EpisodeRow]
    rl_cumulative: float
    static_cumulative: float
    rl_counts: ConfusionCounts
    static_counts: ConfusionCounts
    rl_decided: int
    static_decided: int
    final_policy: dict[str, list[dict]]
    static_thresholds: dict[str, dict[str, float]]
    alarm_log_rl: list[str]
    alarm_log_static: list[str]
    episode_len: int

    def to_json(self) -> str:
        def arm(a: ArmEpisode) -> dict:
            return {"reward": a.reward, "hit": a.hit, "fa": a.fa,
                    "counts": [a.counts.n11, a.counts.n12, a.counts.n21, a.counts.n22],
                    "decided": a.decided}

        doc = {
            "schema_version": SCHEMA_VERSION,
            "episode_len": self.episode_len,
            "episodes": [{"episode": r.episode, "rl": arm(r.rl),
                          "static": arm(r.static), "thresholds": r.thresholds}
                         for r in self.rows],
            "cumulative_utility": {"rl": self.rl_cumulative,
                                   "static": self.static_cumulative},
            "confusion_totals": {
                "rl": [self.rl_counts.n11, self.rl_counts.n12,
                       self.rl_counts.n21, self.rl_counts.n22],
                "static": [self.static_counts.n11, self.static_counts.n12,
                           self.static_counts.n21, self.static_counts.n22]},
            "decided_windows": {"rl": self.rl_decided, "static": self.static_decided},
            "final_policy": self.final_policy,
            "static_thresholds": self.static_thresholds,
            "alarm_log_rl": self.alarm_log_rl,
            "alarm_log_static": self.alarm_log_static,
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise InputError(f"unsupported report schema {doc.get('schema_version')}")

        def arm(d: dict) -> ArmEpisode:
            return ArmEpisode(d["reward"], d["hit"], d["fa"],
                              ConfusionCounts(*d["counts"]), d["decided"])

        rows = [EpisodeRow(e["episode"], arm(e["rl"]), arm(e["static"]),
                           e["thresholds"]) for e in doc["episodes"]]
        return cls(rows,
                   doc["cumulative_utility"]["rl"], doc["cumulative_utility"]["static"],
                   ConfusionCounts(*doc["confusion_totals"]["rl"]),
                   ConfusionCounts(*doc["confusion_totals"]["static"]),
                   doc["decided_windows"]["rl"], doc["decided_windows"]["static"],
                   doc["final_policy"], doc["static_thresholds"],
                   doc["alarm_log_rl"], doc["alarm_log_static"],
                   doc["episode_len"])


def _feature_states(h_row: np.ndarray, vector: ThresholdVector,
                    features: Sequence[FeatureSpec]) -> dict[FeatureKind, str]:
    states = {}
    for j, spec in enumerate(features):
        h = h_row[j]
        if math.isnan(h):
            states[spec.feature] = NO_MEASUREMENT
        else:
            states[spec.feature] = evaluate_feature(float(h), vector.get(spec.feature))
    return states


class _ArmState:
    """Running accumulation for one comparison arm."""

    def __init__(self, label: str):
        self.label = label
        self.counts = ConfusionCounts()
        self.decided = 0
        self.log: list[str] = []

    def process(self, window_index: int, dev: DeviceSeries,
                vector: ThresholdVector, features: Sequence[FeatureSpec],
                policy: CombinationPolicy,
                agent_counts: dict | None = None,
                class_name: str | None = None) -> ConfusionCounts:
        """Decide one (window, device); returns this decision's counts delta."""
        states = _feature_states(dev.entropies[window_index], vector, features)
        truth = bool(dev.labels[window_index])
        if agent_counts is not None:
            for spec in features:
                state = states[spec.feature]
                if state == NO_MEASUREMENT:
                    continue
                key = (class_name, spec.feature)
                alarmed = state == ALARM
                if alarmed and truth:
                    delta = ConfusionCounts(n11=1)
                elif alarmed:
                    delta = ConfusionCounts(n12=1)
                elif truth:
                    delta = ConfusionCounts(n21=1)
                else:
                    delta = ConfusionCounts(n22=1)
                agent_counts[key] = agent_counts[key] + delta
        try:
            verdict = combine_verdicts(states, policy)
        except NoMeasurement:
            return ConfusionCounts()
        before = self.counts
        self.counts = update_confusion(verdict, truth, self.counts)
        self.decided += 1
        self.log.append(alarm_log_line(window_index, dev.device_id, verdict,
                                       truth, self.counts))
        return ConfusionCounts(self.counts.n11 - before.n11,
                               self.counts.n12 - before.n12,
                               self.counts.n21 - before.n21,
                               self.counts.n22 - before.n22)


def build_agents(cfg: ExperimentConfig, classes: Sequence[str],
                 ) -> tuple[list[ThresholdAgent], dict[str, ThresholdVector]]:
    """One agent per (device class, enabled feature), each bound to its
    class's threshold vector. Agent seeds derive from the config seed by
    ordinal, so the population is reproducible."""
    vectors = {cls: ThresholdVector(cls) for cls in classes}
    agents: list[ThresholdAgent] = []
    ordinal = 0
    for cls in sorted(classes):
        for spec in cfg.features:
            vectors[cls].set_entry(ThresholdEntry(
                spec.feature, cfg.agent.action_grid[0], spec.direction))
            agents.append(ThresholdAgent(cls, spec.feature, cfg.agent, cfg.utility,
                                         spec.direction, ordinal=ordinal,
                                         vector=vectors[cls]))
            ordinal += 1
    return agents, vectors


def run_compare(cfg: ExperimentConfig) -> RunReport:
    """Run both arms over the identical precomputed window stream."""
    pipeline, device_ids = _load_pipeline(cfg)
    return compare_on_pipeline(cfg, pipeline, device_ids)


def run_training(cfg: ExperimentConfig, state_in: str | None = None,
                 ) -> tuple[RunReport, list[ThresholdAgent]]:
    """Train the RL arm (optionally from persisted state); returns the agents."""
    pipeline, device_ids = _load_pipeline(cfg)
    classes = sorted({cfg.class_of(d) for d in device_ids})
    agents, vectors = build_agents(cfg, classes)
    if state_in is not None:
        load_state(state_in, agents)
    report = compare_on_pipeline(cfg, pipeline, device_ids, agents, vectors)
    return report, agents


def compare_on_pipeline(cfg: ExperimentConfig, pipeline: Pipeline,
                        device_ids: Sequence[str],
                        agents: list[ThresholdAgent] | None = None,
                        rl_vectors: dict[str, ThresholdVector] | None = None,
                        ) -> RunReport:
    by_class: dict[str, list[DeviceSeries]] = {}
    for dev in pipeline.devices:
        by_class.setdefault(cfg.class_of(dev.device_id), []).append(dev)
    classes = sorted(by_class)

    static_vectors = calibrate_static_thresholds(
        pipeline, device_ids, cfg.class_of, cfg.calibration_fraction)
    if cfg.static_thresholds:
        for cls in classes:
            for spec in cfg.features:
                label = spec.feature.label
                if label in cfg.static_thresholds:
                    static_vectors[cls].set_entry(ThresholdEntry(
                        spec.feature, cfg.static_thresholds[label], spec.direction))

    if agents is None or rl_vectors is None:
        agents, rl_vectors = build_agents(cfg, classes)

    n_windows = len(pipeline.windows)
    n_episodes = n_windows // cfg.agent.episode_len
    rl_arm, static_arm = _ArmState("rl"), _ArmState("static")
    rows: list[EpisodeRow] = []
    rl_cum = static_cum = 0.0

    for e in range(n_episodes):
        lo, hi = e * cfg.agent.episode_len, (e + 1) * cfg.agent.episode_len
        chosen = {}
        for agent in agents:
            action, theta = agent.begin_episode()
            chosen[agent.name] = (action, theta)
        agent_counts = {(a.device_class, a.feature): ConfusionCounts() for a in agents}

        ep_rl = ConfusionCounts()
        ep_static = ConfusionCounts()
        rl_decided_before, static_decided_before = rl_arm.decided, static_arm.decided
        for w in range(lo, hi):
            for cls in classes:
                for dev in by_class[cls]:
                    ep_rl = ep_rl + rl_arm.process(
                        w, dev, rl_vectors[cls], cfg.features, cfg.combination,
                        agent_counts, cls)
                    ep_static = ep_static + static_arm.process(
                        w, dev, static_vectors[cls], cfg.features, cfg.combination)
            if rl_arm.counts.total != rl_arm.decided or static_arm.counts.total != static_arm.decided:
                raise AssertionError("confusion-count identity violated")

        for agent in agents:
            action, theta = chosen[agent.name]
            agent.finish_episode(action, theta, agent_counts[(agent.device_class, agent.feature)])

        rl_reward = period_reward(ep_rl, cfg.utility)
        static_reward = period_reward(ep_static, cfg.utility)
        rl_hit, rl_fa = period_rates(ep_rl)
        st_hit, st_fa = period_rates(ep_static)
        rl_cum += rl_reward
        static_cum += static_reward
        rows.append(EpisodeRow(
            e,
            ArmEpisode(rl_reward, rl_hit, rl_fa, ep_rl,
                       rl_arm.decided - rl_decided_before),
            ArmEpisode(static_reward, st_hit, st_fa, ep_static,
                       static_arm.decided - static_decided_before),
            {name: theta for name, (_, theta) in chosen.items()}))

    final_policy = {}
    for agent in agents:
        final_policy[agent.name] = [
            {"hit_bin": s.hit_bin, "fa_bin": s.fa_bin, "threshold": theta}
            for s, theta in sorted(agent.policy().items())]
    static_doc = {cls: {spec.feature.label: static_vectors[cls].get(spec.feature).theta
                        for spec in cfg.features} for cls in classes}

    return RunReport(rows, rl_cum, static_cum, rl_arm.counts, static_arm.counts,
                     rl_arm.decided, static_arm.decided, final_policy, static_doc,
                     rl_arm.log, static_arm.log, cfg.agent.episode_len)


# ---------------------------------------------------------------------------
# Input loading


def _load_pipeline(cfg: ExperimentConfig) -> tuple[Pipeline, list[str]]:
    if cfg.mode == "simulate":
        if cfg.scenario is None:
            raise ConfigError("scenario: required in simulate mode")
        sim = simulate_mod.simulate(cfg.scenario)
        device_ids = cfg.scenario.device_ids()
        pipeline = build_pipeline(sim.records, device_ids, sim.device_map,
                                  cfg.features, cfg.scenario.window_len,
                                  sim.truth.labels, cfg.entropy, t0=0.0,
                                  span_end=cfg.scenario.span)
        return pipeline, device_ids

    if cfg.packets_csv is None or cfg.labels_csv is None or cfg.device_map_csv is None:
        raise ConfigError("inputs: replay mode requires packets_csv, labels_csv "
                          "and device_map_csv")
    records = parse_summary_csv(_read_file(cfg.packets_csv))
    labels = simulate_mod.parse_labels_csv(_read_file(cfg.labels_csv))
    device_map = DeviceMap.from_csv(_read_file(cfg.device_map_csv))
    device_ids = device_map.device_ids()
    max_index = max((i for (_, i) in labels), default=-1)
    t0 = windows.default_origin(records[0].timestamp, cfg.window_len) if records else 0.0
    span_end = t0 + (max_index + 1) * cfg.window_len if max_index >= 0 else None
    pipeline = build_pipeline(records, device_ids, device_map, cfg.features,
                              cfg.window_len, labels, cfg.entropy,
                              t0=t0, span_end=span_end)
    return pipeline, device_ids


def _read_file(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


# ---------------------------------------------------------------------------
# Persistence


def persist_state(agents: Sequence[ThresholdAgent], path: str) -> None:
    """Write every agent's Q-table (with layout fingerprints) to one document."""
    doc = {"schema_version": qlearn.SCHEMA_VERSION,
           "agents": [a.to_dict() for a in agents]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def load_state(path: str, agents: Sequence[ThresholdAgent]) -> None:
    """Restore persisted tables into freshly constructed agents.

    Agents are matched by (device class, feature); fingerprints must match the
    agents' configs exactly.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != qlearn.SCHEMA_VERSION:
        raise qlearn.SchemaVersionMismatch(
            f"persisted schema {doc.get('schema_version')}, "
            f"supported {qlearn.SCHEMA_VERSION}")
    payloads = {(p["device_class"], p["feature"]): p for p in doc["agents"]}
    for agent in agents:
        key = (agent.device_class, agent.feature.label)
        if key not in payloads:
            raise qlearn.FingerprintMismatch(f"no persisted table for agent {agent.name}")
        agent.load_dict(payloads[key])


# ---------------------------------------------------------------------------
# Metrics emission


def emit_metrics(report: RunReport, out_dir: str) -> list[str]:
    """Write the run's export files; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(name: str, text: str):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        written.append(path)

    lines = ["episode,agent,threshold"]
    for row in report.rows:
        for name in sorted(row.thresholds):
            lines.append(f"{row.episode},{name},{row.thresholds[name]:.6g}")
    emit("thresholds.csv", "\n".join(lines) + "\n")

    lines = ["episode,arm,hit_rate,false_alarm_rate,reward"]
    for row in report.rows:
        for arm_name, arm in (("rl", row.rl), ("static", row.static)):
            lines.append(f"{row.episode},{arm_name},{arm.hit:.6g},{arm.fa:.6g},"
                         f"{arm.reward:.6g}")
    emit("rates.csv", "\n".join(lines) + "\n")

    lines = ["arm,cumulative_utility,hit_rate,false_alarm_rate"]
    for arm_name, cum, counts in (("rl", report.rl_cumulative, report.rl_counts),
                                  ("static", report.static_cumulative,
                                   report.static_counts)):
        hit, fa = period_rates(counts)
        lines.append(f"{arm_name},{cum:.6g},{hit:.6g},{fa:.6g}")
    emit("utility_summary.csv", "\n".join(lines) + "\n")

    lines = ["agent,hit_bin,fa_bin,threshold"]
    for name in sorted(report.final_policy):
        for cell in report.final_policy[name]:
            lines.append(f"{name},{cell['hit_bin']},{cell['fa_bin']},"
                         f"{cell['threshold']:.6g}")
    emit("policy.csv", "\n".join(lines) + "\n")

    emit("alarms_rl.jsonl", "".join(line + "\n" for line in report.alarm_log_rl))
    emit("alarms_static.jsonl", "".join(line + "\n" for line in report.alarm_log_static))
    emit("report.json", report.to_json())
    return written


# ---------------------------------------------------------------------------
# JSON config parsing


def _want(doc: dict, key: str, kind, path: str, default=None, required=False):
    if key not in doc:
        if required:
            raise ConfigError(f"{path}{key}: required field missing")
        return default
    value = doc[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"{path}{key}: expected {kind.__name__}, "
                          f"got {type(value).__name__}")
    return value


def scenario_from_dict(doc: dict, path: str = "scenario.") -> simulate_mod.Scenario:
    try:
        profiles = []
        for i, p in enumerate(_want(doc, "devices", list, path, required=True)):
            dpath = f"{path}devices[{i}]."
            profiles.append(simulate_mod.DeviceProfile(
                _want(p, "device_id", str, dpath, required=True),
                _want(p, "address", str, dpath, required=True),
                _want(p, "rate", float, dpath, required=True),
                {str(k): float(v) for k, v in
                 _want(p, "protocol_mix", dict, dpath, required=True).items()},
                {str(k): float(v) for k, v in
                 _want(p, "peers", dict, dpath, required=True).items()},
                {int(k): float(v) for k, v in
                 _want(p, "ports", dict, dpath, required=True).items()},
                _want(p, "send_fraction", float, dpath, default=0.5)))
        sched_doc = doc.get("schedule")
        if isinstance(sched_doc, list):
            schedule: simulate_mod.Schedule | simulate_mod.ScheduleConfig = simulate_mod.Schedule(
                tuple(simulate_mod.AttackSpec(
                    _want(e, "kind", str, f"{path}schedule[{i}].", required=True),
                    _want(e, "rate", float, f"{path}schedule[{i}].", required=True),
                    _want(e, "start", float, f"{path}schedule[{i}].", required=True),
                    _want(e, "duration", float, f"{path}schedule[{i}].", required=True),
                    _want(e, "target", str, f"{path}schedule[{i}].", required=True))
                    for i, e in enumerate(sched_doc)))
        elif isinstance(sched_doc, dict):
            spath = f"{path}schedule."
            schedule = simulate_mod.ScheduleConfig(
                _want(sched_doc, "count", int, spath, required=True),
                tuple(_want(sched_doc, "kinds", list, spath, required=True)),
                tuple(float(r) for r in _want(sched_doc, "rates", list, spath,
                                              default=[1.0, 10.0, 100.0])),
                _want(sched_doc, "duration", float, spath, default=600.0),
                tuple(_want(sched_doc, "gap_range", list, spath,
                            default=[300.0, 900.0])),
                _want(sched_doc, "first_start", float, spath, default=0.0),
                tuple(_want(sched_doc, "targets", list, spath, default=[])))
        else:
            raise ConfigError(f"{path}schedule: must be a list of attack specs "
                              "or a schedule-config object")
        return simulate_mod.Scenario(
            tuple(profiles), schedule,
            _want(doc, "window_len", float, path, required=True),
            _want(doc, "span", float, path, required=True),
            _want(doc, "seed", int, path, default=0))
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"{path.rstrip('.')}: {exc}") from None


def _features_from_list(items: list, path: str) -> tuple[FeatureSpec, ...]:
    specs = []
    for i, item in enumerate(items):
        fpath = f"{path}[{i}]."
        label = _want(item, "feature", str, fpath, required=True)
        direction = _want(item, "direction", str, fpath, default=ALARM_IF_BELOW)
        if direction not in (ALARM_IF_BELOW, ALARM_IF_ABOVE):
            raise ConfigError(f"{fpath}direction: must be 'below' or 'above'")
        try:
            feature = FeatureKind.from_label(label)
        except ValueError as exc:
            raise ConfigError(f"{fpath}feature: {exc}") from None
        specs.append(FeatureSpec(feature, direction))
    if not specs:
        raise ConfigError(f"{path}: at least one feature required")
    return tuple(specs)


def config_from_dict(doc: dict) -> ExperimentConfig:
    version = _want(doc, "schema_version", int, "", default=SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version: unsupported version {version}")
    mode = _want(doc, "mode", str, "", required=True)
    if mode not in ("simulate", "replay"):
        raise ConfigError("mode: must be 'simulate' or 'replay'")

    features = _features_from_list(_want(doc, "features", list, "", required=True),
                                   "features")

    comb_doc = _want(doc, "combination", dict, "", default={"policy": "OR"})
    try:
        combination = CombinationPolicy(comb_doc.get("policy", "OR"),
                                        comb_doc.get("k", 1))
    except ValueError as exc:
        raise ConfigError(f"combination: {exc}") from None

    def build(cls, key, defaults):
        sub = _want(doc, key, dict, "", default={})
        merged = dict(defaults)
        merged.update(sub)
        try:
            return cls(**merged)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{key}: {exc}") from None

    entropy_cfg = build(EntropyConfig, "entropy", {})
    utility = build(UtilityParams, "utility", {})
    agent_doc = dict(_want(doc, "agent", dict, "", default={}))
    if "action_grid" in agent_doc:
        agent_doc["action_grid"] = tuple(agent_doc["action_grid"])
    try:
        agent = AgentConfig(**agent_doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"agent: {exc}") from None

    scenario = None
    packets_csv = labels_csv = device_map_csv = None
    if mode == "simulate":
        scen_doc = _want(doc, "scenario", dict, "", required=True)
        scenario = scenario_from_dict(scen_doc)
        window_len = scenario.window_len
    else:
        inputs = _want(doc, "inputs", dict, "", required=True)
        packets_csv = _want(inputs, "packets_csv", str, "inputs.", required=True)
        labels_csv = _want(inputs, "labels_csv", str, "inputs.", required=True)
        device_map_csv = _want(inputs, "device_map_csv", str, "inputs.", required=True)
        window_len = _want(doc, "window_len", float, "", required=True)

    static_doc = _want(doc, "static", dict, "", default={})
    fraction = _want(static_doc, "calibration_fraction", float, "static.",
                     default=0.25)
    if not 0.0 < fraction <= 1.0:
        raise ConfigError("static.calibration_fraction: must lie in (0, 1]")
    static_thresholds = static_doc.get("thresholds")
    if static_thresholds is not None:
        static_thresholds = {str(k): float(v) for k, v in static_thresholds.items()}

    return ExperimentConfig(
        mode=mode, features=features, combination=combination,
        entropy=entropy_cfg, utility=utility, agent=agent,
        scenario=scenario, packets_csv=packets_csv, labels_csv=labels_csv,
        device_map_csv=device_map_csv, window_len=window_len,
        calibration_fraction=fraction, static_thresholds=static_thresholds,
        device_classes=dict(_want(doc, "device_classes", dict, "", default={})),
        output_dir=_want(doc, "output_dir", str, "", default=None))


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(doc)
