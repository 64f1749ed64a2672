"""Threshold-based alarm decisions and the feedback arithmetic behind them.

A device verdict is the combination of per-feature threshold comparisons on
normalized entropy. Verdicts checked against ground truth accumulate into
confusion counts, which yield the period reward and the hit / false-alarm
rates that drive threshold adaptation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

from .windows import FeatureKind

ALARM_IF_BELOW = "below"
ALARM_IF_ABOVE = "above"
DIRECTIONS = (ALARM_IF_BELOW, ALARM_IF_ABOVE)

# Per-feature states feeding a combined verdict.
ALARM = "alarm"
PASS = "pass"
NO_MEASUREMENT = "no_measurement"


class NoMeasurement(Exception):
    """Every feature lacked a measurement; the window is undecidable."""


@dataclass(frozen=True, slots=True)
class ThresholdEntry:
    """Alarm rule for one feature: entropy threshold plus comparison direction.

    ``below`` flags concentration (floods, spoofing); ``above`` flags excess
    randomness (port scans). Equality always passes.
    """

    feature: FeatureKind
    theta: float
    direction: str = ALARM_IF_BELOW

    def __post_init__(self):
        if not 0.0 <= self.theta <= 1.0:
            raise ValueError(f"theta {self.theta} outside [0, 1]")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")


@dataclass
class ThresholdVector:
    """Current per-feature thresholds for one device class."""

    device_class: str
    entries: dict[FeatureKind, ThresholdEntry] = field(default_factory=dict)

    def set_entry(self, entry: ThresholdEntry) -> None:
        self.entries[entry.feature] = entry

    def set_theta(self, feature: FeatureKind, theta: float) -> None:
        current = self.entries[feature]
        self.entries[feature] = ThresholdEntry(feature, theta, current.direction)

    def get(self, feature: FeatureKind) -> ThresholdEntry:
        return self.entries[feature]


@dataclass(frozen=True, slots=True)
class UtilityParams:
    """Environment feedback payoffs: rewards P0/P1, costs C0/C1/C2.

    A confirmed attack pays P0 minus the screening cost C0; a false alarm
    costs the screening plus the penalty C1; a miss costs C2; authenticated
    benign traffic pays P1.
    """

    p0: float = 14.0
    p1: float = 12.0
    c0: float = 0.0
    c1: float = 3.0
    c2: float = 15.0

    def __post_init__(self):
        for name in ("p0", "p1", "c0", "c1", "c2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True, slots=True)
class ConfusionCounts:
    """Decided-window outcome counts: n11=TP, n12=FP, n21=FN, n22=TN."""

    n11: int = 0
    n12: int = 0
    n21: int = 0
    n22: int = 0

    def __post_init__(self):
        if min(self.n11, self.n12, self.n21, self.n22) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.n11 + self.n12 + self.n21 + self.n22

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.n11 + other.n11, self.n12 + other.n12,
                               self.n21 + other.n21, self.n22 + other.n22)


@dataclass(frozen=True)
class Verdict:
    """Combined device decision plus the per-feature states it came from."""

    alarm: bool
    per_feature: Mapping[FeatureKind, str]


@dataclass(frozen=True)
class CombinationPolicy:
    """How per-feature states merge: OR, or at-least-k-of-the-measured."""

    kind: str = "OR"
    k: int = 1

    def __post_init__(self):
        if self.kind not in ("OR", "K_OF_N"):
            raise ValueError(f"unknown combination policy {self.kind!r}")
        if self.k < 1:
            raise ValueError("k must be at least 1")


def evaluate_feature(h: float, entry: ThresholdEntry) -> str:
    """Compare a normalized entropy against one threshold entry.

    Strict inequality in the configured direction raises the alarm; equality
    passes.
    """
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"normalized entropy {h} outside [0, 1]")
    if entry.direction == ALARM_IF_BELOW:
        return ALARM if h < entry.theta else PASS
    return ALARM if h > entry.theta else PASS


def combine_verdicts(per_feature: Mapping[FeatureKind, str],
                     policy: CombinationPolicy = CombinationPolicy()) -> Verdict:
    """Merge per-feature states into a device verdict.

    Unmeasured features are excluded from both the alarm count and the
    denominator. Raises NoMeasurement when nothing was measured at all.
    """
    measured = {f: s for f, s in per_feature.items() if s != NO_MEASUREMENT}
    if not measured:
        raise NoMeasurement("all features unmeasured in window")
    alarms = sum(1 for s in measured.values() if s == ALARM)
    if policy.kind == "OR":
        alarm = alarms >= 1
    else:
        alarm = alarms >= policy.k
    return Verdict(alarm, dict(per_feature))


def update_confusion(verdict: Verdict, truth_is_attack: bool,
                     counts: ConfusionCounts) -> ConfusionCounts:
    """Fold one decided window into the counts; exactly one cell increments."""
    if verdict.alarm and truth_is_attack:
        return counts + ConfusionCounts(n11=1)
    if verdict.alarm:
        return counts + ConfusionCounts(n12=1)
    if truth_is_attack:
        return counts + ConfusionCounts(n21=1)
    return counts + ConfusionCounts(n22=1)


def period_reward(counts: ConfusionCounts, u: UtilityParams) -> float:
    """Complete period reward: (P0-C0)*N11 - (C0+C1)*N12 - C2*N21 + P1*N22."""
    return ((u.p0 - u.c0) * counts.n11 - (u.c0 + u.c1) * counts.n12
            - u.c2 * counts.n21 + u.p1 * counts.n22)


def period_rates(counts: ConfusionCounts) -> tuple[float, float]:
    """Hit rate N11/(N11+N21) and false-alarm rate N12/(N12+N22).

    Vacuous denominators use the conventions hit=1 (nothing to miss) and
    fa=0 (nothing to falsely flag) so a clean period maps to the best state.
    """
    attacks = counts.n11 + counts.n21
    benign = counts.n12 + counts.n22
    hit = counts.n11 / attacks if attacks else 1.0
    fa = counts.n12 / benign if benign else 0.0
    return hit, fa


def alarm_log_line(window_index: int, device_id: str, verdict: Verdict,
                   truth_is_attack: bool, running: ConfusionCounts) -> str:
    """One self-describing alarm-log record (JSON line, fixed field order)."""
    payload = {
        "window_index": window_index,
        "device_id": device_id,
        "feature_flags": {f.label: s for f, s in sorted(
            verdict.per_feature.items(), key=lambda kv: kv[0].label)},
        "verdict": ALARM if verdict.alarm else PASS,
        "truth": "attack" if truth_is_attack else "benign",
        "running_counts": {"n11": running.n11, "n12": running.n12,
                           "n21": running.n21, "n22": running.n22},
    }
    return json.dumps(payload, separators=(",", ":"))
