"""Time windowing and per-device feature distributions.

Packets are grouped into tumbling windows; within a window, each (device,
feature) pair yields an empirical probability distribution over the feature's
observed values. Those distributions feed every entropy computation.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .packets import DeviceMap, PacketRecord, PORT_PROTOCOLS


class UnsortedInput(Exception):
    """Record timestamps decreased while assigning windows."""


FEATURE_NAMES = ("PROTOCOL", "SRC_IP", "DST_IP", "PORT")
SIDE_SENT = "SENT"
SIDE_RECEIVED = "RECEIVED"


@dataclass(frozen=True, slots=True)
class FeatureKind:
    """A monitored traffic feature: what is counted and on which side.

    ``side`` distinguishes traffic the device sends from traffic it receives;
    PROTOCOL considers every packet touching the device and carries no side.
    """

    name: str
    side: str | None = None

    def __post_init__(self):
        if self.name not in FEATURE_NAMES:
            raise ValueError(f"unknown feature {self.name!r}")
        if self.name == "PROTOCOL":
            object.__setattr__(self, "side", None)
        elif self.side not in (SIDE_SENT, SIDE_RECEIVED):
            raise ValueError(f"{self.name} requires side SENT or RECEIVED")

    @property
    def label(self) -> str:
        return self.name if self.side is None else f"{self.name}_{self.side}"

    @classmethod
    def from_label(cls, label: str) -> "FeatureKind":
        if label == "PROTOCOL":
            return cls("PROTOCOL")
        for side in (SIDE_SENT, SIDE_RECEIVED):
            suffix = "_" + side
            if label.endswith(suffix):
                return cls(label[: -len(suffix)], side)
        raise ValueError(f"cannot parse feature label {label!r}")


PROTOCOL = FeatureKind("PROTOCOL")
SRC_IP_RECEIVED = FeatureKind("SRC_IP", SIDE_RECEIVED)
DST_IP_SENT = FeatureKind("DST_IP", SIDE_SENT)
PORT_SENT = FeatureKind("PORT", SIDE_SENT)
PORT_RECEIVED = FeatureKind("PORT", SIDE_RECEIVED)


@dataclass(slots=True)
class Window:
    """A half-open time slice [start, end) holding the records that fall in it."""

    index: int
    start: float
    end: float
    records: list[PacketRecord] = field(default_factory=list)


def default_origin(first_timestamp: float, window_len: float) -> float:
    """Window origin convention: capture start floored to the window length."""
    return math.floor(first_timestamp / window_len) * window_len


def assign_windows(records: Sequence[PacketRecord], window_len: float,
                   t0: float | None = None, span_end: float | None = None) -> list[Window]:
    """Partition time-ordered records into gap-free tumbling windows.

    A record at time ts lands in index floor((ts - t0) / window_len). Empty
    windows between occupied ones are materialized so indices are contiguous;
    ``span_end`` extends the materialized range past the last record (used when
    ground-truth labels cover a longer span). Raises UnsortedInput when a
    timestamp decreases.
    """
    if window_len <= 0:
        raise ValueError("window_len must be positive")
    if not records and span_end is None:
        return []
    if records:
        if t0 is None:
            t0 = default_origin(records[0].timestamp, window_len)
        last = None
        for r in records:
            if last is not None and r.timestamp < last:
                raise UnsortedInput(f"timestamp {r.timestamp} after {last}")
            last = r.timestamp
        n_windows = int((records[-1].timestamp - t0) // window_len) + 1
    else:
        t0 = 0.0 if t0 is None else t0
        n_windows = 0
    if span_end is not None and span_end > t0:
        n_windows = max(n_windows, math.ceil((span_end - t0) / window_len))

    windows = [Window(i, t0 + i * window_len, t0 + (i + 1) * window_len)
               for i in range(n_windows)]
    for r in records:
        idx = int((r.timestamp - t0) // window_len)
        if idx < 0:
            raise UnsortedInput(f"timestamp {r.timestamp} precedes origin {t0}")
        windows[idx].records.append(r)
    return windows


@dataclass(frozen=True)
class FeatureDistribution:
    """Empirical pmf over a feature's distinct observed values in one window.

    Zero-count values are never part of the support, so every probability is
    strictly positive and the probabilities sum to one.
    """

    feature: FeatureKind
    support: tuple
    probs: np.ndarray
    total_count: int

    def __post_init__(self):
        if self.total_count <= 0 or len(self.support) == 0:
            raise ValueError("distribution requires at least one observation")
        if len(self.support) != len(self.probs):
            raise ValueError("support/probs length mismatch")
        if np.any(self.probs <= 0):
            raise ValueError("zero or negative probability in support")
        if abs(float(self.probs.sum()) - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {self.probs.sum()}, not 1")

    @property
    def distinct_count(self) -> int:
        return len(self.support)

    def prob_of(self, value) -> float:
        for v, p in zip(self.support, self.probs):
            if v == value:
                return float(p)
        return 0.0

    @classmethod
    def from_counts(cls, feature: FeatureKind, counts: dict) -> "FeatureDistribution | None":
        """Build from value -> count; returns None when nothing was counted."""
        total = sum(counts.values())
        if total == 0:
            return None
        items = sorted(((str(v), v, c) for v, c in counts.items() if c > 0),
                       key=lambda t: t[0])
        support = tuple(v for _, v, _ in items)
        probs = np.array([c / total for _, _, c in items], dtype=np.float64)
        return cls(feature, support, probs, total)

    @classmethod
    def from_probs(cls, feature: FeatureKind, probs: dict) -> "FeatureDistribution":
        """Build directly from value -> probability (used by tests and demos)."""
        items = sorted(probs.items(), key=lambda kv: str(kv[0]))
        support = tuple(v for v, _ in items)
        arr = np.array([p for _, p in items], dtype=np.float64)
        return cls(feature, support, arr, 1)


def _feature_value(record: PacketRecord, feature: FeatureKind):
    if feature.name == "PROTOCOL":
        return record.protocol
    if feature.name == "SRC_IP":
        return record.src_ip
    if feature.name == "DST_IP":
        return record.dst_ip
    # PORT: the remote end's port relative to the device.
    if record.protocol not in PORT_PROTOCOLS:
        return None
    return record.dst_port if feature.side == SIDE_SENT else record.src_port


def build_distribution(window: Window, feature: FeatureKind, device_id: str,
                       device_map: DeviceMap) -> FeatureDistribution | None:
    """Empirical distribution of ``feature`` over the device's window traffic.

    Side filtering resolves addresses through the device map: SENT keeps
    records whose source is the device, RECEIVED those whose destination is;
    PROTOCOL keeps every record touching the device. Records lacking the
    feature attribute (ARP has no ports, IPv6 no addresses) are excluded from
    that feature's total. Returns None when nothing remains — the caller must
    treat that window as "no measurement", never as zero entropy.
    """
    counts: Counter = Counter()
    for r in window.records:
        if feature.name == "PROTOCOL":
            if device_map.lookup(r.src_ip) != device_id and device_map.lookup(r.dst_ip) != device_id:
                continue
        elif feature.side == SIDE_SENT:
            if device_map.lookup(r.src_ip) != device_id:
                continue
        else:
            if device_map.lookup(r.dst_ip) != device_id:
                continue
        value = _feature_value(r, feature)
        if value is None:
            continue
        counts[value] += 1
    return FeatureDistribution.from_counts(feature, counts)


@dataclass(frozen=True, slots=True)
class EntropyRow:
    """One row of the entropy time-series export."""

    window_index: int
    window_start: float
    device_id: str
    feature: FeatureKind
    entropy: float
    distinct_count: int
    total_count: int


def entropy_series(windows: Iterable[Window], features: Sequence[FeatureKind],
                   device_ids: Sequence[str], device_map: DeviceMap,
                   cfg=None) -> list[EntropyRow]:
    """Normalized-entropy time series per (window, device, feature).

    Windows with no measurement for a pair are omitted from the series.
    """
    from .entropy import EntropyConfig, normalized_entropy

    cfg = cfg or EntropyConfig()
    rows = []
    for window in windows:
        for device_id in device_ids:
            for feature in features:
                dist = build_distribution(window, feature, device_id, device_map)
                if dist is None:
                    continue
                rows.append(EntropyRow(
                    window.index, window.start, device_id, feature,
                    normalized_entropy(dist, cfg),
                    dist.distinct_count, dist.total_count))
    return rows


def write_entropy_csv(rows: Iterable[EntropyRow]) -> str:
    """Render the entropy export CSV (plot-ready time series)."""
    lines = ["window_index,window_start,device_id,feature,entropy,distinct_count,total_count"]
    for r in rows:
        lines.append(
            f"{r.window_index},{r.window_start:.6f},{r.device_id},{r.feature.label},"
            f"{r.entropy:.12g},{r.distinct_count},{r.total_count}")
    return "\n".join(lines) + "\n"
