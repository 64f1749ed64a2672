"""Synthetic labeled traffic: benign device baselines plus injected attacks.

Benign traffic is Poisson per device with weighted protocol/peer/port pools.
Attacks are shaped at the header-distribution level (the only thing entropy
features see): floods concentrate sources and protocols, scans spray ports,
reflections converge many spoofed sources on one service port. A mutative
schedule switches attack kind and rate over time. Every run is reproducible
from a single scenario seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .packets import DeviceMap, PacketRecord
from .packets import classify_l4, IP_PROTO_TCP, IP_PROTO_UDP

ATTACK_KINDS = (
    "ARP_SPOOF", "TCP_SYN_FLOOD", "UDP_FLOOD", "PING_OF_DEATH", "PORT_SCAN",
    "REFLECTION_SYN", "REFLECTION_SMURF", "REFLECTION_SNMP", "REFLECTION_SSDP",
)
REFLECTION_SERVICE_PORTS = {"REFLECTION_SYN": 80, "REFLECTION_SNMP": 161,
                            "REFLECTION_SSDP": 1900}
DEFAULT_FLOOD_SOURCES = 3
DEFAULT_REFLECTION_SOURCES = 50
PING_OF_DEATH_LENGTH = 65000


class UnknownTarget(Exception):
    """Attack spec names a device that has no profile."""


@dataclass(frozen=True)
class DeviceProfile:
    """Benign traffic shape for one device.

    ``rate`` is the total Poisson packet rate (sent plus received); each
    packet is sent by the device with probability ``send_fraction``. Peers and
    ports are weighted pools of remote addresses and remote service ports.
    """

    device_id: str
    address: str
    rate: float
    protocol_mix: dict[str, float]
    peers: dict[str, float]
    ports: dict[int, float]
    send_fraction: float = 0.5

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError("rate must be non-negative")
        if abs(sum(self.protocol_mix.values()) - 1.0) > 1e-9:
            raise ValueError("protocol mix must sum to 1")
        if not self.peers or not self.ports:
            raise ValueError("peer and port pools must be non-empty")
        if not 0.0 <= self.send_fraction <= 1.0:
            raise ValueError("send_fraction must lie in [0, 1]")


@dataclass(frozen=True, slots=True)
class AttackSpec:
    """One injected attack: what, how fast, when, against whom."""

    kind: str
    rate: float
    start: float
    duration: float
    target: str

    def __post_init__(self):
        if self.kind not in ATTACK_KINDS:
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.rate <= 0 or self.duration <= 0:
            raise ValueError("rate and duration must be positive")

    @property
    def end(self) -> float:
        return self.start + self.duration


@dataclass(frozen=True)
class Schedule:
    """Time-ordered attack specs; one device never has two active attacks."""

    entries: tuple[AttackSpec, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        for a, b in zip(entries, entries[1:]):
            if b.start < a.start:
                raise ValueError("schedule entries must be sorted by start")
        per_device: dict[str, float] = {}
        for e in entries:
            if e.start < per_device.get(e.target, -math.inf):
                raise ValueError(f"overlapping attacks on device {e.target}")
            per_device[e.target] = e.end

    @property
    def end(self) -> float:
        return max((e.end for e in self.entries), default=0.0)


@dataclass(frozen=True)
class ScheduleConfig:
    """Parameters for drawing a mutative attack schedule."""

    count: int
    kinds: tuple[str, ...]
    rates: tuple[float, ...] = (1.0, 10.0, 100.0)
    duration: float = 600.0
    gap_range: tuple[float, float] = (300.0, 900.0)
    first_start: float = 0.0
    targets: tuple[str, ...] = ()

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be at least 1")
        for kind in self.kinds:
            if kind not in ATTACK_KINDS:
                raise ValueError(f"unknown attack kind {kind!r}")
        if self.gap_range[0] < 0 or self.gap_range[1] < self.gap_range[0]:
            raise ValueError("gap_range must be 0 <= min <= max")


def mutative_schedule(cfg: ScheduleConfig, rng: np.random.Generator) -> Schedule:
    """Draw a schedule whose consecutive entries never repeat (kind, rate).

    Kind and rate are re-drawn uniformly per entry; benign gaps between
    attacks are uniform over the configured range.
    """
    if not cfg.targets:
        raise ValueError("schedule config needs at least one target device")
    entries = []
    previous: tuple[str, float] | None = None
    t = cfg.first_start
    for _ in range(cfg.count):
        while True:
            kind = cfg.kinds[int(rng.integers(len(cfg.kinds)))]
            rate = float(cfg.rates[int(rng.integers(len(cfg.rates)))])
            if (kind, rate) != previous or (len(cfg.kinds) * len(cfg.rates)) == 1:
                break
        previous = (kind, rate)
        target = cfg.targets[int(rng.integers(len(cfg.targets)))]
        entries.append(AttackSpec(kind, rate, t, cfg.duration, target))
        t += cfg.duration + float(rng.uniform(*cfg.gap_range))
    return Schedule(tuple(entries))


def _weighted_values(pool: dict) -> tuple[list, np.ndarray]:
    values = list(pool.keys())
    weights = np.array([pool[v] for v in values], dtype=np.float64)
    return values, weights / weights.sum()


_EPHEMERAL_LOW, _EPHEMERAL_HIGH = 1024, 65536


def _benign_ports(protocol: str, sent: bool, service_port: int,
                  rng: np.random.Generator) -> tuple[int | None, int | None]:
    """Remote side carries the service port, device side an ephemeral port."""
    if protocol in ("ARP", "ICMP", "OTHER"):
        return None, None
    if protocol == "DNS":
        service_port = 53
    elif protocol == "TLS":
        service_port = 443
    ephemeral = int(rng.integers(_EPHEMERAL_LOW, _EPHEMERAL_HIGH))
    if sent:
        return ephemeral, service_port
    return service_port, ephemeral


def generate_benign(profile: DeviceProfile, span: float,
                    rng: np.random.Generator) -> list[PacketRecord]:
    """Poisson benign traffic for one device over [0, span)."""
    if span <= 0:
        raise ValueError("span must be positive")
    if profile.rate == 0:
        return []
    expected = profile.rate * span
    n_draw = int(expected + 6 * math.sqrt(expected) + 16)
    gaps = rng.exponential(1.0 / profile.rate, size=n_draw)
    times = np.cumsum(gaps)
    while times[-1] < span:
        more = rng.exponential(1.0 / profile.rate, size=n_draw)
        times = np.concatenate([times, times[-1] + np.cumsum(more)])
    times = times[times < span]

    protocols, proto_w = _weighted_values(profile.protocol_mix)
    peers, peer_w = _weighted_values(profile.peers)
    ports, port_w = _weighted_values(profile.ports)

    n = len(times)
    proto_idx = rng.choice(len(protocols), size=n, p=proto_w)
    peer_idx = rng.choice(len(peers), size=n, p=peer_w)
    port_idx = rng.choice(len(ports), size=n, p=port_w)
    sent_mask = rng.random(n) < profile.send_fraction
    lengths = rng.integers(60, 1500, size=n)

    records = []
    for i in range(n):
        protocol = protocols[proto_idx[i]]
        peer = peers[peer_idx[i]]
        sent = bool(sent_mask[i])
        src_port, dst_port = _benign_ports(protocol, sent, ports[port_idx[i]], rng)
        if sent:
            src_ip, dst_ip = profile.address, peer
        else:
            src_ip, dst_ip = peer, profile.address
        records.append(PacketRecord(float(times[i]), src_ip, dst_ip, src_port,
                                    dst_port, protocol, int(lengths[i]),
                                    profile.device_id))
    return records


def _attack_times(spec: AttackSpec, rng: np.random.Generator) -> np.ndarray:
    """rate * duration packets, each jittered inside its own nominal slot."""
    n = int(spec.rate * spec.duration)
    return spec.start + (np.arange(n) + rng.random(n)) / spec.rate


def _spoofed_sources(count: int, rng: np.random.Generator) -> list[str]:
    sources: list[str] = []
    seen = set()
    while len(sources) < count:
        addr = f"198.51.{int(rng.integers(0, 256))}.{int(rng.integers(1, 255))}"
        if addr not in seen:
            seen.add(addr)
            sources.append(addr)
    return sources


def inject_attack(spec: AttackSpec, profiles: dict[str, DeviceProfile],
                  rng: np.random.Generator) -> list[PacketRecord]:
    """Generate the malicious records for one attack spec.

    Direct floods converge a small spoofed source set on one victim port;
    reflections converge many spoofed sources answering from a service port;
    ARP spoofing sprays falsified claims of the victim's address across its
    subnet; a port scan is the compromised device probing random remote ports.
    """
    target = profiles.get(spec.target)
    if target is None:
        raise UnknownTarget(f"no profile for device {spec.target!r}")
    times = _attack_times(spec, rng)
    n = len(times)
    dev = spec.target
    records = []

    if spec.kind == "ARP_SPOOF":
        subnet = target.address.rsplit(".", 1)[0]
        hosts = rng.integers(1, 255, size=n)
        for t, host in zip(times, hosts):
            records.append(PacketRecord(float(t), target.address,
                                        f"{subnet}.{int(host)}", None, None,
                                        "ARP", 60, dev))
    elif spec.kind in ("TCP_SYN_FLOOD", "UDP_FLOOD"):
        sources = _spoofed_sources(DEFAULT_FLOOD_SOURCES, rng)
        ip_proto = IP_PROTO_TCP if spec.kind == "TCP_SYN_FLOOD" else IP_PROTO_UDP
        victim_port = 80 if spec.kind == "TCP_SYN_FLOOD" else 9999
        src_idx = rng.integers(len(sources), size=n)
        sports = rng.integers(_EPHEMERAL_LOW, _EPHEMERAL_HIGH, size=n)
        for t, si, sp in zip(times, src_idx, sports):
            protocol = classify_l4(ip_proto, int(sp), victim_port)
            records.append(PacketRecord(float(t), sources[int(si)], target.address,
                                        int(sp), victim_port, protocol, 60, dev))
    elif spec.kind == "PING_OF_DEATH":
        attacker = _spoofed_sources(1, rng)[0]
        for t in times:
            records.append(PacketRecord(float(t), attacker, target.address,
                                        None, None, "ICMP",
                                        PING_OF_DEATH_LENGTH, dev))
    elif spec.kind == "PORT_SCAN":
        victim = _spoofed_sources(1, rng)[0]
        dports = rng.integers(0, 65536, size=n)
        sports = rng.integers(_EPHEMERAL_LOW, _EPHEMERAL_HIGH, size=n)
        for t, dp, sp in zip(times, dports, sports):
            protocol = classify_l4(IP_PROTO_TCP, int(sp), int(dp))
            records.append(PacketRecord(float(t), target.address, victim,
                                        int(sp), int(dp), protocol, 60, dev))
    elif spec.kind == "REFLECTION_SMURF":
        sources = _spoofed_sources(DEFAULT_REFLECTION_SOURCES, rng)
        src_idx = rng.integers(len(sources), size=n)
        for t, si in zip(times, src_idx):
            records.append(PacketRecord(float(t), sources[int(si)], target.address,
                                        None, None, "ICMP", 84, dev))
    elif spec.kind in REFLECTION_SERVICE_PORTS:
        service_port = REFLECTION_SERVICE_PORTS[spec.kind]
        ip_proto = IP_PROTO_TCP if spec.kind == "REFLECTION_SYN" else IP_PROTO_UDP
        sources = _spoofed_sources(DEFAULT_REFLECTION_SOURCES, rng)
        src_idx = rng.integers(len(sources), size=n)
        dports = rng.integers(_EPHEMERAL_LOW, _EPHEMERAL_HIGH, size=n)
        for t, si, dp in zip(times, src_idx, dports):
            protocol = classify_l4(ip_proto, service_port, int(dp))
            records.append(PacketRecord(float(t), sources[int(si)], target.address,
                                        service_port, int(dp), protocol, 60, dev))
    else:  # pragma: no cover - ATTACK_KINDS is exhaustive
        raise ValueError(f"unhandled attack kind {spec.kind}")
    return records


@dataclass(frozen=True)
class GroundTruth:
    """Per (device, window) attack labels derived by the any-overlap rule."""

    labels: dict[tuple[str, int], bool]
    n_windows: int
    window_len: float
    t0: float

    def is_attack(self, device_id: str, window_index: int) -> bool:
        return self.labels.get((device_id, window_index), False)


def derive_ground_truth(schedule: Schedule, device_ids: Sequence[str],
                        window_len: float, span: float, t0: float = 0.0) -> GroundTruth:
    """Label a window attack iff any attack interval intersects it."""
    n_windows = math.ceil((span - t0) / window_len)
    labels = {(dev, i): False for dev in device_ids for i in range(n_windows)}
    for spec in schedule.entries:
        first = max(0, int((spec.start - t0) // window_len))
        last = min(n_windows - 1, int(math.ceil((spec.end - t0) / window_len)) - 1)
        for i in range(first, last + 1):
            win_start = t0 + i * window_len
            if spec.start < win_start + window_len and spec.end > win_start:
                labels[(spec.target, i)] = True
    return GroundTruth(labels, n_windows, window_len, t0)


@dataclass(frozen=True)
class Scenario:
    """A full simulation setup: devices, attacks, windowing, and one seed."""

    profiles: tuple[DeviceProfile, ...]
    schedule: Schedule | ScheduleConfig
    window_len: float
    span: float
    seed: int = 0

    def device_map(self) -> DeviceMap:
        dm = DeviceMap()
        for p in self.profiles:
            dm.add(p.address, p.device_id)
        return dm

    def device_ids(self) -> list[str]:
        return [p.device_id for p in self.profiles]


@dataclass(frozen=True)
class SimulationResult:
    records: tuple[PacketRecord, ...]
    truth: GroundTruth
    schedule: Schedule
    device_map: DeviceMap


def simulate(scenario: Scenario) -> SimulationResult:
    """Generate the merged labeled stream for a scenario.

    All randomness derives from the scenario seed; sub-streams get child seeds
    by component ordinal (schedule, then benign per device, then per attack),
    so identical scenarios are bit-identical.
    """
    seeds = np.random.SeedSequence(scenario.seed)
    profiles = {p.device_id: p for p in scenario.profiles}
    n_attacks = (scenario.schedule.count if isinstance(scenario.schedule, ScheduleConfig)
                 else len(scenario.schedule.entries))
    children = seeds.spawn(1 + len(scenario.profiles) + n_attacks)

    if isinstance(scenario.schedule, ScheduleConfig):
        cfg = scenario.schedule
        if not cfg.targets:
            cfg = replace(cfg, targets=tuple(scenario.device_ids()))
        schedule = mutative_schedule(cfg, np.random.default_rng(children[0]))
    else:
        schedule = scenario.schedule
    if schedule.end > scenario.span:
        raise ValueError(f"schedule ends at {schedule.end}, beyond span {scenario.span}")

    records: list[PacketRecord] = []
    for i, profile in enumerate(scenario.profiles):
        rng = np.random.default_rng(children[1 + i])
        records.extend(generate_benign(profile, scenario.span, rng))
    for j, spec in enumerate(schedule.entries):
        rng = np.random.default_rng(children[1 + len(scenario.profiles) + j])
        records.extend(inject_attack(spec, profiles, rng))

    records.sort(key=lambda r: r.timestamp)
    truth = derive_ground_truth(schedule, scenario.device_ids(),
                                scenario.window_len, scenario.span)
    return SimulationResult(tuple(records), truth, schedule, scenario.device_map())


def labels_csv(truth: GroundTruth, device_ids: Iterable[str]) -> str:
    """Render ground-truth labels as CSV ``device_id,window_index,label``."""
    lines = ["device_id,window_index,label"]
    for dev in device_ids:
        for i in range(truth.n_windows):
            label = "attack" if truth.is_attack(dev, i) else "benign"
            lines.append(f"{dev},{i},{label}")
    return "\n".join(lines) + "\n"


def parse_labels_csv(text: str) -> dict[tuple[str, int], bool]:
    """Parse the labels CSV back into a (device, window) -> attack mapping."""
    lines = text.splitlines()
    if not lines or lines[0] != "device_id,window_index,label":
        raise ValueError("labels CSV header must be 'device_id,window_index,label'")
    labels = {}
    for line in lines[1:]:
        if not line:
            continue
        dev, idx, label = line.split(",")
        labels[(dev, int(idx))] = label == "attack"
    return labels
