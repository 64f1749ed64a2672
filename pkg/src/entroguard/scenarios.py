"""Canned seeded scenarios for demos, tests, and benchmark runs.

All scenarios run at desk scale (10 s windows, 60-180 s attacks, minutes of
span) so a full closed-loop experiment finishes in seconds. Device profiles
are shaped so attack signatures are statistically clean: a near-uniform
protocol mix keeps the benign PROTOCOL entropy baseline tight, and an uneven
port mix leaves headroom above the benign PORT entropy for scan detection.
"""

from __future__ import annotations

from .detector import ALARM_IF_ABOVE, ALARM_IF_BELOW, UtilityParams
from .entropy import EntropyConfig
from .experiment import ExperimentConfig, FeatureSpec
from .qlearn import AgentConfig, default_action_grid
from .simulate import AttackSpec, DeviceProfile, Scenario, Schedule
from .windows import PORT_SENT, PROTOCOL

WINDOW_LEN = 10.0


def balanced_iot_profile(device_id: str = "plug1", address: str = "10.0.0.10",
                         rate: float = 6.0) -> DeviceProfile:
    """A device whose benign protocol mix is nearly uniform.

    Near-uniform mixes minimize the variance of the windowed entropy
    estimate, so protocol-concentrating attacks separate cleanly even at low
    rates relative to the benign baseline.
    """
    return DeviceProfile(
        device_id=device_id, address=address, rate=rate,
        protocol_mix={"TCP": 0.24, "TLS": 0.22, "DNS": 0.20,
                      "UDP": 0.18, "ICMP": 0.16},
        peers={"203.0.113.10": 0.30, "203.0.113.11": 0.20, "203.0.113.12": 0.14,
               "203.0.113.13": 0.10, "203.0.113.14": 0.08, "203.0.113.15": 0.08,
               "203.0.113.16": 0.06, "203.0.113.17": 0.04},
        ports={8883: 0.6, 80: 0.4},
    )


def port_heavy_profile(device_id: str = "cam1", address: str = "10.0.0.20",
                       rate: float = 40.0) -> DeviceProfile:
    """A chatty device with a deliberately uneven remote-port mix.

    The benign PORT entropy sits well below 1, leaving room a port scan's
    near-uniform spray must exceed.
    """
    return DeviceProfile(
        device_id=device_id, address=address, rate=rate,
        protocol_mix={"TLS": 0.48, "TCP": 0.22, "UDP": 0.12,
                      "DNS": 0.10, "ICMP": 0.08},
        peers={"203.0.113.30": 0.35, "203.0.113.31": 0.25, "203.0.113.32": 0.18,
               "203.0.113.33": 0.12, "203.0.113.34": 0.10},
        ports={8883: 0.86, 80: 0.14},
        send_fraction=0.6,
    )


def signature_scenario(seed: int = 11) -> Scenario:
    """A 30-minute run exercising the three canonical attack signatures.

    The balanced device takes an ARP spoof burst (protocol entropy collapses)
    and a low-rate SYN flood (protocol entropy dips); the port-heavy device is
    compromised into an outbound port scan (port entropy spikes). Attack
    starts are window-aligned so labeled windows carry full signal.
    """
    plug = balanced_iot_profile()
    cam = port_heavy_profile()
    schedule = Schedule((
        AttackSpec("ARP_SPOOF", 100.0, 300.0, 120.0, plug.device_id),
        AttackSpec("PORT_SCAN", 100.0, 700.0, 120.0, cam.device_id),
        AttackSpec("TCP_SYN_FLOOD", 10.0, 1100.0, 180.0, plug.device_id),
    ))
    return Scenario((plug, cam), schedule, WINDOW_LEN, 1800.0, seed)


def stationary_scenario(episodes: int = 200, seed: int = 7) -> Scenario:
    """One attack kind and rate repeating on a fixed cadence.

    Each 120 s episode (12 windows) holds one 60 s low-rate SYN flood, so the
    reward landscape per threshold is stationary across episodes — the setting
    where a learned greedy threshold must reproduce the brute-force best.
    """
    plug = balanced_iot_profile()
    cycle = 120.0
    span = episodes * cycle
    entries = tuple(
        AttackSpec("TCP_SYN_FLOOD", 10.0, i * cycle, 60.0, plug.device_id)
        for i in range(episodes))
    return Scenario((plug,), Schedule(entries), WINDOW_LEN, span, seed)


# The mutative schedule opens with high-rate attacks (the regime the static
# baseline calibrates on), then shifts to mostly low-rate attacks whose
# entropy dip is too shallow for the stale static threshold.
_S1_KINDS = ("ARP_SPOOF", "TCP_SYN_FLOOD", "UDP_FLOOD", "PING_OF_DEATH",
             "PORT_SCAN", "REFLECTION_SMURF")
_S1_RATES = (
    100.0, 100.0, 100.0, 100.0, 100.0,
    10.0, 10.0, 10.0, 10.0, 100.0,
    10.0, 10.0, 10.0, 10.0, 100.0,
    10.0, 10.0, 10.0, 10.0, 10.0,
)
_S1_GAPS = (
    150.0, 150.0, 150.0, 150.0, 190.0,
    200.0, 210.0, 190.0, 200.0, 210.0,
    200.0, 190.0, 210.0, 200.0, 190.0,
    210.0, 200.0, 190.0, 200.0,
)


def mutative_scenario(seed: int = 22) -> Scenario:
    """Scenario S1: twenty window-aligned attacks mutating kind and rate."""
    plug = balanced_iot_profile()
    duration = 120.0
    entries = []
    t = 240.0
    for i in range(20):
        kind = _S1_KINDS[i % len(_S1_KINDS)]
        entries.append(AttackSpec(kind, _S1_RATES[i], t, duration, plug.device_id))
        if i < len(_S1_GAPS):
            t += duration + _S1_GAPS[i]
    schedule = Schedule(tuple(entries))
    span = (schedule.end + 200.0) // WINDOW_LEN * WINDOW_LEN
    return Scenario((plug,), schedule, WINDOW_LEN, span, seed)


def desk_agent_config(seed: int = 5, episode_len: int = 12) -> AgentConfig:
    """Agent settings for desk-scale runs.

    Short runs cannot afford the paper-scale learning rate of 0.1 or the
    near-greedy exploration schedule; a recency-weighted update with decaying
    exploration locks onto a working threshold within a dozen episodes.
    """
    return AgentConfig(
        learning_rate=0.7, discount=0.3,
        epsilon=0.9, epsilon_semantics="explore",
        epsilon_decay=0.85, epsilon_floor=0.01,
        hit_bins=2, fa_bins=2,
        action_grid=default_action_grid(21),
        episode_len=episode_len, seed=seed)


def mutative_experiment(seed: int = 22, agent_seed: int = 13) -> ExperimentConfig:
    """The full static-vs-RL comparison setup over scenario S1."""
    scenario = mutative_scenario(seed)
    return ExperimentConfig(
        mode="simulate",
        features=(FeatureSpec(PROTOCOL, ALARM_IF_BELOW),),
        utility=UtilityParams(),
        entropy=EntropyConfig(),
        agent=desk_agent_config(agent_seed),
        scenario=scenario,
        window_len=scenario.window_len,
        calibration_fraction=0.25)


def signature_experiment(seed: int = 11, agent_seed: int = 5) -> ExperimentConfig:
    """Comparison setup over the signature scenario (two devices, two features)."""
    scenario = signature_scenario(seed)
    return ExperimentConfig(
        mode="simulate",
        features=(FeatureSpec(PROTOCOL, ALARM_IF_BELOW),
                  FeatureSpec(PORT_SENT, ALARM_IF_ABOVE)),
        agent=desk_agent_config(agent_seed),
        scenario=scenario,
        window_len=scenario.window_len)
