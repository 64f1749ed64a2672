"""Tabular Q-learning of per-feature alarm thresholds.

One agent owns one (device class, feature) pair. Per episode it observes the
discretized (hit rate, false-alarm rate) state, picks a threshold from its
action grid epsilon-greedily, runs it for a fixed number of windows, collects
the period reward, and applies one temporal-difference update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, NamedTuple

import numpy as np

from .detector import (ALARM, ConfusionCounts, ThresholdEntry, ThresholdVector,
                       UtilityParams, evaluate_feature, period_rates, period_reward)
from .windows import FeatureKind

SCHEMA_VERSION = 1

EPSILON_AS_GREEDY = "greedy"
EPSILON_AS_EXPLORE = "explore"


class StreamExhausted(Exception):
    """Fewer windows remained than one episode needs; nothing was updated."""


class FingerprintMismatch(Exception):
    """Persisted table was trained under a different state/action layout."""


class SchemaVersionMismatch(Exception):
    """Persisted document uses an unsupported schema version."""


def default_action_grid(n: int = 21, low: float = 0.0, high: float = 1.0) -> tuple[float, ...]:
    """Evenly spaced threshold grid over [low, high]."""
    return tuple(low + (high - low) * i / (n - 1) for i in range(n))


@dataclass(frozen=True)
class AgentConfig:
    """Learning hyperparameters, state binning, and the threshold action grid.

    ``epsilon`` follows ``epsilon_semantics``: as "greedy" it is the greedy
    probability (explore with 1 - epsilon); as "explore" it is the exploration
    probability itself. The exploration probability decays multiplicatively per
    episode down to ``epsilon_floor``.
    """

    learning_rate: float = 0.1
    discount: float = 0.8
    epsilon: float = 0.9
    epsilon_semantics: str = EPSILON_AS_GREEDY
    epsilon_decay: float = 0.995
    epsilon_floor: float = 0.01
    hit_bins: int = 10
    fa_bins: int = 10
    action_grid: tuple[float, ...] = field(default_factory=default_action_grid)
    episode_len: int = 12
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.learning_rate <= 1.0:
            raise ValueError("learning_rate must lie in (0, 1]")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError("discount must lie in [0, 1)")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.epsilon_semantics not in (EPSILON_AS_GREEDY, EPSILON_AS_EXPLORE):
            raise ValueError("epsilon_semantics must be 'greedy' or 'explore'")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ValueError("epsilon_decay must lie in (0, 1]")
        if self.hit_bins < 1 or self.fa_bins < 1 or self.hit_bins * self.fa_bins < 2:
            raise ValueError("state space needs at least 2 bins")
        grid = tuple(float(t) for t in self.action_grid)
        if len(grid) < 2:
            raise ValueError("action grid needs at least 2 thresholds")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("action grid must be strictly increasing")
        if grid[0] < 0.0 or grid[-1] > 1.0:
            raise ValueError("action grid values must lie in [0, 1]")
        object.__setattr__(self, "action_grid", grid)
        if self.episode_len < 1:
            raise ValueError("episode_len must be positive")

    @property
    def n_states(self) -> int:
        return self.hit_bins * self.fa_bins

    @property
    def n_actions(self) -> int:
        return len(self.action_grid)

    @property
    def explore_prob(self) -> float:
        if self.epsilon_semantics == EPSILON_AS_GREEDY:
            return 1.0 - self.epsilon
        return self.epsilon

    def fingerprint(self) -> dict:
        """Layout identity a persisted table must match to be loadable."""
        return {"hit_bins": self.hit_bins, "fa_bins": self.fa_bins,
                "action_grid": list(self.action_grid)}


class StateId(NamedTuple):
    hit_bin: int
    fa_bin: int


def discretize_state(hit: float, fa: float, cfg: AgentConfig) -> StateId:
    """Equal-width binning of the (hit rate, false-alarm rate) pair."""
    if not (0.0 <= hit <= 1.0 and 0.0 <= fa <= 1.0):
        raise ValueError(f"rates must lie in [0, 1]: ({hit}, {fa})")
    return StateId(min(int(hit * cfg.hit_bins), cfg.hit_bins - 1),
                   min(int(fa * cfg.fa_bins), cfg.fa_bins - 1))


def state_index(s: StateId, cfg: AgentConfig) -> int:
    return s.hit_bin * cfg.fa_bins + s.fa_bin


@dataclass
class QTable:
    """Dense action-value table with per-entry visit counts."""

    values: np.ndarray
    visit_counts: np.ndarray
    episodes: int = 0

    @classmethod
    def zeros(cls, cfg: AgentConfig) -> "QTable":
        return cls(np.zeros((cfg.n_states, cfg.n_actions)),
                   np.zeros((cfg.n_states, cfg.n_actions), dtype=np.int64))

    def row(self, s: StateId, cfg: AgentConfig) -> np.ndarray:
        return self.values[state_index(s, cfg)]


def select_action(q: QTable, s: StateId, cfg: AgentConfig,
                  rng: np.random.Generator, explore_prob: float | None = None) -> int:
    """Epsilon-greedy action: argmax (lowest index on ties) or uniform random."""
    p = cfg.explore_prob if explore_prob is None else explore_prob
    if p > 0.0 and rng.random() < p:
        return int(rng.integers(cfg.n_actions))
    return int(np.argmax(q.row(s, cfg)))


def q_update(q: QTable, s: StateId, a: int, r: float, s_next: StateId,
             cfg: AgentConfig) -> QTable:
    """One temporal-difference update; touches exactly the (s, a) entry."""
    if not math.isfinite(r):
        raise ValueError(f"reward must be finite, got {r}")
    i = state_index(s, cfg)
    best_next = float(np.max(q.row(s_next, cfg)))
    q.values[i, a] += cfg.learning_rate * (r + cfg.discount * best_next - q.values[i, a])
    q.visit_counts[i, a] += 1
    return q


def greedy_policy(q: QTable, cfg: AgentConfig) -> dict[StateId, float]:
    """Per state, the threshold at the argmax action (lowest index on ties)."""
    policy = {}
    for hit_bin in range(cfg.hit_bins):
        for fa_bin in range(cfg.fa_bins):
            s = StateId(hit_bin, fa_bin)
            policy[s] = cfg.action_grid[int(np.argmax(q.row(s, cfg)))]
    return policy


@dataclass(frozen=True, slots=True)
class WindowSample:
    """One window as seen by a single agent: its feature's entropy plus truth.

    ``entropy`` is None when the feature had no measurement in the window;
    such windows are excluded from the confusion counts.
    """

    entropy: float | None
    is_attack: bool
    window_index: int = -1
    device_id: str = ""


@dataclass(frozen=True)
class EpisodeResult:
    state_before: StateId
    state_after: StateId
    action: int
    reward: float
    counts: ConfusionCounts
    threshold_used: float


# Initial state convention: a clean period (all hits, no false alarms).
def initial_state(cfg: AgentConfig) -> StateId:
    return discretize_state(1.0, 0.0, cfg)


class ThresholdAgent:
    """An adaptive threshold for one (device class, feature) pair.

    The agent owns its Q-table and random source; when bound to a
    ThresholdVector it installs each episode's chosen threshold there.
    """

    def __init__(self, device_class: str, feature: FeatureKind, cfg: AgentConfig,
                 utility: UtilityParams, direction: str, ordinal: int = 0,
                 vector: ThresholdVector | None = None):
        self.device_class = device_class
        self.feature = feature
        self.cfg = cfg
        self.utility = utility
        self.direction = direction
        self.ordinal = ordinal
        self.vector = vector
        self.qtable = QTable.zeros(cfg)
        self.rng = np.random.default_rng(cfg.seed + ordinal)
        self.state = initial_state(cfg)
        self.explore_prob = cfg.explore_prob

    @property
    def name(self) -> str:
        return f"{self.device_class}:{self.feature.label}"

    def begin_episode(self) -> tuple[int, float]:
        """Select and install this episode's threshold; returns (action, theta)."""
        action = select_action(self.qtable, self.state, self.cfg, self.rng,
                               self.explore_prob)
        theta = self.cfg.action_grid[action]
        if self.vector is not None:
            self.vector.set_theta(self.feature, theta)
        return action, theta

    def entry_for(self, theta: float) -> ThresholdEntry:
        return ThresholdEntry(self.feature, theta, self.direction)

    def finish_episode(self, action: int, theta: float,
                       counts: ConfusionCounts) -> EpisodeResult:
        """Fold the episode's counts into one reward, state change, and update."""
        reward = period_reward(counts, self.utility)
        hit, fa = period_rates(counts)
        s_next = discretize_state(hit, fa, self.cfg)
        state_before = self.state
        q_update(self.qtable, state_before, action, reward, s_next, self.cfg)
        self.qtable.episodes += 1
        self.state = s_next
        self.explore_prob = max(self.cfg.epsilon_floor,
                                self.explore_prob * self.cfg.epsilon_decay)
        return EpisodeResult(state_before, s_next, action, reward, counts, theta)

    def policy(self) -> dict[StateId, float]:
        return greedy_policy(self.qtable, self.cfg)

    def to_dict(self) -> dict:
        return {
            "device_class": self.device_class,
            "feature": self.feature.label,
            "direction": self.direction,
            "fingerprint": self.cfg.fingerprint(),
            "values": self.qtable.values.tolist(),
            "visit_counts": self.qtable.visit_counts.tolist(),
            "episodes": self.qtable.episodes,
            "explore_prob": self.explore_prob,
            "state": [self.state.hit_bin, self.state.fa_bin],
        }

    def load_dict(self, payload: dict) -> None:
        """Restore a persisted table after checking the layout fingerprint."""
        if payload["fingerprint"] != self.cfg.fingerprint():
            raise FingerprintMismatch(
                f"agent {self.name}: persisted table layout does not match config")
        values = np.array(payload["values"], dtype=np.float64)
        visits = np.array(payload["visit_counts"], dtype=np.int64)
        if values.shape != (self.cfg.n_states, self.cfg.n_actions):
            raise FingerprintMismatch(
                f"agent {self.name}: table shape {values.shape} does not match config")
        if not np.all(np.isfinite(values)):
            raise ValueError("persisted Q values must be finite")
        self.qtable = QTable(values, visits, int(payload["episodes"]))
        self.explore_prob = float(payload["explore_prob"])
        self.state = StateId(*payload["state"])


def run_episode(agent: ThresholdAgent, samples: Iterator[WindowSample]) -> EpisodeResult:
    """Run one full episode over the next episode_len window samples.

    Raises StreamExhausted (without updating the table) when fewer samples
    remain than the episode needs.
    """
    action, theta = agent.begin_episode()
    entry = agent.entry_for(theta)
    counts = ConfusionCounts()
    for _ in range(agent.cfg.episode_len):
        try:
            sample = next(samples)
        except StopIteration:
            raise StreamExhausted(
                f"agent {agent.name}: episode needs {agent.cfg.episode_len} windows") from None
        if sample.entropy is None:
            continue
        alarmed = evaluate_feature(sample.entropy, entry) == ALARM
        if alarmed and sample.is_attack:
            counts += ConfusionCounts(n11=1)
        elif alarmed:
            counts += ConfusionCounts(n12=1)
        elif sample.is_attack:
            counts += ConfusionCounts(n21=1)
        else:
            counts += ConfusionCounts(n22=1)
    return agent.finish_episode(action, theta, counts)


def train(agent: ThresholdAgent, sample_source: Callable[[], Iterator[WindowSample]],
          episodes: int, cycle: bool = False) -> list[EpisodeResult]:
    """Run consecutive episodes from a replayable sample source.

    With ``cycle`` the source is reopened when exhausted, so a finite stream
    can support an arbitrary episode budget; otherwise training stops at the
    first StreamExhausted.
    """
    results = []
    stream = sample_source()
    while len(results) < episodes:
        try:
            results.append(run_episode(agent, stream))
        except StreamExhausted:
            if not cycle:
                break
            stream = sample_source()
            results.append(run_episode(agent, stream))
    return results
