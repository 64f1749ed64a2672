"""Information metrics over feature distributions.

Shannon and Renyi entropies measure how concentrated a window's traffic is;
the divergences measure how far an observed distribution drifted from a
baseline. All logs are taken in a configurable base (default 2) via the
natural-log ratio, all arithmetic in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .windows import FeatureDistribution


class EntropyError(Exception):
    """Base class for information-metric failures."""


class EmptyDistribution(EntropyError):
    """Metric requested for a window with no measurement."""


class AlphaIsOne(EntropyError):
    """Renyi order is 1; use the Shannon/KL limit form instead."""


class FeatureMismatch(EntropyError):
    """Divergence between distributions of different feature kinds."""


@dataclass(frozen=True)
class EntropyConfig:
    """Log base, Renyi order, and the floor applied to missing baseline mass."""

    base: float = 2.0
    alpha: float = 2.0
    epsilon_floor: float = 1e-6

    def __post_init__(self):
        if self.base <= 1.0:
            raise ValueError("log base must exceed 1")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if not 0.0 < self.epsilon_floor < 1.0:
            raise ValueError("epsilon_floor must lie in (0, 1)")


def _check(dist: FeatureDistribution | None) -> FeatureDistribution:
    if dist is None:
        raise EmptyDistribution("no measurement in window")
    return dist


def _log(x, base: float):
    return np.log(x) / np.log(base)


def shannon_entropy(dist: FeatureDistribution, cfg: EntropyConfig = EntropyConfig()) -> float:
    """Shannon entropy sum p(x) * log_a(1 / p(x)); exactly 0 for a single value."""
    dist = _check(dist)
    if dist.distinct_count == 1:
        return 0.0
    p = dist.probs
    return float(np.sum(p * _log(1.0 / p, cfg.base)))


def renyi_entropy(dist: FeatureDistribution, cfg: EntropyConfig = EntropyConfig()) -> float:
    """Renyi entropy of order alpha: (1/(1-alpha)) * log_a(sum p^alpha)."""
    dist = _check(dist)
    if cfg.alpha == 1.0:
        raise AlphaIsOne("Renyi entropy undefined at alpha=1; use shannon_entropy")
    if dist.distinct_count == 1:
        return 0.0
    p = dist.probs
    return float(_log(np.sum(p ** cfg.alpha), cfg.base) / (1.0 - cfg.alpha))


def normalized_entropy(dist: FeatureDistribution, cfg: EntropyConfig = EntropyConfig()) -> float:
    """Shannon entropy divided by log_a of the distinct-value count, in [0, 1].

    A single-valued window is maximally concentrated, so the N0=1 singularity
    is defined as 0 — the same signature a low threshold is meant to catch.
    """
    dist = _check(dist)
    if dist.distinct_count == 1:
        return 0.0
    h = shannon_entropy(dist, cfg) / _log(float(dist.distinct_count), cfg.base)
    if not -1e-9 <= h <= 1.0 + 1e-9:
        raise EntropyError(f"normalized entropy {h} outside [0,1] beyond tolerance")
    return min(1.0, max(0.0, h))


def _union_probs(u: FeatureDistribution, v: FeatureDistribution,
                 floor: float) -> tuple[np.ndarray, np.ndarray]:
    """Align u and v on u's support, flooring values v has never seen.

    Values absent from u contribute nothing to either divergence (u(x)=0), so
    the union support reduces to u's support.
    """
    v_lookup = {value: float(p) for value, p in zip(v.support, v.probs)}
    vp = np.array([v_lookup.get(value, floor) for value in u.support], dtype=np.float64)
    return np.asarray(u.probs, dtype=np.float64), vp


def kl_divergence(u: FeatureDistribution, v: FeatureDistribution,
                  cfg: EntropyConfig = EntropyConfig()) -> float:
    """Kullback-Leibler divergence sum u(x) * log_a(u(x) / v(x)).

    Baseline mass missing for an observed value is floored at
    ``cfg.epsilon_floor`` so the result stays finite and monotone.
    """
    u, v = _check(u), _check(v)
    if u.feature != v.feature:
        raise FeatureMismatch(f"{u.feature.label} vs {v.feature.label}")
    up, vp = _union_probs(u, v, cfg.epsilon_floor)
    return float(np.sum(up * _log(up / vp, cfg.base)))


def renyi_divergence(u: FeatureDistribution, v: FeatureDistribution,
                     cfg: EntropyConfig = EntropyConfig()) -> float:
    """Renyi divergence (1/(alpha-1)) * log_a(sum u^alpha / v^(alpha-1)).

    This is the standard form that converges to kl_divergence as alpha -> 1;
    the same epsilon floor covers baseline values absent from v.
    """
    u, v = _check(u), _check(v)
    if cfg.alpha == 1.0:
        raise AlphaIsOne("Renyi divergence undefined at alpha=1; use kl_divergence")
    if u.feature != v.feature:
        raise FeatureMismatch(f"{u.feature.label} vs {v.feature.label}")
    up, vp = _union_probs(u, v, cfg.epsilon_floor)
    total = np.sum(up ** cfg.alpha / vp ** (cfg.alpha - 1.0))
    return float(_log(total, cfg.base) / (cfg.alpha - 1.0))
