"""Closed-form expected traffic for coded and uncoded delivery.

With p = M/N, a bit of a content is cached by a given user with probability
p independently across users, so the segment of a request cached by exactly
s-1 other named users has expected size F p^(s-1) (1-p)^(K-s+1). Summing
over all C(K, s) receiver sets of every size gives the coded total

    K (1 - p) * (N / (K M)) * (1 - (1 - p)^K) * F

which factors into the local cache gain K(1-p) and the global cache gain
(N/(KM))(1 - (1-p)^K).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .models import SystemConfig

logger = logging.getLogger("codedpush.analytic_model")


class DomainError(ValueError):
    """Argument outside the domain of a closed-form expression."""


@dataclass(frozen=True)
class TrafficSummary:
    """Expected delivery traffic for one configuration.

    Attributes:
        coded_total: Expected coded-delivery bits.
        baseline_total: Uncoded unicast bits, K(1-M/N)F.
        per_subset_size: Receiver-set cardinality s -> expected payload bits.
        traffic_gain: baseline_total / coded_total.
        local_gain: K(1-M/N).
        global_gain: (N/(KM))(1-(1-M/N)^K); 1.0 in the M = 0 limit.
        limit_applied: True when M = 0 and the coded total is the baseline limit.
    """

    coded_total: float
    baseline_total: float
    per_subset_size: dict[int, float]
    traffic_gain: float
    local_gain: float
    global_gain: float
    limit_applied: bool = False


def expected_payload_size(cfg: SystemConfig, receiver_count: int) -> float:
    """Expected bits of a transmission to ``receiver_count`` users.

    F (M/N)^(s-1) (1-M/N)^(K-s+1) for 1 <= s <= K.

    Raises:
        DomainError: If ``receiver_count`` is outside 1..K.
    """
    s, k = int(receiver_count), cfg.num_users
    if not 1 <= s <= k:
        raise DomainError(f"receiver count {receiver_count} outside 1..{k}")
    p = cfg.cache_fraction
    return cfg.content_size * p ** (s - 1) * (1.0 - p) ** (k - s + 1)


def payload_sizes_by_count(cfg: SystemConfig) -> np.ndarray:
    """Expected payload bits for s = 1..K as an array (index s-1)."""
    return np.array([expected_payload_size(cfg, s) for s in range(1, cfg.num_users + 1)])


def local_cache_gain(cfg: SystemConfig) -> float:
    return cfg.num_users * (1.0 - cfg.cache_fraction)


def global_cache_gain(cfg: SystemConfig) -> float:
    """(N/(KM))(1-(1-M/N)^K); undefined at M = 0."""
    if cfg.cache_contents <= 0:
        raise DomainError("global cache gain is singular at M = 0")
    p = cfg.cache_fraction
    return (1.0 - (1.0 - p) ** cfg.num_users) / (cfg.num_users * p)


def coded_total_traffic(cfg: SystemConfig, *, allow_limit: bool = False) -> float:
    """Expected coded-delivery traffic in bits.

    Args:
        cfg: System configuration.
        allow_limit: At M = 0 the closed form is 0/0; return the no-cache
            limit K*F instead of raising.

    Raises:
        DomainError: At M = 0 unless ``allow_limit``.
    """
    if cfg.cache_contents <= 0:
        if not allow_limit:
            raise DomainError("coded traffic formula is singular at M = 0; pass allow_limit=True")
        logger.debug("M = 0: using the no-cache limit K*F")
        return float(cfg.num_users * cfg.content_size)
    return local_cache_gain(cfg) * global_cache_gain(cfg) * cfg.content_size


def baseline_total_traffic(cfg: SystemConfig) -> float:
    """Uncoded unicast traffic K(1-M/N)F."""
    return local_cache_gain(cfg) * cfg.content_size


def traffic_summary(cfg: SystemConfig) -> TrafficSummary:
    """All closed-form traffic figures for ``cfg``; flags the M = 0 limit."""
    limit = cfg.cache_contents <= 0
    coded = coded_total_traffic(cfg, allow_limit=True)
    baseline = baseline_total_traffic(cfg)
    per_size = {s: expected_payload_size(cfg, s) for s in range(1, cfg.num_users + 1)}
    return TrafficSummary(
        coded_total=coded,
        baseline_total=baseline,
        per_subset_size=per_size,
        traffic_gain=baseline / coded if coded > 0 else float("inf"),
        local_gain=local_cache_gain(cfg),
        global_gain=1.0 if limit else global_cache_gain(cfg),
        limit_applied=limit,
    )


def subset_sum(cfg: SystemConfig) -> float:
    """sum_s C(K, s) * expected_payload_size(s); equals the coded total."""
    k = cfg.num_users
    counts = comb(k, np.arange(1, k + 1), exact=False)
    return float(np.dot(counts, payload_sizes_by_count(cfg)))
