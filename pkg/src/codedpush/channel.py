"""User geometry, Ricean fading and effective noise PSDs.

Each user gets one flat fading draw per scenario (block fading over the
delivery phase). The channel gain is folded into the noise so capacities use
the unit-gain form B log2(1 + P / (n_k B)) with n_k = n / g_k.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .models import FadingParams
from .utils import get_default

logger = logging.getLogger("codedpush.channel")


class ChannelError(ValueError):
    """Invalid channel query or scenario."""


@dataclass(frozen=True, eq=False)
class ChannelScenario:
    """Per-user channel state for one trial.

    Attributes:
        distances: Distance from the transmitter in meters, shape (K,).
        power_gain: g_k = |h_k|^2 * max(d_k, d_min)^(-exponent), shape (K,).
        effective_noise: n_k = base_psd / g_k in W/Hz, shape (K,).
        base_psd: n in W/Hz.
    """

    distances: np.ndarray
    power_gain: np.ndarray
    effective_noise: np.ndarray
    base_psd: float

    def __post_init__(self):
        if not (self.distances.shape == self.power_gain.shape == self.effective_noise.shape):
            raise ChannelError("scenario arrays must share one shape")
        if np.any(self.power_gain <= 0):
            raise ChannelError("all power gains must be positive")
        if not np.all(np.isfinite(self.effective_noise)) or np.any(self.effective_noise <= 0):
            raise ChannelError("effective noise must be finite and positive")
        for arr in (self.distances, self.power_gain, self.effective_noise):
            arr.setflags(write=False)

    @property
    def num_users(self) -> int:
        return int(self.distances.size)

    @classmethod
    def homogeneous(cls, num_users: int, noise: float) -> ChannelScenario:
        """Every user at unit gain with effective noise ``noise``."""
        ones = np.ones(num_users)
        return cls(
            distances=ones.copy(),
            power_gain=ones.copy(),
            effective_noise=np.full(num_users, float(noise)),
            base_psd=float(noise),
        )

    def save_csv(self, path: str | Path) -> Path:
        """Write ``user,distance,gain,effective_noise`` rows."""
        path = Path(path)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["user", "distance", "gain", "effective_noise"])
            for k in range(self.num_users):
                writer.writerow(
                    [k, repr(float(self.distances[k])), repr(float(self.power_gain[k])),
                     repr(float(self.effective_noise[k]))]
                )
        return path

    @classmethod
    def load_csv(cls, path: str | Path, base_psd: float | None = None) -> ChannelScenario:
        """Read a scenario written by :meth:`save_csv`.

        ``base_psd`` defaults to gain * effective_noise of the first user.
        """
        with open(path, newline="") as f:
            rows = sorted(csv.DictReader(f), key=lambda r: int(r["user"]))
        if not rows:
            raise ChannelError(f"{path}: empty scenario")
        distances = np.array([float(r["distance"]) for r in rows])
        gain = np.array([float(r["gain"]) for r in rows])
        noise = np.array([float(r["effective_noise"]) for r in rows])
        if base_psd is None:
            base_psd = float(gain[0] * noise[0])
        return cls(distances=distances, power_gain=gain, effective_noise=noise, base_psd=base_psd)


def ricean_power(
    rng: np.random.Generator, size: int, rice_factor: float
) -> np.ndarray:
    """|h|^2 for h = sqrt(k/(k+1)) + sqrt(1/(2(k+1))) (z1 + i z2); E|h|^2 = 1."""
    if rice_factor >= float(get_default("channel", "rice_factor_infinite")):
        return np.ones(size)
    los = np.sqrt(rice_factor / (rice_factor + 1.0))
    scale = np.sqrt(1.0 / (2.0 * (rice_factor + 1.0)))
    z = rng.standard_normal((2, size))
    return (los + scale * z[0]) ** 2 + (scale * z[1]) ** 2


def sample_scenario(
    num_users: int,
    params: FadingParams | None = None,
    base_psd: float | None = None,
    seed: int = 0,
) -> ChannelScenario:
    """Drop ``num_users`` users uniformly over the cell and fade them.

    Radius r = R sqrt(u) for u ~ U(0, 1); one Ricean draw per user.
    Deterministic in ``seed``.
    """
    if num_users < 1:
        raise ChannelError(f"need at least one user, got {num_users}")
    params = params or FadingParams()
    if base_psd is None:
        base_psd = float(get_default("channel", "base_psd"))
    if base_psd <= 0:
        raise ChannelError(f"base_psd must be positive, got {base_psd}")

    rng = np.random.default_rng(int(seed))
    distances = params.cell_radius * np.sqrt(rng.random(num_users))
    fading = ricean_power(rng, num_users, params.rice_factor)
    path_gain = np.maximum(distances, params.min_distance) ** (-params.pathloss_exponent)
    gain = fading * path_gain

    # Degenerate Ricean draws can underflow to exactly 0.
    gain = np.maximum(gain, np.finfo(float).tiny)
    scenario = ChannelScenario(
        distances=distances,
        power_gain=gain,
        effective_noise=base_psd / gain,
        base_psd=float(base_psd),
    )
    logger.debug("scenario seed=%s K=%d worst n_k=%.3g", seed, num_users, scenario.effective_noise.max())
    return scenario


def _check_users(scenario: ChannelScenario, receivers: list[int]) -> None:
    bad = [k for k in receivers if not 0 <= k < scenario.num_users]
    if bad:
        raise ChannelError(f"user(s) {bad} outside 0..{scenario.num_users - 1}")


def worst_noise(scenario: ChannelScenario, receivers: Sequence[int]) -> float:
    """n^m = max over the receiver set of n_k."""
    receivers = [int(k) for k in receivers]
    if not receivers:
        raise ChannelError("receiver set must be nonempty")
    _check_users(scenario, receivers)
    return float(scenario.effective_noise[receivers].max())


def worst_noise_table(scenario: ChannelScenario, receiver_sets: Sequence[Sequence[int]]) -> np.ndarray:
    """worst_noise for many receiver sets at once, in the given order."""
    k = scenario.num_users
    membership = np.zeros((len(receiver_sets), k), dtype=bool)
    for row, receivers in enumerate(receiver_sets):
        if len(receivers) == 0:
            raise ChannelError(f"receiver set #{row} is empty")
        receivers = [int(j) for j in receivers]
        _check_users(scenario, receivers)
        membership[row, receivers] = True
    noise = np.where(membership, scenario.effective_noise[None, :], -np.inf)
    return noise.max(axis=1)


def capacity(bandwidth: ArrayLike, power: ArrayLike, noise: ArrayLike) -> np.ndarray:
    """Shannon rate B log2(1 + P / (n B)) in bits/s; broadcasts over arrays."""
    bandwidth = np.asarray(bandwidth, dtype=float)
    return bandwidth * np.log2(1.0 + np.asarray(power, dtype=float) / (np.asarray(noise) * bandwidth))
