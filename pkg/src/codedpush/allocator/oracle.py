"""Brute-force grid oracles for small instances (at most three active transmissions).

Used to cross-check :func:`td_allocate` and :func:`fd_allocate`. The TD
oracle scans the simplex of time fractions on a uniform lattice. The FD
oracle scans (B_1, .., B_{L-1}, P_1, .., P_{L-1}) with the last transmission
taking the remainder of both budgets; the max-time objective has convex
sublevel sets, so a coarse box scan followed by repeated zooms on the best
cell converges to the global minimum.
"""

from __future__ import annotations

import logging

import numpy as np

from ..channel import capacity
from .instance import AllocationError, FdAllocation, OptInstance, TdAllocation

logger = logging.getLogger("codedpush.allocator")

MAX_ORACLE_TRANSMISSIONS = 3


def _check_small(inst: OptInstance) -> np.ndarray:
    active = np.flatnonzero(inst.active)
    if active.size > MAX_ORACLE_TRANSMISSIONS:
        raise AllocationError(
            f"grid oracle handles at most {MAX_ORACLE_TRANSMISSIONS} active transmissions, "
            f"got {active.size}"
        )
    return active


def td_grid_oracle(inst: OptInstance, step: float = 1e-3) -> TdAllocation:
    """Best lattice point tau in step * Z^L on the open simplex.

    Minimises the weighted objective sum_i omega_i a_i / tau_i.
    """
    active = _check_small(inst)
    n = len(inst)
    fractions = np.zeros(n)
    times = np.zeros(n)
    if active.size == 0:
        return TdAllocation(fractions, 0.0, times, 0.0, instance=inst)

    a = inst.solo_times()[active]
    w = inst.weights[active]
    if active.size == 1:
        fractions[active] = 1.0
        times[active] = a
        return TdAllocation(fractions, float(a[0]), times, float(w[0] * a[0]), instance=inst)

    lines = int(round(1.0 / step))
    ticks = np.arange(1, lines) / lines
    axes = np.meshgrid(*([ticks] * (active.size - 1)), indexing="ij", sparse=True)
    last = 1.0 - sum(axes)
    taus = [*axes, last]
    with np.errstate(divide="ignore", invalid="ignore"):
        objective = sum(w[i] * a[i] / taus[i] for i in range(active.size))
    objective = np.where(last > step / 2, objective, np.inf)

    best = np.unravel_index(int(np.argmin(objective)), objective.shape)
    tau = np.array([float(np.broadcast_to(t, objective.shape)[best]) for t in taus])
    fractions[active] = tau
    times[active] = a / tau
    return TdAllocation(
        fractions, float(times.sum()), times, float(objective[best]), instance=inst
    )


def _fd_box_scan(
    sizes: np.ndarray,
    noise: np.ndarray,
    bandwidth: float,
    power: float,
    lows: np.ndarray,
    highs: np.ndarray,
    points: int,
) -> tuple[float, np.ndarray]:
    """Scan a box over the free (B, P) coordinates; returns (best max-time, coords)."""
    free = sizes.size - 1
    axes = np.meshgrid(
        *[np.linspace(lo, hi, points) for lo, hi in zip(lows, highs)],
        indexing="ij",
        sparse=True,
    )
    bands = [*axes[:free], bandwidth - sum(axes[:free])]
    powers = [*axes[free:], power - sum(axes[free:])]

    worst = None
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for i in range(sizes.size):
            ok = (bands[i] > 0) & (powers[i] > 0)
            b = np.where(ok, bands[i], 1.0)
            p = np.where(ok, powers[i], 1.0)
            t = np.where(ok, sizes[i] / capacity(b, p, noise[i]), np.inf)
            worst = t if worst is None else np.maximum(worst, t)

    flat = int(np.argmin(worst))
    best = np.unravel_index(flat, worst.shape)
    coords = np.array([float(np.broadcast_to(ax, worst.shape)[best]) for ax in axes])
    return float(worst[best]), coords


def fd_grid_oracle(
    inst: OptInstance, points: int = 41, rounds: int = 4, zoom: float = 2.0
) -> FdAllocation:
    """Min-max FD allocation by exhaustive box scans.

    Round one scans the full box [0, B]^(L-1) x [0, P]^(L-1) with ``points``
    per axis; each later round rescans a box of +-``zoom`` previous steps
    around the incumbent, so the final resolution is
    B / ((points - 1) * ((points - 1) / (2 * zoom)) ** (rounds - 1)).
    """
    active = _check_small(inst)
    n = len(inst)
    bands = np.zeros(n)
    powers = np.zeros(n)
    times = np.zeros(n)
    if active.size == 0:
        return FdAllocation(bands, powers, 0.0, times, instance=inst)

    sizes = inst.sizes[active]
    noise = inst.worst_noise[active]
    bw, pw = inst.bandwidth, inst.power
    if active.size == 1:
        bands[active], powers[active] = bw, pw
        times[active] = sizes / capacity(bw, pw, noise)
        return FdAllocation(bands, powers, float(times.max()), times, instance=inst)

    free = active.size - 1
    full = np.array([bw] * free + [pw] * free)
    lows, highs = np.zeros_like(full), full.copy()
    best_time, coords = np.inf, None
    for r in range(rounds):
        best_time, coords = _fd_box_scan(sizes, noise, bw, pw, lows, highs, points)
        spacing = (highs - lows) / (points - 1)
        lows = np.clip(coords - zoom * spacing, 0.0, full)
        highs = np.clip(coords + zoom * spacing, 0.0, full)
        logger.debug("FD oracle round %d: T=%.6g", r, best_time)

    active_bands = np.append(coords[:free], bw - coords[:free].sum())
    active_powers = np.append(coords[free:], pw - coords[free:].sum())
    bands[active] = active_bands
    powers[active] = active_powers
    times[active] = sizes / capacity(active_bands, active_powers, noise)
    return FdAllocation(bands, powers, best_time, times, instance=inst)
