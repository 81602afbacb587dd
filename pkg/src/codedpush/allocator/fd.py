"""Frequency division: min over (B_i, P_i) of max_i t_i.

Bisection on the completion time T. For a candidate T transmission i needs
rate R_i = S_i / T, and with bandwidth B_i the least power that carries it is

    P_i(B_i) = n_i B_i (2^(R_i / B_i) - 1),

strictly convex and decreasing in B_i. The cheapest band split equalises the
marginals dP_i/dB_i = -lambda. Writing x = R_i / B_i, the marginal is
n_i (2^x (1 - x ln 2) - 1), so

    x_i(lambda) = (1 + W0((lambda / n_i - 1) / e)) / ln 2

with W0 the principal Lambert W branch. The price lambda is found by bisection
so that sum_i R_i / x_i = B, and T is feasible iff the resulting total power
is at most P.
"""

from __future__ import annotations

import logging
import math

import numpy as np
from scipy.optimize import bisect
from scipy.special import lambertw

from ..channel import capacity
from ..utils import get_default
from .instance import AllocationError, FdAllocation, OptInstance
from .td import td_allocate

logger = logging.getLogger("codedpush.allocator")

_LN2 = math.log(2.0)
# Below this lambda/n the branch-point series is used instead of lambertw.
_SERIES_CUTOFF = 1e-6


def _rate_per_hz(price_ratio: np.ndarray) -> np.ndarray:
    """Spectral efficiency x solving 2^x (1 - x ln 2) - 1 = -c for c = lambda/n."""
    c = np.asarray(price_ratio, dtype=float)
    small = c < _SERIES_CUTOFF
    one_plus_w = np.empty_like(c)
    if small.any():
        p = np.sqrt(2.0 * c[small])
        one_plus_w[small] = p - p**2 / 3.0 + 11.0 * p**3 / 72.0 - 43.0 * p**4 / 540.0
    if (~small).any():
        one_plus_w[~small] = 1.0 + lambertw((c[~small] - 1.0) / math.e).real
    return one_plus_w / _LN2


def _split_bandwidth(
    rates: np.ndarray, noise: np.ndarray, bandwidth: float, rtol: float, max_iter: int
) -> np.ndarray:
    """Least-power band split carrying ``rates``; sums to ``bandwidth``."""

    def excess(log_price: float) -> float:
        with np.errstate(divide="ignore", over="ignore"):
            x = _rate_per_hz(np.exp(log_price) / noise)
            total = float(np.sum(rates / x))
        if total == 0.0:
            return -math.inf
        return math.log(total) - math.log(bandwidth)

    lo = hi = float(np.log(np.median(noise)))
    step = 1.0
    for _ in range(max_iter):
        if excess(lo) > 0:
            break
        lo -= step
        step *= 2.0
    step = 1.0
    for _ in range(max_iter):
        if excess(hi) < 0:
            break
        hi += step
        step *= 2.0

    log_price = bisect(excess, lo, hi, xtol=rtol, maxiter=max_iter, disp=False)
    return rates / _rate_per_hz(np.exp(log_price) / noise)


def _min_power(
    sizes: np.ndarray, noise: np.ndarray, bandwidth: float, t: float, rtol: float, max_iter: int
) -> tuple[float, np.ndarray]:
    rates = sizes / t
    bands = _split_bandwidth(rates, noise, bandwidth, rtol, max_iter)
    with np.errstate(over="ignore"):
        powers = noise * bands * np.expm1(_LN2 * rates / bands)
    return float(powers.sum()), bands


def fd_allocate(
    inst: OptInstance,
    tol: float | None = None,
    *,
    max_iter: int | None = None,
    multiplier_rtol: float | None = None,
) -> FdAllocation:
    """Min-max FD allocation.

    Args:
        inst: Problem instance; inactive transmissions get B_i = P_i = 0.
        tol: Relative tolerance on the completion time, in (0, 1e-2].
        max_iter: Iteration cap for the completion-time bisection. The inner
            price bisection always uses the configured cap.
        multiplier_rtol: Tolerance of the inner bandwidth-price bisection
            (on log lambda).

    Returns:
        FdAllocation with sum B_i = B, sum P_i = P and all active
        per-transmission times within ``tol`` of the total. ``converged`` is
        False when the outer bisection hit ``max_iter``; the allocation is then
        the best feasible point found.
    """
    solver = _solver_defaults()
    tol = solver["fd_tol"] if tol is None else float(tol)
    inner_iter = solver["max_iter"]
    max_iter = inner_iter if max_iter is None else int(max_iter)
    multiplier_rtol = solver["multiplier_rtol"] if multiplier_rtol is None else multiplier_rtol
    if not 0 < tol <= 1e-2:
        raise AllocationError(f"tol must lie in (0, 1e-2], got {tol}")

    n = len(inst)
    active = inst.active
    bands = np.zeros(n)
    powers = np.zeros(n)
    times = np.zeros(n)
    if not active.any():
        return FdAllocation(bands, powers, 0.0, times, instance=inst)

    sizes = inst.sizes[active]
    noise = inst.worst_noise[active]
    bw, pw = inst.bandwidth, inst.power

    if sizes.size == 1:
        bands[active] = bw
        powers[active] = pw
        times[active] = sizes / capacity(bw, pw, noise)
        return FdAllocation(bands, powers, float(times.max()), times, instance=inst)

    def infeasibility(t: float) -> float:
        return math.log(_min_power(sizes, noise, bw, t, multiplier_rtol, inner_iter)[0]) - math.log(pw)

    # No transmission can beat its solo time; the TD point is feasible in FD.
    t_lo = float(inst.solo_times()[active].max())
    t_hi = td_allocate(inst).total_time
    while infeasibility(t_hi) > 0:
        t_hi *= 2.0

    # Bisect well below tol so the equal-time spread stays inside it.
    inner_rtol = max(tol * 1e-3, 1e-14)
    converged = True
    iterations = 0
    if infeasibility(t_lo) <= 0:
        t_star = t_lo
    else:
        t_star, info = bisect(
            infeasibility,
            t_lo,
            t_hi,
            xtol=t_lo * inner_rtol,
            rtol=inner_rtol,
            maxiter=max_iter,
            full_output=True,
            disp=False,
        )
        converged, iterations = bool(info.converged), int(info.iterations)
        if not converged:
            logger.warning("FD bisection did not converge in %d iterations", max_iter)
            t_star = t_hi
        elif infeasibility(t_star) > 0:
            t_star = min(t_star * (1.0 + inner_rtol), t_hi)

    _, active_bands = _min_power(sizes, noise, bw, t_star, multiplier_rtol, inner_iter)
    active_bands *= bw / active_bands.sum()
    rates = sizes / t_star
    with np.errstate(over="ignore"):
        active_powers = noise * active_bands * np.expm1(_LN2 * rates / active_bands)
    active_powers *= pw / active_powers.sum()

    bands[active] = active_bands
    powers[active] = active_powers
    times[active] = sizes / capacity(active_bands, active_powers, noise)
    total = float(times.max())
    logger.debug("FD: L=%d T=%.6g iterations=%d", sizes.size, total, iterations)
    return FdAllocation(
        bands, powers, total, times, instance=inst, converged=converged, iterations=iterations
    )


def _solver_defaults() -> dict:
    return {
        "fd_tol": float(get_default("solver", "fd_tol")),
        "max_iter": int(get_default("solver", "max_iter")),
        "multiplier_rtol": float(get_default("solver", "multiplier_rtol")),
    }


def per_transmission_times(inst: OptInstance, bandwidths: np.ndarray, powers: np.ndarray) -> np.ndarray:
    """t_i = S_i / (B_i log2(1 + P_i / (n_i^m B_i))); 0 for inactive, inf if starved."""
    bandwidths = np.asarray(bandwidths, dtype=float)
    powers = np.asarray(powers, dtype=float)
    times = np.zeros(len(inst))
    active = inst.active
    ok = active & (bandwidths > 0) & (powers > 0)
    times[active & ~ok] = np.inf
    times[ok] = inst.sizes[ok] / capacity(bandwidths[ok], powers[ok], inst.worst_noise[ok])
    return times
