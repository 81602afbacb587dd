"""Equal-power time division.

Each transmission uses the full power and band for a fraction tau_i of the
schedule; the objective sum_i omega_i a_i / tau_i over the simplex is
minimised by Cauchy-Schwarz:

    tau_i* = sqrt(omega_i a_i) / sum_j sqrt(omega_j a_j)

with a_i = S_i / (B log2(1 + P / (n_i^m B))). With unit weights the optimum
is (sum_i sqrt(a_i))^2.
"""

from __future__ import annotations

import logging

import numpy as np

from .instance import OptInstance, TdAllocation

logger = logging.getLogger("codedpush.allocator")


def td_objective(inst: OptInstance, fractions: np.ndarray) -> float:
    """sum_i omega_i a_i / tau_i over active transmissions (inf if any tau_i <= 0)."""
    fractions = np.asarray(fractions, dtype=float)
    active = inst.active
    if np.any(fractions[active] <= 0):
        return float("inf")
    a = inst.solo_times()[active]
    return float(np.sum(inst.weights[active] * a / fractions[active]))


def td_allocate(inst: OptInstance) -> TdAllocation:
    """Closed-form TD allocation.

    Inactive transmissions (S_i = 0) get tau_i = 0. An all-zero instance
    returns a zero-time allocation with all fractions zero.
    """
    active = inst.active
    fractions = np.zeros(len(inst))
    times = np.zeros(len(inst))
    if not active.any():
        logger.debug("all transmissions empty: zero-time TD allocation")
        return TdAllocation(
            fractions=fractions, total_time=0.0, times=times, objective=0.0, instance=inst
        )

    a = inst.solo_times()[active]
    root = np.sqrt(inst.weights[active] * a)
    fractions[active] = root / root.sum()
    times[active] = a / fractions[active]
    total = float(times.sum())
    objective = float(np.sum(inst.weights[active] * times[active]))
    return TdAllocation(
        fractions=fractions, total_time=total, times=times, objective=objective, instance=inst
    )
