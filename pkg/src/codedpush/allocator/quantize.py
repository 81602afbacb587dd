"""Rounding continuous allocations onto the slot x subcarrier grid.

The grid has ``slots`` rows of duration T_u and H columns of width B_u.
Each cell carries exactly one transmission. TD hands out whole rows and FD
whole columns, so the row/column indicators of every transmission are
all-or-nothing by construction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from ..utils import get_default
from .fd import per_transmission_times
from .instance import Allocation, AllocationError, FdAllocation, Mode, TdAllocation

logger = logging.getLogger("codedpush.allocator")


class QuantizationError(AllocationError):
    """The grid cannot give every active transmission at least one cell line."""


@dataclass(frozen=True, eq=False)
class GridAssignment:
    """Integer resource grid X[i, j] -> transmission index.

    The grid is stored run-length encoded: transmission k owns the
    contiguous block of rows (TD) or columns (FD) starting at
    ``offsets[k]`` and spanning ``counts[k]`` lines. Dense views are built
    on demand.

    Attributes:
        mode: ``"td"`` (blocks of rows) or ``"fd"`` (blocks of columns).
        slots: Number of time slots in the grid.
        subcarriers: H.
        counts: Rows (TD) or columns (FD) per transmission, shape (L,).
        continuous_time: Completion time of the continuous allocation.
        quantized_time: Completion time recomputed from the integer grid.
    """

    mode: Mode
    slots: int
    subcarriers: int
    counts: np.ndarray
    continuous_time: float
    quantized_time: float

    @property
    def offsets(self) -> np.ndarray:
        """First row (TD) or column (FD) of each transmission's block."""
        return np.concatenate(([0], np.cumsum(self.counts)[:-1])).astype(np.int64)

    @property
    def owners(self) -> np.ndarray:
        """Owning transmission per row (TD) or per column (FD)."""
        return np.repeat(np.arange(self.counts.size), self.counts)

    def _span(self, transmission: int) -> slice:
        if not 0 <= transmission < self.counts.size:
            raise QuantizationError(
                f"transmission {transmission} outside 0..{self.counts.size - 1}"
            )
        start = int(self.offsets[transmission])
        return slice(start, start + int(self.counts[transmission]))

    def matrix(self) -> np.ndarray:
        """The full (slots, H) assignment matrix."""
        if self.mode == "td":
            return np.repeat(self.owners[:, None], self.subcarriers, axis=1)
        return np.repeat(self.owners[None, :], self.slots, axis=0)

    def indicator(self, transmission: int) -> np.ndarray:
        """X^k as a (slots, H) boolean matrix."""
        cells = np.zeros((self.slots, self.subcarriers), dtype=bool)
        span = self._span(transmission)
        if self.mode == "td":
            cells[span, :] = True
        else:
            cells[:, span] = True
        return cells

    def row_indicator(self, transmission: int) -> np.ndarray:
        """Y_i^k: rows wholly owned by ``transmission`` (TD)."""
        span = self._span(transmission)
        rows = np.zeros(self.slots, dtype=bool)
        if self.mode == "td":
            rows[span] = True
        else:
            rows[:] = span.stop - span.start == self.subcarriers
        return rows

    def column_indicator(self, transmission: int) -> np.ndarray:
        """Z_j^k: columns wholly owned by ``transmission`` (FD)."""
        span = self._span(transmission)
        columns = np.zeros(self.subcarriers, dtype=bool)
        if self.mode == "fd":
            columns[span] = True
        else:
            columns[:] = span.stop - span.start == self.slots
        return columns


def apportion(weights: np.ndarray, total: int, *, minimum: int = 1) -> np.ndarray:
    """Largest-remainder rounding of ``weights`` to integers summing to ``total``.

    Entries with zero weight get 0; every positive entry gets at least
    ``minimum``. Remainder ties go to the lowest index.

    Raises:
        QuantizationError: If ``total`` cannot cover the minimum of every
            positive entry.
    """
    weights = np.asarray(weights, dtype=float)
    active = weights > 0
    n_active = int(active.sum())
    if n_active == 0:
        raise QuantizationError("nothing to apportion: all weights are zero")
    if total < minimum * n_active:
        raise QuantizationError(
            f"{total} grid lines cannot hold {n_active} active transmissions"
        )

    quotas = np.where(active, weights / weights[active].sum() * total, 0.0)
    counts = np.floor(quotas).astype(np.int64)
    remainders = quotas - counts
    idx = np.arange(weights.size)

    raised = active & (counts < minimum)
    if raised.any():
        logger.warning(
            "quantization: %d transmission(s) lifted to the minimum of %d line(s)",
            int(raised.sum()),
            minimum,
        )
        counts[raised] = minimum

    short = total - int(counts.sum())
    if short > 0:
        order = [i for i in np.lexsort((idx, -remainders)) if active[i]]
        for step in range(short):
            counts[order[step % len(order)]] += 1
    while short < 0:
        # Take back from the entry furthest above its quota, highest index on ties.
        excess = np.where(active & (counts > minimum), counts - quotas, -np.inf)
        victim = int(np.lexsort((-idx, -excess))[0])
        counts[victim] -= 1
        short += 1
    return counts


def _check_rows(rows: int) -> int:
    limit = int(get_default("limits", "max_grid_rows"))
    if rows > limit:
        raise QuantizationError(
            f"grid of {rows} slots exceeds the limit of {limit}; "
            "use a longer slot duration or pass an explicit slot count"
        )
    return rows


def quantize(
    alloc: Allocation,
    subcarriers: int,
    slot_duration: float,
    subcarrier_bw: float,
    *,
    slots: int | None = None,
) -> GridAssignment:
    """Round ``alloc`` onto an integer grid.

    Args:
        alloc: TD or FD allocation.
        subcarriers: H.
        slot_duration: T_u in seconds.
        subcarrier_bw: B_u in Hz; FD requires H * B_u == B.
        slots: Grid height. TD defaults to ceil(T / T_u), at least one row
            per active transmission; FD defaults to enough rows to cover the
            quantized completion time.

    TD rows are apportioned from tau_i and the quantized time is
    sum_i a_i / tau'_i with tau'_i = rows_i / slots. FD columns are
    apportioned from B_i / B_u; each transmission keeps its power P_i and
    the quantized time is max_i t_i at B'_i = columns_i * B_u.

    Raises:
        QuantizationError: On an empty allocation, non-positive grid
            parameters, too few rows/columns, more slots than
            ``limits.max_grid_rows``, or H * B_u != B in FD mode.
    """
    if subcarriers < 1 or not slot_duration > 0 or not subcarrier_bw > 0:
        raise QuantizationError(
            f"grid needs H >= 1, T_u > 0 and B_u > 0 (got {subcarriers}, "
            f"{slot_duration}, {subcarrier_bw})"
        )
    inst = alloc.instance
    if not inst.active.any():
        raise QuantizationError("allocation has no active transmissions")
    n_active = int(inst.active.sum())

    if isinstance(alloc, TdAllocation):
        rows = slots
        if rows is None:
            rows = max(math.ceil(alloc.total_time / slot_duration), n_active)
        rows = _check_rows(int(rows))
        counts = apportion(alloc.fractions, rows)
        active = inst.active
        a = inst.solo_times()[active]
        quantized = float(np.sum(a / (counts[active] / rows)))
        grid = GridAssignment(
            mode="td",
            slots=int(rows),
            subcarriers=int(subcarriers),
            counts=counts,
            continuous_time=alloc.total_time,
            quantized_time=quantized,
        )
    elif isinstance(alloc, FdAllocation):
        if not math.isclose(subcarriers * subcarrier_bw, inst.bandwidth, rel_tol=1e-9):
            raise QuantizationError(
                f"H * B_u = {subcarriers * subcarrier_bw} does not match B = {inst.bandwidth}"
            )
        counts = apportion(alloc.bandwidths, int(subcarriers))
        times = per_transmission_times(inst, counts * subcarrier_bw, alloc.powers)
        quantized = float(times.max())
        rows = slots if slots is not None else max(1, math.ceil(quantized / slot_duration))
        rows = _check_rows(int(rows))
        grid = GridAssignment(
            mode="fd",
            slots=int(rows),
            subcarriers=int(subcarriers),
            counts=counts,
            continuous_time=alloc.total_time,
            quantized_time=quantized,
        )
    else:
        raise QuantizationError(f"cannot quantize {type(alloc).__name__}")

    logger.debug(
        "quantized %s onto %dx%d grid: T=%.6g -> %.6g",
        grid.mode,
        grid.slots,
        grid.subcarriers,
        grid.continuous_time,
        grid.quantized_time,
    )
    return grid
