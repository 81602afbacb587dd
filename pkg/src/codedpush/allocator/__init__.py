"""codedpush.allocator - Radio resource allocation for a delivery plan.

Time division (closed form), frequency division (min-max bisection),
quantization onto the slot x subcarrier grid, and brute-force grid oracles
for cross-checking the solvers on small instances.
"""

# Instances and solutions
from .instance import AllocationError as AllocationError
from .instance import Allocation as Allocation
from .instance import FdAllocation as FdAllocation
from .instance import Mode as Mode
from .instance import OptInstance as OptInstance
from .instance import TdAllocation as TdAllocation
from .instance import save_solution_csv as save_solution_csv
from .instance import throughput as throughput

# Solvers
from .td import td_allocate as td_allocate
from .td import td_objective as td_objective
from .fd import fd_allocate as fd_allocate
from .fd import per_transmission_times as per_transmission_times

# Grid
from .quantize import GridAssignment as GridAssignment
from .quantize import QuantizationError as QuantizationError
from .quantize import apportion as apportion
from .quantize import quantize as quantize

# Oracles
from .oracle import fd_grid_oracle as fd_grid_oracle
from .oracle import td_grid_oracle as td_grid_oracle


def allocate(inst: OptInstance, mode: Mode, *, tol: float | None = None) -> Allocation:
    """Dispatch to :func:`td_allocate` or :func:`fd_allocate`."""
    if mode == "td":
        return td_allocate(inst)
    if mode == "fd":
        return fd_allocate(inst, tol)
    raise AllocationError(f"unknown mode {mode!r}, expected 'td' or 'fd'")


__all__ = [
    "AllocationError",
    "Allocation",
    "FdAllocation",
    "Mode",
    "OptInstance",
    "TdAllocation",
    "save_solution_csv",
    "throughput",
    "td_allocate",
    "td_objective",
    "fd_allocate",
    "per_transmission_times",
    "allocate",
    "GridAssignment",
    "QuantizationError",
    "apportion",
    "quantize",
    "fd_grid_oracle",
    "td_grid_oracle",
]
