"""Resource-allocation instances, allocation records and their CSV forms."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np

logger = logging.getLogger("codedpush.allocator")

Mode = Literal["td", "fd"]


class AllocationError(ValueError):
    """Invalid allocation instance or request."""


@dataclass(frozen=True, eq=False)
class OptInstance:
    """One min-time allocation problem.

    Attributes:
        sizes: S_i in bits, shape (L,).
        worst_noise: n_i^m in W/Hz, shape (L,).
        power: P in watts.
        bandwidth: B in Hz.
        weights: omega_i, shape (L,); ones by default.

    Zero-size transmissions are allowed and excluded from allocation. An
    all-zero instance solves to a zero-time allocation.
    """

    sizes: np.ndarray
    worst_noise: np.ndarray
    power: float
    bandwidth: float
    weights: np.ndarray | None = None

    def __post_init__(self):
        sizes = np.asarray(self.sizes, dtype=float).reshape(-1)
        noise = np.asarray(self.worst_noise, dtype=float).reshape(-1)
        weights = (
            np.ones_like(sizes)
            if self.weights is None
            else np.asarray(self.weights, dtype=float).reshape(-1)
        )
        if sizes.shape != noise.shape or sizes.shape != weights.shape:
            raise AllocationError(
                f"sizes {sizes.shape}, worst_noise {noise.shape} and weights "
                f"{weights.shape} must have one length"
            )
        if sizes.size == 0:
            raise AllocationError("instance has no transmissions")
        if np.any(sizes < 0) or not np.all(np.isfinite(sizes)):
            raise AllocationError("sizes must be finite and >= 0")
        if np.any(noise <= 0) or not np.all(np.isfinite(noise)):
            raise AllocationError("worst_noise must be finite and > 0")
        if np.any(weights <= 0):
            raise AllocationError("weights must be > 0")
        if not (self.power > 0 and self.bandwidth > 0):
            raise AllocationError(f"P={self.power} and B={self.bandwidth} must be > 0")
        for name, arr in (("sizes", sizes), ("worst_noise", noise), ("weights", weights)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "power", float(self.power))
        object.__setattr__(self, "bandwidth", float(self.bandwidth))

    def __len__(self) -> int:
        return int(self.sizes.size)

    @property
    def active(self) -> np.ndarray:
        """Boolean mask of transmissions with S_i > 0."""
        return self.sizes > 0

    def spectral_efficiency(self) -> np.ndarray:
        """log2(1 + P / (n_i^m B)) with full power and band."""
        return np.log2(1.0 + self.power / (self.worst_noise * self.bandwidth))

    def solo_times(self) -> np.ndarray:
        """a_i = S_i / (B log2(1 + P/(n_i^m B))): time with all resources."""
        return self.sizes / (self.bandwidth * self.spectral_efficiency())

    def scaled(self, factor: float) -> OptInstance:
        """Same instance with every S_i multiplied by ``factor``."""
        return OptInstance(
            sizes=self.sizes * factor,
            worst_noise=self.worst_noise,
            power=self.power,
            bandwidth=self.bandwidth,
            weights=self.weights,
        )

    # ── CSV ──

    def save_csv(self, path: str | Path) -> Path:
        """Header comments carry P and B; rows are ``index,S_bits,n_m``."""
        path = Path(path)
        with open(path, "w", newline="") as f:
            f.write(f"# power={self.power!r}\n# bandwidth={self.bandwidth!r}\n")
            writer = csv.writer(f)
            writer.writerow(["index", "S_bits", "n_m"])
            for i in range(len(self)):
                writer.writerow([i, repr(float(self.sizes[i])), repr(float(self.worst_noise[i]))])
        return path

    @classmethod
    def load_csv(cls, path: str | Path) -> OptInstance:
        """Read an instance file written by :meth:`save_csv`."""
        path = Path(path)
        header: dict[str, float] = {}
        body: list[str] = []
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                key, sep, value = stripped.lstrip("#").partition("=")
                if not sep:
                    continue
                try:
                    header[key.strip()] = float(value)
                except ValueError:
                    raise AllocationError(f"{path}:{lineno}: bad header value {value!r}") from None
            else:
                body.append(line)
        missing = {"power", "bandwidth"} - header.keys()
        if missing:
            raise AllocationError(f"{path}: missing header field(s) {sorted(missing)}")

        rows = list(csv.DictReader(body))
        if not rows:
            raise AllocationError(f"{path}: no transmissions")
        try:
            rows.sort(key=lambda r: int(r["index"]))
            sizes = np.array([float(r["S_bits"]) for r in rows])
            noise = np.array([float(r["n_m"]) for r in rows])
        except (KeyError, TypeError, ValueError) as e:
            raise AllocationError(f"{path}: malformed row ({e})") from None
        return cls(sizes=sizes, worst_noise=noise, power=header["power"], bandwidth=header["bandwidth"])


@dataclass(frozen=True, eq=False)
class TdAllocation:
    """Time-division solution.

    Attributes:
        fractions: tau_i, zero for inactive transmissions, summing to 1.
        total_time: sum_i a_i / tau_i in seconds.
        times: Per-transmission times a_i / tau_i.
        objective: Weighted objective sum_i omega_i a_i / tau_i.
    """

    fractions: np.ndarray
    total_time: float
    times: np.ndarray
    objective: float
    instance: OptInstance = field(repr=False)

    mode: Mode = "td"
    converged: bool = True


@dataclass(frozen=True, eq=False)
class FdAllocation:
    """Frequency-division solution.

    Attributes:
        bandwidths: B_i in Hz, zero for inactive transmissions, summing to B.
        powers: P_i in watts, zero for inactive transmissions, summing to P.
        total_time: max_i t_i in seconds.
        times: Per-transmission times t_i.
        converged: False when the bisection hit its iteration cap.
        iterations: Outer bisection iterations used.
    """

    bandwidths: np.ndarray
    powers: np.ndarray
    total_time: float
    times: np.ndarray
    instance: OptInstance = field(repr=False)
    converged: bool = True
    iterations: int = 0

    mode: Mode = "fd"


Allocation = TdAllocation | FdAllocation


def save_solution_csv(alloc: Allocation, path: str | Path) -> Path:
    """Write ``index,tau_or_B,P_i,time_i``; TD rows carry full power P."""
    path = Path(path)
    inst = alloc.instance
    if isinstance(alloc, TdAllocation):
        share = alloc.fractions
        powers = np.where(inst.active, inst.power, 0.0)
    else:
        share = alloc.bandwidths
        powers = alloc.powers
    with open(path, "w", newline="") as f:
        f.write(f"# mode={alloc.mode}\n# total_time={alloc.total_time!r}\n")
        writer = csv.writer(f)
        writer.writerow(["index", "tau_or_B", "P_i", "time_i"])
        for i in range(len(inst)):
            writer.writerow(
                [i, repr(float(share[i])), repr(float(powers[i])), repr(float(alloc.times[i]))]
            )
    logger.info("Solution written to %s", path)
    return path


def throughput(total_time: float, useful_bits: float) -> float:
    """useful_bits / total_time in bits/s.

    Raises:
        AllocationError: If ``total_time`` is not positive.
    """
    if not total_time > 0:
        raise AllocationError(f"throughput undefined for total_time={total_time}")
    return float(useful_bits) / float(total_time)
