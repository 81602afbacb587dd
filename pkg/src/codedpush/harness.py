"""End-to-end trials and parameter sweeps.

A trial draws a channel scenario, a request vector and (for bit-level sizes)
a placement, builds the coded or baseline transmission instance and solves
it in TD or FD mode. Every seed is split into three independent streams
(channel, requests, placement) so that coded/baseline and TD/FD runs at one
seed see the same users and the same requests.

Usage:
    spec = TrialSpec(system=SystemConfig(...), scheme="coded", mode="fd", trials=20)
    result = run_trial(spec)
    rows = sweep(spec, "power", [1.0, 10.0, 100.0], workers=4)
    write_csv(rows, "power.csv")
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from tqdm import tqdm

from .allocator import Mode, OptInstance, allocate
from .analytic_model import payload_sizes_by_count
from .cache_codec import (
    RequestVector,
    baseline_unicast_sizes,
    build_delivery_plan,
    make_placement,
    receiver_sets,
)
from .channel import sample_scenario, worst_noise_table
from .models import FadingParams, SystemConfig
from .utils import get_default

logger = logging.getLogger("codedpush.harness")

Scheme = Literal["coded", "baseline"]
SizesSource = Literal["analytic", "bitlevel"]
SweepParameter = Literal["cache_fraction", "power", "bandwidth", "users"]
RequestModel = Union[Literal["uniform", "distinct"], tuple[int, ...]]

SWEEP_PARAMETERS: tuple[str, ...] = ("cache_fraction", "power", "bandwidth", "users")
CSV_COLUMNS = (
    "parameter",
    "value",
    "scheme",
    "mode",
    "sizes_source",
    "trials",
    "mean_throughput_bps",
    "stderr_bps",
    "mean_total_time_s",
    "traffic_bits",
    "seed0",
    "error",
)


class HarnessError(ValueError):
    """Invalid trial or sweep request."""


class TrialSpec(BaseModel):
    """Everything one (possibly multi-seed) trial needs."""

    model_config = ConfigDict(frozen=True)

    system: SystemConfig = Field(description="Coded-caching universe and radio budget")
    scheme: Scheme = Field(default="coded", description="Coded multicast or uncoded unicast")
    mode: Mode = Field(default="td", description="Time or frequency division")
    sizes_source: SizesSource = Field(
        default="analytic", description="Expected payload sizes or realized bit-level sizes"
    )
    fading: FadingParams = Field(default_factory=FadingParams, description="Cell geometry and fading")
    base_psd: float = Field(
        default_factory=lambda: float(get_default("channel", "base_psd")),
        gt=0.0,
        description="n, noise PSD in W/Hz",
    )
    seed: int = Field(default=0, ge=0, description="First seed; trials use seed, seed+1, ...")
    trials: int = Field(default=1, ge=1, description="Number of seeds averaged")
    requests: RequestModel = Field(
        default="uniform", description="'uniform', 'distinct' or an explicit d_0..d_{K-1}"
    )
    fd_tol: Optional[float] = Field(
        default=None, gt=0.0, le=1e-2, description="FD relative tolerance (defaults from config)"
    )

    @model_validator(mode="after")
    def _check_scale(self) -> "TrialSpec":
        k = self.system.num_users
        cap_key = "max_users_bitlevel" if self.sizes_source == "bitlevel" else "max_users_analytic"
        cap = int(get_default("limits", cap_key))
        if k > cap:
            raise ValueError(f"K={k} exceeds the {self.sizes_source} limit of {cap} users")
        if isinstance(self.requests, tuple):
            if len(self.requests) != k:
                raise ValueError(f"requests has {len(self.requests)} entries, expected K={k}")
            bad = [d for d in self.requests if not 0 <= d < self.system.num_contents]
            if bad:
                raise ValueError(f"requested content(s) {bad} outside 0..{self.system.num_contents - 1}")
        return self


@dataclass(frozen=True, eq=False)
class TrialResult:
    """Outcome of :func:`run_trial` averaged over ``spec.trials`` seeds.

    Attributes:
        total_time: Mean completion time in seconds.
        throughput: useful_bits / total_time in bits/s.
        traffic: Mean transmitted bits.
        times: Per-seed per-transmission times.
        converged: Per-seed solver convergence flags.
        seed_times: Per-seed completion times.
        useful_bits: K(1-M/N)F.
    """

    spec: TrialSpec = field(repr=False)
    total_time: float
    throughput: float
    traffic: float
    times: tuple[np.ndarray, ...] = field(repr=False)
    converged: tuple[bool, ...]
    seed_times: np.ndarray = field(repr=False)
    useful_bits: float

    @property
    def seed_throughputs(self) -> np.ndarray:
        return self.useful_bits / self.seed_times

    @property
    def mean_throughput(self) -> float:
        """Arithmetic mean of the per-seed throughputs."""
        return float(self.seed_throughputs.mean())

    @property
    def stderr_throughput(self) -> float:
        """Standard error of the per-seed throughputs (0 for one seed)."""
        n = self.seed_times.size
        if n < 2:
            return 0.0
        return float(self.seed_throughputs.std(ddof=1) / math.sqrt(n))

    @property
    def all_converged(self) -> bool:
        return all(self.converged)


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    scheme: str
    mode: str
    sizes_source: str
    trials: int
    mean_throughput: float
    stderr: float
    mean_total_time: float
    traffic: float
    seed0: int
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass(frozen=True)
class GainRow:
    """Coded-over-baseline gains at one sweep point."""

    parameter: str
    value: float
    mode: str
    sizes_source: str
    throughput_gain: float
    traffic_gain: float


# ── Requests and seeds ──


def trial_seeds(seed: int) -> tuple[int, int, int]:
    """Independent (channel, requests, placement) seeds derived from ``seed``."""
    children = np.random.SeedSequence(int(seed)).spawn(3)
    return tuple(int(c.generate_state(1)[0]) for c in children)


def draw_requests(model: RequestModel, num_users: int, num_contents: int, seed: int) -> RequestVector:
    """Request vector under ``model``.

    ``uniform`` draws each d_k i.i.d. over the N contents, ``distinct`` sets
    d_k = k mod N, and a tuple is used as given.
    """
    if model == "uniform":
        rng = np.random.default_rng(int(seed))
        d = rng.integers(0, num_contents, size=num_users)
        return RequestVector(tuple(int(x) for x in d))
    if model == "distinct":
        return RequestVector(tuple(k % num_contents for k in range(num_users)))
    if isinstance(model, tuple):
        requests = RequestVector(tuple(int(x) for x in model))
        requests.validate(num_users, num_contents)
        return requests
    raise HarnessError(f"unknown request model {model!r}")


# ── Trials ──


def build_instance(spec: TrialSpec, seed: int) -> tuple[OptInstance, float]:
    """Transmission instance for one seed and its transmitted bits."""
    cfg = spec.system
    k = cfg.num_users
    ch_seed, req_seed, place_seed = trial_seeds(seed)
    scenario = sample_scenario(k, spec.fading, spec.base_psd, seed=ch_seed)
    requests = draw_requests(spec.requests, k, cfg.num_contents, req_seed)

    if spec.sizes_source == "bitlevel":
        placement = make_placement(cfg, place_seed)
        if spec.scheme == "coded":
            plan = build_delivery_plan(placement, requests)
            sizes = plan.sizes.astype(float)
            noise = worst_noise_table(scenario, plan.receiver_sets)
        else:
            sizes = baseline_unicast_sizes(placement, requests).astype(float)
            noise = scenario.effective_noise
    elif spec.scheme == "coded":
        sets = receiver_sets(k)
        by_count = payload_sizes_by_count(cfg)
        sizes = by_count[[len(s) - 1 for s in sets]]
        noise = worst_noise_table(scenario, sets)
    else:
        sizes = np.full(k, (1.0 - cfg.cache_fraction) * cfg.content_size)
        noise = scenario.effective_noise

    inst = OptInstance(sizes=sizes, worst_noise=noise, power=cfg.power, bandwidth=cfg.bandwidth)
    return inst, float(sizes.sum())


def run_trial(spec: TrialSpec) -> TrialResult:
    """Run ``spec`` at seeds seed, seed+1, ... and average.

    Raises:
        HarnessError: If a seed yields a zero-time (empty) delivery.
    """
    seed_times, times, converged, traffic = [], [], [], []
    for offset in range(spec.trials):
        seed = spec.seed + offset
        inst, bits = build_instance(spec, seed)
        alloc = allocate(inst, spec.mode, tol=spec.fd_tol)
        if not alloc.total_time > 0:
            raise HarnessError(f"seed {seed}: nothing to deliver (zero completion time)")
        if not alloc.converged:
            logger.warning("seed %d: %s solver did not converge", seed, spec.mode)
        seed_times.append(alloc.total_time)
        times.append(alloc.times)
        converged.append(bool(alloc.converged))
        traffic.append(bits)

    useful = spec.system.useful_bits
    total_time = float(np.mean(seed_times))
    logger.debug(
        "trial %s/%s/%s seeds=%d..%d T=%.6g",
        spec.scheme,
        spec.mode,
        spec.sizes_source,
        spec.seed,
        spec.seed + spec.trials - 1,
        total_time,
    )
    return TrialResult(
        spec=spec,
        total_time=total_time,
        throughput=useful / total_time,
        traffic=float(np.mean(traffic)),
        times=tuple(times),
        converged=tuple(converged),
        seed_times=np.asarray(seed_times),
        useful_bits=useful,
    )


# ── Sweeps ──


def _check_request_length(spec: TrialSpec, num_users: int) -> None:
    if isinstance(spec.requests, tuple) and len(spec.requests) != num_users:
        raise HarnessError(
            f"explicit requests cover {len(spec.requests)} users but the sweep asks for "
            f"K={num_users}; use requests=\"uniform\" or \"distinct\" to sweep users"
        )


def with_parameter(spec: TrialSpec, parameter: str, value: float) -> TrialSpec:
    """``spec`` with one swept quantity replaced; re-validates everything.

    ``cache_fraction`` sets M = value * N; ``users`` needs an integral value.
    """
    system = spec.system.model_dump()
    if parameter == "cache_fraction":
        system["cache_contents"] = float(value) * spec.system.num_contents
    elif parameter == "power":
        system["power"] = float(value)
    elif parameter == "bandwidth":
        system["bandwidth"] = float(value)
        system["subcarrier_bw"] = None
    elif parameter == "users":
        if float(value) != int(value):
            raise HarnessError(f"users must be an integer, got {value}")
        _check_request_length(spec, int(value))
        system["num_users"] = int(value)
    else:
        raise HarnessError(f"unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}")
    return TrialSpec.model_validate({**spec.model_dump(), "system": system})


def _sweep_point(
    spec: TrialSpec, parameter: str, value: float, scheme: str, mode: str, source: str
) -> SweepRow:
    try:
        point = with_parameter(spec, parameter, value)
        point = point.model_copy(update={"scheme": scheme, "mode": mode, "sizes_source": source})
        # model_copy skips validation; re-validate the scheme/source caps.
        point = TrialSpec.model_validate(point.model_dump())
        result = run_trial(point)
    except (ValueError, ArithmeticError) as e:
        logger.warning("sweep point %s=%s %s/%s/%s failed: %s", parameter, value, scheme, mode, source, e)
        nan = float("nan")
        return SweepRow(
            parameter, float(value), scheme, mode, source, spec.trials, nan, nan, nan, nan,
            spec.seed, error=str(e).replace("\n", " "),
        )
    return SweepRow(
        parameter=parameter,
        value=float(value),
        scheme=scheme,
        mode=mode,
        sizes_source=source,
        trials=point.trials,
        mean_throughput=result.mean_throughput,
        stderr=result.stderr_throughput,
        mean_total_time=result.total_time,
        traffic=result.traffic,
        seed0=point.seed,
    )


def sweep(
    spec: TrialSpec,
    parameter: SweepParameter,
    grid: Sequence[float],
    *,
    schemes: Sequence[Scheme] = ("coded", "baseline"),
    modes: Sequence[Mode] = ("td", "fd"),
    sizes_sources: Sequence[SizesSource] | None = None,
    workers: int = 1,
    progress: bool = False,
) -> list[SweepRow]:
    """One row per (grid value, scheme, mode, sizes source).

    All rows at a grid value share ``spec.seed`` so the comparison is
    paired. A failing point is recorded in its row's ``error`` field and
    the sweep continues. Rows are sorted by (value, scheme, mode,
    sizes_source) whatever the completion order.

    Raises:
        HarnessError: On an empty grid, an unknown parameter, or a users
            sweep over explicit requests of a different length.
    """
    if not grid:
        raise HarnessError("sweep grid is empty")
    if parameter not in SWEEP_PARAMETERS:
        raise HarnessError(f"unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}")
    if parameter == "users":
        for v in grid:
            _check_request_length(spec, int(v))
    sources = tuple(sizes_sources) if sizes_sources else (spec.sizes_source,)
    jobs = [
        (float(v), s, m, src) for v in grid for s in schemes for m in modes for src in sources
    ]
    logger.info("sweep %s over %d point(s), %d job(s)", parameter, len(grid), len(jobs))

    bar = tqdm(total=len(jobs), desc=f"sweep {parameter}", disable=not progress)
    rows: list[SweepRow] = []
    try:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_sweep_point, spec, parameter, *job) for job in jobs]
                for fut in futures:
                    rows.append(fut.result())
                    bar.update()
        else:
            for job in jobs:
                rows.append(_sweep_point(spec, parameter, *job))
                bar.update()
    finally:
        bar.close()

    rows.sort(key=lambda r: (r.value, r.scheme, r.mode, r.sizes_source))
    return rows


def gain_table(rows: Iterable[SweepRow]) -> list[GainRow]:
    """Pair coded and baseline rows at equal (value, mode, sizes_source).

    Throughput gain is coded / baseline throughput; traffic gain is
    baseline / coded transmitted bits. Pairs with a failed side are skipped.
    """
    by_key: dict[tuple, dict[str, SweepRow]] = {}
    for row in rows:
        if row.ok:
            by_key.setdefault((row.parameter, row.value, row.mode, row.sizes_source), {})[row.scheme] = row
    gains = []
    for (parameter, value, mode, source), pair in sorted(by_key.items()):
        if "coded" not in pair or "baseline" not in pair:
            continue
        coded, base = pair["coded"], pair["baseline"]
        gains.append(
            GainRow(
                parameter=parameter,
                value=value,
                mode=mode,
                sizes_source=source,
                throughput_gain=coded.mean_throughput / base.mean_throughput,
                traffic_gain=base.traffic / coded.traffic if coded.traffic > 0 else float("inf"),
            )
        )
    return gains


def write_csv(rows: Iterable[SweepRow], path: str | Path) -> Path:
    """Write the sweep table; floats use repr so reruns are byte-identical."""
    path = Path(path)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow(
                [
                    r.parameter,
                    repr(r.value),
                    r.scheme,
                    r.mode,
                    r.sizes_source,
                    r.trials,
                    repr(r.mean_throughput),
                    repr(r.stderr),
                    repr(r.mean_total_time),
                    repr(r.traffic),
                    r.seed0,
                    r.error,
                ]
            )
    logger.info("Sweep table written to %s", path)
    return path
