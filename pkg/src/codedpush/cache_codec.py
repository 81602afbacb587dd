"""Bit-exact coded-caching placement and delivery.

Placement: every user caches ``round(M*F/N)`` uniformly chosen bits of every
content. Delivery: for every nonempty user subset U the server sends the XOR
of the segments ``V[d_k, U \\ {k}]`` (bits of user k's request cached by
exactly the other members of U), each zero-padded to the longest. Singletons
carry the bits nobody caches.

Users are indexed 0..K-1 and a holder set is encoded as a bitmask with bit k
set for user k.

Usage:
    placement = make_placement(cfg, seed=7)
    requests = RequestVector((1, 0))
    plan = build_delivery_plan(placement, requests)
    bits = decode_user(plan, placement, requests, user=0)
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .models import SystemConfig

logger = logging.getLogger("codedpush.cache_codec")


class CodecError(ValueError):
    """Invalid input to the placement/delivery codec."""


class DegenerateQuotaError(CodecError):
    """M > 0 but round(M*F/N) == 0, so no bit would ever be cached."""


class DecodeError(CodecError):
    """A user could not recover a bit of its request. Signals a codec bug."""

    def __init__(self, message: str):
        super().__init__(message)
        logger.warning("decode failure: %s", message)


# ── Domain types ──


@dataclass(frozen=True, eq=False)
class Content:
    """A single content V_i: ``id`` plus exactly F bits (uint8 0/1)."""

    id: int
    bits: np.ndarray

    def __post_init__(self):
        if self.bits.ndim != 1:
            raise CodecError(f"content {self.id} bits must be 1-D, got shape {self.bits.shape}")

    def check_size(self, content_size: int) -> Content:
        if self.bits.size != content_size:
            raise CodecError(
                f"content {self.id} has {self.bits.size} bits, expected F={content_size}"
            )
        return self


@dataclass(frozen=True)
class RequestVector:
    """Per-user requested content index d_k (duplicates allowed)."""

    d: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(int(x) for x in self.d))

    def __len__(self) -> int:
        return len(self.d)

    def __getitem__(self, user: int) -> int:
        return self.d[user]

    def validate(self, num_users: int, num_contents: int) -> None:
        if len(self.d) != num_users:
            raise CodecError(f"request vector has {len(self.d)} entries, expected {num_users}")
        bad = [x for x in self.d if not 0 <= x < num_contents]
        if bad:
            raise CodecError(f"requested content(s) {bad} outside 0..{num_contents - 1}")


@dataclass(frozen=True, eq=False)
class PlacementState:
    """Placement-phase output.

    Attributes:
        mask: Boolean array of shape (K, N, F); ``mask[k, n, b]`` is True when
            user k caches bit b of content n.
        library: uint8 array of shape (N, F) with the content bits.
        quota: Bits cached per (user, content).
        seed: Seed the placement was drawn with.
    """

    mask: np.ndarray
    library: np.ndarray
    quota: int
    seed: int | None = None
    _segments: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.mask.ndim != 3:
            raise CodecError(f"placement mask must be (K, N, F), got {self.mask.shape}")
        if self.library.shape != self.mask.shape[1:]:
            raise CodecError(
                f"library shape {self.library.shape} does not match placement {self.mask.shape}"
            )
        self.mask.setflags(write=False)
        self.library.setflags(write=False)

    @property
    def num_users(self) -> int:
        return self.mask.shape[0]

    @property
    def num_contents(self) -> int:
        return self.mask.shape[1]

    @property
    def content_size(self) -> int:
        return self.mask.shape[2]

    def cached(self, user: int, content: int) -> np.ndarray:
        """Sorted bit indices of ``content`` held by ``user``."""
        return np.flatnonzero(self.mask[user, content])

    def holder_patterns(self, content: int) -> np.ndarray:
        """Per-bit holder bitmask of ``content``, shape (F,), dtype int64."""
        weights = np.left_shift(np.int64(1), np.arange(self.num_users, dtype=np.int64))
        return weights @ self.mask[:, content, :].astype(np.int64)

    def segments_of(self, content: int) -> dict[int, np.ndarray]:
        """Exact-pattern partition of ``content``: holder mask -> bit indices.

        Only patterns that occur are present. Computed once per content.
        """
        cached = self._segments.get(content)
        if cached is None:
            patterns = self.holder_patterns(content)
            order = np.argsort(patterns, kind="stable")
            keys, starts = np.unique(patterns[order], return_index=True)
            groups = np.split(order, starts[1:])
            cached = {int(k): g for k, g in zip(keys, groups)}
            self._segments[content] = cached
        return cached


@dataclass(frozen=True, eq=False)
class Transmission:
    """One coded transmission of the delivery plan.

    Attributes:
        receivers: Sorted receiver set U.
        payload: uint8 bit array; XOR of the member segments, zero-padded.
        segments: user k -> bit indices of V[d_k, U \\ {k}] carried for k.
    """

    receivers: tuple[int, ...]
    payload: np.ndarray
    segments: dict[int, np.ndarray]

    @property
    def realized_size(self) -> int:
        """S_k in bits."""
        return int(self.payload.size)

    @property
    def is_multicast(self) -> bool:
        return len(self.receivers) > 1


@dataclass(frozen=True, eq=False)
class DeliveryPlan:
    """Ordered transmissions: decreasing |U|, then lexicographic U."""

    transmissions: tuple[Transmission, ...]

    def __len__(self) -> int:
        return len(self.transmissions)

    def __iter__(self) -> Iterator[Transmission]:
        return iter(self.transmissions)

    @property
    def total_bits(self) -> int:
        return sum(t.realized_size for t in self.transmissions)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([t.realized_size for t in self.transmissions], dtype=np.int64)

    @property
    def receiver_sets(self) -> list[tuple[int, ...]]:
        return [t.receivers for t in self.transmissions]


# ── Helpers ──


def receiver_sets(num_users: int) -> list[tuple[int, ...]]:
    """All 2^K - 1 nonempty user subsets in delivery order.

    Decreasing size, lexicographic within a size (the order of
    ``itertools.combinations``).
    """
    users = range(num_users)
    return [
        subset
        for size in range(num_users, 0, -1)
        for subset in itertools.combinations(users, size)
    ]


def holder_mask(users: Iterable[int]) -> int:
    """Bitmask with bit k set for each user k."""
    mask = 0
    for k in users:
        mask |= 1 << int(k)
    return mask


def make_library(cfg: SystemConfig, seed: int) -> np.ndarray:
    """Synthetic content bits, shape (N, F), deterministic in ``seed``."""
    rng = np.random.default_rng([int(seed), 0x11B])
    return rng.integers(0, 2, size=(cfg.num_contents, cfg.content_size), dtype=np.uint8)


def contents(placement: PlacementState) -> list[Content]:
    """The library as ``Content`` records."""
    return [
        Content(id=n, bits=placement.library[n]).check_size(placement.content_size)
        for n in range(placement.num_contents)
    ]


# ── Operations ──


def make_placement(
    cfg: SystemConfig,
    seed: int,
    *,
    library: np.ndarray | None = None,
) -> PlacementState:
    """Random placement: each user caches round(M*F/N) bits of each content.

    Bits are drawn uniformly without replacement, independently per
    (user, content) pair, users outer and contents inner.

    Args:
        cfg: System configuration.
        seed: Placement seed.
        library: Optional (N, F) content bits; synthesized from ``seed`` if None.

    Raises:
        CodecError: If M >= N or the library shape is wrong.
        DegenerateQuotaError: If M > 0 but the quota rounds to 0.
    """
    n_contents, n_users, size = cfg.num_contents, cfg.num_users, cfg.content_size
    if cfg.cache_contents >= n_contents:
        raise CodecError(f"M={cfg.cache_contents} must be smaller than N={n_contents}")
    quota = cfg.quota
    if cfg.cache_contents > 0 and quota == 0:
        raise DegenerateQuotaError(
            f"M*F/N = {cfg.cache_contents * size / n_contents:.3g} rounds to 0 bits"
        )
    if library is None:
        library = make_library(cfg, seed)
    library = np.asarray(library, dtype=np.uint8)
    if library.shape != (n_contents, size):
        raise CodecError(f"library shape {library.shape}, expected {(n_contents, size)}")

    rng = np.random.default_rng(int(seed))
    mask = np.zeros((n_users, n_contents, size), dtype=bool)
    if quota > 0:
        for k in range(n_users):
            for n in range(n_contents):
                mask[k, n, rng.choice(size, size=quota, replace=False)] = True

    logger.debug("placement seed=%s K=%d N=%d F=%d quota=%d", seed, n_users, n_contents, size, quota)
    return PlacementState(mask=mask, library=library.copy(), quota=quota, seed=int(seed))


def segment(placement: PlacementState, content: int, holders: Sequence[int]) -> np.ndarray:
    """Bits of ``content`` cached by every user in ``holders`` and nobody else."""
    bad = [k for k in holders if not 0 <= k < placement.num_users]
    if bad:
        raise CodecError(f"holder(s) {bad} outside 0..{placement.num_users - 1}")
    found = placement.segments_of(content).get(holder_mask(holders))
    return found if found is not None else np.empty(0, dtype=np.int64)


def build_delivery_plan(placement: PlacementState, requests: RequestVector) -> DeliveryPlan:
    """Coded delivery: one transmission per nonempty receiver set.

    Multicast payloads are the XOR of the member segments, zero-padded to
    the longest one. Singleton {k} carries segment(d_k, {}).
    """
    requests.validate(placement.num_users, placement.num_contents)
    library = placement.library
    transmissions = []
    for receivers in receiver_sets(placement.num_users):
        segments = {
            k: segment(placement, requests[k], [j for j in receivers if j != k])
            for k in receivers
        }
        length = max(len(s) for s in segments.values())
        payload = np.zeros(length, dtype=np.uint8)
        for k, idx in segments.items():
            payload[: len(idx)] ^= library[requests[k], idx]
        transmissions.append(Transmission(receivers=receivers, payload=payload, segments=segments))

    plan = DeliveryPlan(transmissions=tuple(transmissions))
    logger.debug("plan: %d transmissions, %d bits", len(plan), plan.total_bits)
    return plan


def decode_user(
    plan: DeliveryPlan,
    placement: PlacementState,
    requests: RequestVector,
    user: int,
) -> np.ndarray:
    """Reconstruct the F bits of content ``d_user`` from cache and payloads.

    Only ``user``'s own cache is read: every other member's segment of a
    multicast is cached by ``user`` and is XORed out of the payload.

    Raises:
        CodecError: If ``user`` is not in 0..K-1 or ``requests`` does not
            fit the placement.
        DecodeError: If some bit cannot be recovered.
    """
    requests.validate(placement.num_users, placement.num_contents)
    if not 0 <= user < placement.num_users:
        raise CodecError(f"user {user} outside 0..{placement.num_users - 1}")
    wanted = requests[user]
    own = placement.mask[user]
    library = placement.library
    out = np.zeros(placement.content_size, dtype=np.uint8)
    recovered = own[wanted].copy()
    out[recovered] = library[wanted, recovered]

    for tx in plan:
        if user not in tx.receivers:
            continue
        mine = tx.segments[user]
        if mine.size == 0:
            continue
        buf = tx.payload.copy()
        for other, idx in tx.segments.items():
            if other == user or idx.size == 0:
                continue
            if not own[requests[other], idx].all():
                raise DecodeError(
                    f"user {user} lacks cached bits of content {requests[other]} "
                    f"needed to cancel user {other} in {tx.receivers}"
                )
            buf[: idx.size] ^= library[requests[other], idx]
        out[mine] = buf[: mine.size]
        recovered[mine] = True

    if not recovered.all():
        missing = int((~recovered).sum())
        raise DecodeError(f"user {user}: {missing} bits of content {wanted} unrecoverable")
    return out


def baseline_unicast_sizes(placement: PlacementState, requests: RequestVector) -> np.ndarray:
    """Uncoded delivery: bits of d_k user k lacks, per user."""
    requests.validate(placement.num_users, placement.num_contents)
    return np.array(
        [
            placement.content_size - int(placement.mask[k, requests[k]].sum())
            for k in range(placement.num_users)
        ],
        dtype=np.int64,
    )


# ── Text dumps ──


def _format_indices(idx: np.ndarray) -> str:
    return " ".join(str(int(i)) for i in idx) if idx.size else "-"


def dump_placement(placement: PlacementState) -> str:
    """One line per cached segment: ``user content holder-mask indices``.

    Holder masks are printed as K-character bit strings, user 0 first.
    """
    n_users = placement.num_users
    lines = []
    for k in range(n_users):
        for n in range(placement.num_contents):
            for pattern, idx in sorted(placement.segments_of(n).items()):
                if pattern >> k & 1:
                    lines.append(f"{k} {n} {_mask_str(pattern, n_users)} {_format_indices(idx)}")
    return "\n".join(lines) + "\n"


def dump_plan(plan: DeliveryPlan, requests: RequestVector) -> str:
    """One line per carried segment, in plan order.

    Line format: ``user content holder-mask indices`` where holder-mask is
    U \\ {user}; transmissions are introduced by a ``# U=... S=...`` line.
    """
    n_users = len(requests)
    lines = []
    for tx in plan:
        lines.append(f"# U={_mask_str(holder_mask(tx.receivers), n_users)} S={tx.realized_size}")
        for k, idx in tx.segments.items():
            holders = holder_mask(j for j in tx.receivers if j != k)
            lines.append(f"{k} {requests[k]} {_mask_str(holders, n_users)} {_format_indices(idx)}")
    return "\n".join(lines) + "\n"


def _mask_str(pattern: int, n_users: int) -> str:
    return "".join("1" if pattern >> k & 1 else "0" for k in range(n_users))
