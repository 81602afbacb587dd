"""Structural checks of a placement and its delivery plan.

Walks the plan and reports everything that would make a user fail to decode
or make the traffic accounting wrong: per-user quota mismatches, segments
carried for the wrong holder set, gaps or overlaps in a user's coverage of
its request, payloads of the wrong length, a wrong transmission count, and
finally an actual decode of every user.

Usage:
    from codedpush.validation import validate_plan
    warnings = validate_plan(plan, placement, requests)
    for w in warnings:
        print(w.severity, w.code, w.message)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional

import numpy as np

from .cache_codec import (
    DecodeError,
    DeliveryPlan,
    PlacementState,
    RequestVector,
    decode_user,
    holder_mask,
    receiver_sets,
)

logger = logging.getLogger("codedpush.validation")

Severity = Literal["error", "warning", "info"]


@dataclass(frozen=True)
class ValidationWarning:
    severity: Severity
    code: str  # short stable id (e.g. "partition_gap", "decode_failed")
    message: str
    user: Optional[int] = None
    receivers: Optional[tuple[int, ...]] = None


def _emit(out: List[ValidationWarning], warning: ValidationWarning) -> None:
    """Append to the result list and mirror to the package logger."""
    out.append(warning)
    log_fn: Callable[..., None]
    if warning.severity == "error":
        log_fn = logger.error
    elif warning.severity == "warning":
        log_fn = logger.warning
    else:
        log_fn = logger.info
    log_fn(
        "[%s] %s%s%s",
        warning.code,
        warning.message,
        f" (user={warning.user})" if warning.user is not None else "",
        f" (U={warning.receivers})" if warning.receivers is not None else "",
    )


def _safe_check(out: List[ValidationWarning], name: str, fn: Callable[[], None]) -> None:
    """Run ``fn`` so one check's failure can't block the others."""
    try:
        fn()
    except Exception as exc:  # noqa: BLE001 - validation must never raise
        _emit(
            out,
            ValidationWarning(
                severity="error",
                code="validation_internal_error",
                message=f"check '{name}' raised {type(exc).__name__}: {exc}",
            ),
        )


def validate_plan(
    plan: DeliveryPlan,
    placement: PlacementState,
    requests: RequestVector,
    *,
    decode: bool = True,
) -> List[ValidationWarning]:
    """Run all checks; emit each via ``logger.<severity>`` and return the list.

    Never raises. An empty list means the plan is sound.
    """
    out: List[ValidationWarning] = []
    n_users = placement.num_users
    size = placement.content_size

    # ---- placement quota ------------------------------------------------
    def _check_quota() -> None:
        held = placement.mask.sum(axis=2)
        wrong = np.argwhere(held != placement.quota)
        for k, n in wrong:
            _emit(
                out,
                ValidationWarning(
                    severity="error",
                    code="quota_mismatch",
                    message=f"content {n}: {held[k, n]} bits cached, expected {placement.quota}",
                    user=int(k),
                ),
            )

    _safe_check(out, "quota_mismatch", _check_quota)

    # ---- transmission count and order -----------------------------------
    def _check_count() -> None:
        expected = 2**n_users - 1
        if len(plan) != expected:
            _emit(
                out,
                ValidationWarning(
                    severity="error",
                    code="transmission_count",
                    message=f"plan has {len(plan)} transmissions, expected 2^K - 1 = {expected}",
                ),
            )
        elif plan.receiver_sets != receiver_sets(n_users):
            _emit(
                out,
                ValidationWarning(
                    severity="warning",
                    code="transmission_order",
                    message="receiver sets are not in decreasing-size lexicographic order",
                ),
            )

    _safe_check(out, "transmission_count", _check_count)

    # ---- per-transmission segment holders and payload length ------------
    for tx in plan:

        def _check_transmission(_tx=tx) -> None:
            longest = max((idx.size for idx in _tx.segments.values()), default=0)
            if _tx.realized_size != longest:
                _emit(
                    out,
                    ValidationWarning(
                        severity="error",
                        code="payload_length",
                        message=f"payload is {_tx.realized_size} bits, longest segment {longest}",
                        receivers=_tx.receivers,
                    ),
                )
            for k, idx in _tx.segments.items():
                if idx.size == 0:
                    continue
                expected = holder_mask(j for j in _tx.receivers if j != k)
                patterns = placement.holder_patterns(requests[k])[idx]
                if np.any(patterns != expected):
                    _emit(
                        out,
                        ValidationWarning(
                            severity="error",
                            code="segment_holders",
                            message=(
                                f"{int(np.sum(patterns != expected))} bit(s) carried for this user "
                                "are not cached by exactly the other receivers"
                            ),
                            user=k,
                            receivers=_tx.receivers,
                        ),
                    )

        _safe_check(out, "segment_holders", _check_transmission)

    # ---- per-user coverage of the request -------------------------------
    def _check_partition() -> None:
        for k in range(n_users):
            cover = placement.mask[k, requests[k]].astype(np.int64)
            for tx in plan:
                if k in tx.segments:
                    np.add.at(cover, tx.segments[k], 1)
            gaps = int(np.sum(cover == 0))
            overlaps = int(np.sum(cover > 1))
            if gaps:
                _emit(
                    out,
                    ValidationWarning(
                        severity="error",
                        code="partition_gap",
                        message=f"{gaps} of {size} requested bits neither cached nor delivered",
                        user=k,
                    ),
                )
            if overlaps:
                _emit(
                    out,
                    ValidationWarning(
                        severity="warning",
                        code="partition_overlap",
                        message=f"{overlaps} requested bits cached or delivered more than once",
                        user=k,
                    ),
                )

    _safe_check(out, "partition", _check_partition)

    # ---- empty multicasts -----------------------------------------------
    empty = sum(1 for tx in plan if tx.realized_size == 0)
    if empty:
        _emit(
            out,
            ValidationWarning(
                severity="info",
                code="empty_transmissions",
                message=f"{empty} of {len(plan)} transmissions carry no bits",
            ),
        )

    # ---- decode ---------------------------------------------------------
    if decode:
        for k in range(n_users):

            def _check_decode(_k=k) -> None:
                try:
                    bits = decode_user(plan, placement, requests, _k)
                except DecodeError as e:
                    _emit(
                        out,
                        ValidationWarning(
                            severity="error", code="decode_failed", message=str(e), user=_k
                        ),
                    )
                    return
                wrong = int(np.sum(bits != placement.library[requests[_k]]))
                if wrong:
                    _emit(
                        out,
                        ValidationWarning(
                            severity="error",
                            code="decode_mismatch",
                            message=f"{wrong} decoded bit(s) differ from content {requests[_k]}",
                            user=_k,
                        ),
                    )

            _safe_check(out, "decode", _check_decode)

    return out


def is_sound(warnings: List[ValidationWarning]) -> bool:
    """True when no check reported an error."""
    return not any(w.severity == "error" for w in warnings)


__all__ = ["ValidationWarning", "validate_plan", "is_sound", "Severity"]
