"""
Tests for :mod:`codedpush.validation`.

Sound plans must come back clean; each kind of corruption must be reported
under its own code, and ``validate_plan`` must never raise.
"""

from __future__ import annotations

import numpy as np
import pytest

from codedpush.cache_codec import (
    DeliveryPlan,
    PlacementState,
    RequestVector,
    Transmission,
    build_delivery_plan,
    make_placement,
)
from codedpush.models import SystemConfig
from codedpush.validation import is_sound, validate_plan


@pytest.fixture
def setup():
    cfg = SystemConfig(num_contents=3, num_users=3, content_size=600, cache_contents=1.0)
    placement = make_placement(cfg, seed=11)
    requests = RequestVector((2, 0, 2))
    return placement, requests, build_delivery_plan(placement, requests)


def _codes(warnings):
    return {w.code for w in warnings}


def _replace(plan, index, tx):
    txs = list(plan.transmissions)
    txs[index] = tx
    return DeliveryPlan(transmissions=tuple(txs))


def _index_of(plan, receivers):
    return plan.receiver_sets.index(receivers)


def test_sound_plan_is_clean(setup):
    placement, requests, plan = setup
    warnings = validate_plan(plan, placement, requests)
    assert [w for w in warnings if w.severity != "info"] == []
    assert is_sound(warnings)


def test_zero_cache_reports_empty_multicasts():
    cfg = SystemConfig(num_contents=2, num_users=2, content_size=64, cache_contents=0.0)
    placement = make_placement(cfg, seed=0)
    requests = RequestVector((0, 1))
    warnings = validate_plan(build_delivery_plan(placement, requests), placement, requests)
    assert _codes(warnings) == {"empty_transmissions"}
    assert is_sound(warnings)


def test_missing_transmission(setup):
    placement, requests, plan = setup
    truncated = DeliveryPlan(transmissions=plan.transmissions[:-1])
    warnings = validate_plan(truncated, placement, requests)
    codes = _codes(warnings)
    assert {"transmission_count", "partition_gap", "decode_failed"} <= codes
    gap = next(w for w in warnings if w.code == "partition_gap")
    assert gap.user == 2
    assert not is_sound(warnings)


def test_reordered_plan_is_only_a_warning(setup):
    placement, requests, plan = setup
    reordered = DeliveryPlan(transmissions=tuple(reversed(plan.transmissions)))
    warnings = validate_plan(reordered, placement, requests)
    assert "transmission_order" in _codes(warnings)
    assert is_sound(warnings)


def test_flipped_payload_bit(setup):
    placement, requests, plan = setup
    i = _index_of(plan, (0,))
    tx = plan.transmissions[i]
    payload = tx.payload.copy()
    payload[0] ^= 1
    warnings = validate_plan(
        _replace(plan, i, Transmission(tx.receivers, payload, tx.segments)), placement, requests
    )
    mismatch = [w for w in warnings if w.code == "decode_mismatch"]
    assert [w.user for w in mismatch] == [0]


def test_short_payload(setup):
    placement, requests, plan = setup
    i = _index_of(plan, (0, 1))
    tx = plan.transmissions[i]
    warnings = validate_plan(
        _replace(plan, i, Transmission(tx.receivers, tx.payload[:-1], tx.segments)),
        placement,
        requests,
    )
    assert "payload_length" in _codes(warnings)


def test_segment_for_wrong_holders(setup):
    placement, requests, plan = setup
    pair = _index_of(plan, (0, 1))
    single = _index_of(plan, (0,))
    tx = plan.transmissions[pair]
    # User 0's uncached bits are not held by user 1.
    segments = dict(tx.segments)
    segments[0] = plan.transmissions[single].segments[0]
    length = max(idx.size for idx in segments.values())
    payload = np.zeros(length, dtype=np.uint8)
    warnings = validate_plan(
        _replace(plan, pair, Transmission(tx.receivers, payload, segments)),
        placement,
        requests,
        decode=False,
    )
    holders = [w for w in warnings if w.code == "segment_holders"]
    assert holders and holders[0].user == 0 and holders[0].receivers == (0, 1)
    assert "partition_overlap" in _codes(warnings)


def test_quota_mismatch(setup):
    placement, requests, plan = setup
    mask = placement.mask.copy()
    idx = np.flatnonzero(~mask[1, 0])[0]
    mask[1, 0, idx] = True
    tampered = PlacementState(mask=mask, library=placement.library.copy(), quota=placement.quota)
    warnings = validate_plan(plan, tampered, requests, decode=False)
    quota = [w for w in warnings if w.code == "quota_mismatch"]
    assert len(quota) == 1 and quota[0].user == 1


def test_internal_errors_are_reported_not_raised(setup):
    placement, requests, plan = setup
    i = _index_of(plan, (0, 1, 2))
    tx = plan.transmissions[i]
    broken = Transmission(tx.receivers, tx.payload, {0: tx.segments[0]})
    warnings = validate_plan(_replace(plan, i, broken), placement, requests)
    assert "validation_internal_error" in _codes(warnings)
    assert not is_sound(warnings)


def test_findings_are_logged(setup, caplog):
    placement, requests, plan = setup
    truncated = DeliveryPlan(transmissions=plan.transmissions[:-1])
    with caplog.at_level("INFO", logger="codedpush.validation"):
        validate_plan(truncated, placement, requests)
    assert "[transmission_count]" in caplog.text
