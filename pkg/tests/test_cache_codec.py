"""
Unit tests for :mod:`codedpush.cache_codec`.

Placement quotas, exact-pattern segmentation, delivery-plan structure,
bit-exact decoding and the traffic the plan puts on the channel.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict

import numpy as np
import pytest
from scipy import stats

from codedpush.analytic_model import coded_total_traffic
from codedpush.cache_codec import (
    CodecError,
    Content,
    DecodeError,
    DegenerateQuotaError,
    PlacementState,
    RequestVector,
    baseline_unicast_sizes,
    build_delivery_plan,
    contents,
    decode_user,
    dump_placement,
    dump_plan,
    holder_mask,
    make_placement,
    receiver_sets,
    segment,
)
from codedpush.models import SystemConfig


def _cfg(k, n, m, f):
    return SystemConfig(num_contents=n, num_users=k, content_size=f, cache_contents=m)


def _requests(k, n, seed):
    rng = np.random.default_rng(seed + 1000)
    return RequestVector(tuple(int(x) for x in rng.integers(0, n, size=k)))


def _assert_all_decode(cfg, seed):
    placement = make_placement(cfg, seed)
    requests = _requests(cfg.num_users, cfg.num_contents, seed)
    plan = build_delivery_plan(placement, requests)
    for k in range(cfg.num_users):
        bits = decode_user(plan, placement, requests, k)
        np.testing.assert_array_equal(bits, placement.library[requests[k]])


# ---------------------------------------------------------------------------
# Placement
# ---------------------------------------------------------------------------


def test_placement_caches_quota_bits_of_every_content(example1_cfg):
    placement = make_placement(example1_cfg, seed=3)
    assert placement.quota == 5000
    np.testing.assert_array_equal(placement.mask.sum(axis=2), np.full((2, 2), 5000))


def test_placement_is_deterministic_in_seed(example1_cfg):
    a = make_placement(example1_cfg, seed=11)
    b = make_placement(example1_cfg, seed=11)
    c = make_placement(example1_cfg, seed=12)
    np.testing.assert_array_equal(a.mask, b.mask)
    np.testing.assert_array_equal(a.library, b.library)
    assert not np.array_equal(a.mask, c.mask)


def test_placement_arrays_are_read_only(example1_cfg):
    placement = make_placement(example1_cfg, seed=0)
    with pytest.raises(ValueError):
        placement.mask[0, 0, 0] = not placement.mask[0, 0, 0]


def test_quota_rounds_half_up():
    # M*F/N = 2.5 -> 3
    assert _cfg(2, 2, 1.0, 5).quota == 3
    # M*F/N = 0.4 -> 0
    assert _cfg(2, 5, 2.0, 1).quota == 0


def test_degenerate_quota_rejected():
    cfg = _cfg(2, 4, 0.5, 1)  # 0.125 bits rounds to zero
    with pytest.raises(DegenerateQuotaError):
        make_placement(cfg, seed=0)


def test_zero_cache_is_valid():
    placement = make_placement(_cfg(3, 2, 0.0, 40), seed=0)
    assert placement.quota == 0
    assert not placement.mask.any()


def test_library_shape_checked(example1_cfg):
    with pytest.raises(CodecError, match="library shape"):
        make_placement(example1_cfg, seed=0, library=np.zeros((2, 5), dtype=np.uint8))


def _holder_pattern_counts(placement, content):
    """Bits of ``content`` per holder pattern, indexed by holder bitmask."""
    weights = 1 << np.arange(placement.num_users)
    patterns = (placement.mask[:, content, :].T * weights).sum(axis=1)
    return np.bincount(patterns, minlength=1 << placement.num_users)


def test_single_content_half_cache_quota():
    placement = make_placement(_cfg(3, 1, 0.5, 100), seed=3)
    assert placement.quota == 50
    np.testing.assert_array_equal(placement.mask.sum(axis=2), np.full((3, 1), 50))
    counts = _holder_pattern_counts(placement, 0)
    assert counts.sum() == 100
    # Every user holds 50 bits, so each user's patterns sum to 50.
    for k in range(3):
        assert counts[[m for m in range(8) if m >> k & 1]].sum() == 50


def test_holder_patterns_follow_independent_halves():
    placement = make_placement(_cfg(3, 1, 0.5, 10_000), seed=3)
    counts = _holder_pattern_counts(placement, 0)
    expected = np.full(8, 10_000 * 0.5**3)
    result = stats.chisquare(counts, expected)
    assert result.pvalue > 1e-3


def test_contents_are_full_width(example1_cfg):
    placement = make_placement(example1_cfg, seed=0)
    records = contents(placement)
    assert [c.id for c in records] == [0, 1]
    assert all(c.bits.size == example1_cfg.content_size for c in records)


def test_content_width_checked():
    content = Content(id=4, bits=np.zeros(99, dtype=np.uint8))
    assert content.check_size(99) is content
    with pytest.raises(CodecError, match="expected F=100"):
        content.check_size(100)


# ---------------------------------------------------------------------------
# Segmentation
# ---------------------------------------------------------------------------


def test_segments_partition_each_content():
    cfg = _cfg(4, 3, 1.5, 300)
    placement = make_placement(cfg, seed=5)
    for n in range(cfg.num_contents):
        parts = [
            segment(placement, n, holders)
            for size in range(cfg.num_users + 1)
            for holders in itertools.combinations(range(cfg.num_users), size)
        ]
        joined = np.sort(np.concatenate(parts))
        np.testing.assert_array_equal(joined, np.arange(cfg.content_size))


def test_segment_bits_are_held_by_exactly_the_holders():
    cfg = _cfg(3, 2, 1.0, 200)
    placement = make_placement(cfg, seed=9)
    idx = segment(placement, 1, (0, 2))
    assert idx.size > 0
    held = placement.mask[:, 1, idx]
    assert held[0].all() and held[2].all() and not held[1].any()


def test_segment_rejects_unknown_user(example1_cfg):
    placement = make_placement(example1_cfg, seed=0)
    with pytest.raises(CodecError, match="outside"):
        segment(placement, 0, (5,))


def test_holder_mask_sets_one_bit_per_user():
    assert holder_mask(()) == 0
    assert holder_mask((0, 2)) == 0b101
    assert holder_mask(k for k in (1,)) == 0b10


# ---------------------------------------------------------------------------
# Delivery plan
# ---------------------------------------------------------------------------


def test_receiver_sets_order():
    assert receiver_sets(3) == [
        (0, 1, 2),
        (0, 1),
        (0, 2),
        (1, 2),
        (0,),
        (1,),
        (2,),
    ]


def test_plan_has_one_transmission_per_receiver_set():
    cfg = _cfg(4, 2, 1.0, 128)
    placement = make_placement(cfg, seed=1)
    plan = build_delivery_plan(placement, _requests(4, 2, 1))
    assert len(plan) == 2**4 - 1
    assert plan.receiver_sets == receiver_sets(4)


def test_payload_length_is_longest_segment(example1_cfg):
    placement = make_placement(example1_cfg, seed=4)
    plan = build_delivery_plan(placement, RequestVector((0, 1)))
    for tx in plan:
        assert tx.realized_size == max(idx.size for idx in tx.segments.values())


def test_example1_plan_structure(example1_cfg):
    placement = make_placement(example1_cfg, seed=2)
    requests = RequestVector((0, 1))
    plan = build_delivery_plan(placement, requests)
    multicast, single0, single1 = plan.transmissions
    assert multicast.receivers == (0, 1) and multicast.is_multicast
    # Each singleton carries what nobody caches of the user's request.
    nobody0 = ~placement.mask[0, 0] & ~placement.mask[1, 0]
    assert single0.realized_size == int(nobody0.sum())
    assert single1.receivers == (1,)


def test_zero_cache_plan_is_plain_unicast():
    cfg = _cfg(3, 2, 0.0, 40)
    placement = make_placement(cfg, seed=0)
    requests = RequestVector((0, 1, 1))
    plan = build_delivery_plan(placement, requests)
    assert plan.total_bits == 3 * 40
    assert all(tx.realized_size == 0 for tx in plan if tx.is_multicast)
    for k in range(3):
        np.testing.assert_array_equal(
            decode_user(plan, placement, requests, k), placement.library[requests[k]]
        )


def _bits_server_must_send(placement, requests):
    """Count per bit: user k's missing bit b goes to its holders plus k.

    Each receiver set's XOR is as long as the largest share of any member.
    """
    shares = defaultdict(Counter)
    for k in range(placement.num_users):
        wanted = requests[k]
        for b in np.flatnonzero(~placement.mask[k, wanted]):
            holders = np.flatnonzero(placement.mask[:, wanted, b]).tolist()
            shares[frozenset(holders) | {k}][k] += 1
    return sum(max(share.values()) for share in shares.values())


def test_three_user_plan_size_matches_decode_count():
    cfg = _cfg(3, 3, 1.0, 300)
    placement = make_placement(cfg, seed=11)
    requests = RequestVector((0, 1, 2))
    plan = build_delivery_plan(placement, requests)
    for k in range(3):
        np.testing.assert_array_equal(
            decode_user(plan, placement, requests, k), placement.library[requests[k]]
        )
    assert plan.total_bits == _bits_server_must_send(placement, requests)
    assert plan.total_bits == sum(tx.realized_size for tx in plan)


def test_request_vector_validated(example1_cfg):
    placement = make_placement(example1_cfg, seed=0)
    with pytest.raises(CodecError, match="entries"):
        build_delivery_plan(placement, RequestVector((0,)))
    with pytest.raises(CodecError, match="outside"):
        build_delivery_plan(placement, RequestVector((0, 2)))


# ---------------------------------------------------------------------------
# Decoding
# ---------------------------------------------------------------------------


def test_example1_every_user_decodes(example1_cfg):
    for requests in [(0, 1), (1, 0), (0, 0), (1, 1)]:
        placement = make_placement(example1_cfg, seed=7)
        req = RequestVector(requests)
        plan = build_delivery_plan(placement, req)
        for k in range(2):
            np.testing.assert_array_equal(
                decode_user(plan, placement, req, k), placement.library[req[k]]
            )


@pytest.mark.parametrize("k", [2, 3, 4])
@pytest.mark.parametrize("n", [2, 3])
def test_decode_small_grid(k, n):
    for m in (0.5, 1.0, n - 0.5):
        for seed in range(3):
            _assert_all_decode(_cfg(k, n, m, 64), seed)


@pytest.mark.slow
@pytest.mark.parametrize("k", [2, 3, 4, 5, 6])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_decode_acceptance_grid(k, n):
    for m in (0.5, 1.0, n - 0.5):
        for seed in range(50):
            _assert_all_decode(_cfg(k, n, m, 512), seed)


def test_decode_reads_only_own_cache(example1_cfg):
    placement = make_placement(example1_cfg, seed=5)
    requests = RequestVector((0, 1))
    plan = build_delivery_plan(placement, requests)

    # User 0 forgets what it cached of user 1's request: the multicast can
    # no longer be cancelled.
    mask = placement.mask.copy()
    mask[0, 1, :] = False
    crippled = PlacementState(mask=mask, library=placement.library.copy(), quota=placement.quota)
    with pytest.raises(DecodeError):
        decode_user(plan, crippled, requests, 0)
    # User 1 is unaffected.
    np.testing.assert_array_equal(
        decode_user(plan, crippled, requests, 1), placement.library[1]
    )


@pytest.mark.parametrize("user", [-1, 2])
def test_decode_user_outside_range(example1_cfg, caplog, user):
    placement = make_placement(example1_cfg, seed=0)
    requests = RequestVector((0, 1))
    plan = build_delivery_plan(placement, requests)
    with caplog.at_level("WARNING", logger="codedpush.cache_codec"):
        with pytest.raises(CodecError, match="outside 0..1") as info:
            decode_user(plan, placement, requests, user)
    assert not isinstance(info.value, DecodeError)
    assert "decode failure" not in caplog.text


def test_decode_error_is_logged(example1_cfg, caplog):
    with caplog.at_level("WARNING", logger="codedpush.cache_codec"):
        DecodeError("synthetic")
    assert "synthetic" in caplog.text


# ---------------------------------------------------------------------------
# Traffic
# ---------------------------------------------------------------------------


def _segment_traffic(plan):
    """Sum over transmissions of the mean member-segment length."""
    return sum(np.mean([idx.size for idx in tx.segments.values()]) for tx in plan)


def test_example1_mean_segment_traffic_matches_closed_form(example1_cfg):
    expected = coded_total_traffic(example1_cfg)
    assert expected == pytest.approx(0.75 * example1_cfg.content_size, rel=1e-12)

    samples = []
    for seed in range(200):
        placement = make_placement(example1_cfg, seed)
        plan = build_delivery_plan(placement, _requests(2, 2, seed))
        samples.append(_segment_traffic(plan))
    samples = np.asarray(samples)
    stderr = samples.std(ddof=1) / np.sqrt(samples.size)
    assert abs(samples.mean() - expected) <= 3 * stderr


def _example1_totals(cfg, requests, seeds=range(200)):
    return np.array(
        [build_delivery_plan(make_placement(cfg, seed), requests).total_bits for seed in seeds],
        dtype=float,
    )


def test_example1_realized_traffic_within_three_standard_errors(example1_cfg):
    # Identical requests: both halves of the XOR have the same length, so
    # the realized total is 5000 + |A_12| with mean 0.75 F exactly.
    expected = coded_total_traffic(example1_cfg)
    totals = _example1_totals(example1_cfg, RequestVector((0, 0)))
    stderr = totals.std(ddof=1) / np.sqrt(totals.size)
    assert abs(totals.mean() - expected) <= 3 * stderr


def test_example1_distinct_requests_pad_to_longer_segment(example1_cfg):
    # Total is 5000 + max(|A_12|, |B_12|), each overlap hypergeometric.
    f = example1_cfg.content_size
    quota = f // 2
    overlap = stats.hypergeom(M=f, n=quota, N=quota)
    below = overlap.cdf(np.arange(quota))
    expected = quota + float(np.sum(1.0 - below**2))
    assert expected - coded_total_traffic(example1_cfg) == pytest.approx(14.1, abs=0.2)

    totals = _example1_totals(example1_cfg, RequestVector((1, 0)))
    stderr = totals.std(ddof=1) / np.sqrt(totals.size)
    assert abs(totals.mean() - expected) <= 3 * stderr
    assert totals.mean() <= coded_total_traffic(example1_cfg) * 1.01


def test_baseline_unicast_sizes_are_uncached_share(example1_cfg):
    placement = make_placement(example1_cfg, seed=0)
    sizes = baseline_unicast_sizes(placement, RequestVector((1, 0)))
    np.testing.assert_array_equal(sizes, [5000, 5000])


# ---------------------------------------------------------------------------
# Text dumps
# ---------------------------------------------------------------------------


def test_dump_placement_lines():
    cfg = _cfg(2, 2, 1.0, 8)
    placement = make_placement(cfg, seed=0)
    lines = dump_placement(placement).splitlines()
    assert lines
    user, content, mask, *indices = lines[0].split()
    assert user == "0" and content == "0"
    assert len(mask) == 2 and mask[0] == "1"
    cached = {int(i) for line in lines for i in line.split()[3:] if line.startswith("0 0 ")}
    assert cached == set(placement.cached(0, 0).tolist())


def test_dump_plan_headers():
    cfg = _cfg(2, 2, 1.0, 8)
    placement = make_placement(cfg, seed=0)
    requests = RequestVector((0, 1))
    plan = build_delivery_plan(placement, requests)
    text = dump_plan(plan, requests)
    headers = [line for line in text.splitlines() if line.startswith("#")]
    assert headers[0].startswith("# U=11 S=")
    assert [h.split()[1] for h in headers] == ["U=11", "U=10", "U=01"]
