"""``codedpush verify CONFIG`` - one-shot codec check at a given seed.

Outputs:
  - the request vector and per-user cache quota
  - one line per user: decode OK / FAILED
  - transmitted bits of the coded plan next to the closed-form expectation
    and the uncoded baseline
  - any validation findings (see :mod:`codedpush.validation`)
"""

from __future__ import annotations

import sys
from pathlib import Path


def verify_main(cfg, seed: int | None = None, dump_dir: str | Path | None = None) -> int:
    """Build the plan for ``cfg`` at ``seed`` and check every user decodes.

    Returns process exit code: 0 when every check passes, 1 otherwise.
    """
    from ..analytic_model import baseline_total_traffic, coded_total_traffic
    from ..cache_codec import (
        baseline_unicast_sizes,
        build_delivery_plan,
        dump_placement,
        dump_plan,
        make_placement,
    )
    from ..harness import draw_requests, trial_seeds
    from ..validation import is_sound, validate_plan

    system = cfg.to_system()
    seed = cfg.seed if seed is None else seed
    _, req_seed, place_seed = trial_seeds(seed)
    requests = draw_requests(cfg.requests, system.num_users, system.num_contents, req_seed)
    placement = make_placement(system, place_seed)
    plan = build_delivery_plan(placement, requests)

    print(f"K={system.num_users} N={system.num_contents} F={system.content_size} "
          f"M={system.cache_contents:g} seed={seed}")
    print(f"Requests: {list(requests.d)}  quota: {placement.quota} bits/content")

    warnings = validate_plan(plan, placement, requests)
    failed_users = {
        w.user for w in warnings if w.code in ("decode_failed", "decode_mismatch", "partition_gap")
    }
    print("\nDecode:")
    for k in range(system.num_users):
        print(f"  user {k}: {'FAILED' if k in failed_users else 'decode OK'}")

    expected = coded_total_traffic(system, allow_limit=True)
    realized = plan.total_bits
    baseline = int(baseline_unicast_sizes(placement, requests).sum())
    print(f"\nTransmitted bits: {realized} in {len(plan)} transmissions")
    print(f"  expected (coded):    {expected:.6g} ({expected / system.content_size:.6g} F)")
    print(f"  baseline realized:   {baseline}")
    print(f"  baseline expected:   {baseline_total_traffic(system):.6g}")

    findings = [w for w in warnings if w.severity != "info"]
    if findings:
        print("\nFindings:")
        for w in findings:
            where = f" user={w.user}" if w.user is not None else ""
            print(f"  [{w.severity}] {w.code}{where}: {w.message}")

    if dump_dir is not None:
        out = Path(dump_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "placement.txt").write_text(dump_placement(placement))
        (out / "plan.txt").write_text(dump_plan(plan, requests))
        print(f"\nDumps written to {out}")

    if not is_sound(warnings):
        print("\nverify: FAILED", file=sys.stderr)
        return 1
    return 0
