"""codedpush - Coded caching delivery over a shared wireless channel.

Random placement and bit-exact XOR delivery, closed-form traffic, a
Ricean cell model, and TD/FD radio resource allocation that turns a
delivery plan into a completion time and a throughput.
"""

from codedpush.models import FadingParams as FadingParams
from codedpush.models import SystemConfig as SystemConfig

# Codec
from codedpush.cache_codec import CodecError as CodecError
from codedpush.cache_codec import DecodeError as DecodeError
from codedpush.cache_codec import DegenerateQuotaError as DegenerateQuotaError
from codedpush.cache_codec import DeliveryPlan as DeliveryPlan
from codedpush.cache_codec import PlacementState as PlacementState
from codedpush.cache_codec import RequestVector as RequestVector
from codedpush.cache_codec import build_delivery_plan as build_delivery_plan
from codedpush.cache_codec import decode_user as decode_user
from codedpush.cache_codec import make_placement as make_placement

# Closed-form traffic
from codedpush.analytic_model import DomainError as DomainError
from codedpush.analytic_model import coded_total_traffic as coded_total_traffic
from codedpush.analytic_model import expected_payload_size as expected_payload_size
from codedpush.analytic_model import traffic_summary as traffic_summary

# Channel
from codedpush.channel import ChannelError as ChannelError
from codedpush.channel import ChannelScenario as ChannelScenario
from codedpush.channel import sample_scenario as sample_scenario
from codedpush.channel import worst_noise as worst_noise

# Allocation
from codedpush.allocator import AllocationError as AllocationError
from codedpush.allocator import OptInstance as OptInstance
from codedpush.allocator import fd_allocate as fd_allocate
from codedpush.allocator import quantize as quantize
from codedpush.allocator import td_allocate as td_allocate
from codedpush.allocator import throughput as throughput

# Experiments
from codedpush.harness import HarnessError as HarnessError
from codedpush.harness import TrialResult as TrialResult
from codedpush.harness import TrialSpec as TrialSpec
from codedpush.harness import run_trial as run_trial
from codedpush.harness import sweep as sweep
from codedpush.validation import ValidationWarning as ValidationWarning
from codedpush.validation import validate_plan as validate_plan

__all__ = [
    "FadingParams",
    "SystemConfig",
    "CodecError",
    "DecodeError",
    "DegenerateQuotaError",
    "DeliveryPlan",
    "PlacementState",
    "RequestVector",
    "build_delivery_plan",
    "decode_user",
    "make_placement",
    "DomainError",
    "coded_total_traffic",
    "expected_payload_size",
    "traffic_summary",
    "ChannelError",
    "ChannelScenario",
    "sample_scenario",
    "worst_noise",
    "AllocationError",
    "OptInstance",
    "fd_allocate",
    "quantize",
    "td_allocate",
    "throughput",
    "HarnessError",
    "TrialResult",
    "TrialSpec",
    "run_trial",
    "sweep",
    "ValidationWarning",
    "validate_plan",
]
