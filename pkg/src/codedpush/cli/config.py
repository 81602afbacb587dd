"""Run configuration documents for the ``codedpush`` CLI.

A config is a JSON (or YAML) mapping. Physical quantities accept either the
symbol key or the long name::

    {"K": 2, "N": 2, "F": 1000, "M": 1, "P": 10, "B": 1e6, "H": 64}

Units: Hz, W, W/Hz, bits, meters, seconds. Unknown keys are rejected.
Everything not given falls back to the packaged defaults and is listed in
:attr:`RunConfig.defaults_applied`.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..allocator import Mode
from ..harness import RequestModel, Scheme, SizesSource, SweepParameter, TrialSpec
from ..models import FadingParams, SystemConfig
from ..utils import get_default

# Fields whose defaults change the physics; echoed when defaulted.
PHYSICS_FIELDS = (
    "power",
    "bandwidth",
    "subcarriers",
    "subcarrier_bw",
    "slot_duration",
    "base_psd",
    "cell_radius",
    "pathloss_exponent",
    "rice_factor",
    "min_distance",
    "requests",
)


class ConfigError(ValueError):
    """Malformed or invalid configuration document."""


def _channel_default(key: str):
    return lambda: float(get_default("channel", key))


class RunConfig(BaseModel):
    """Validated run configuration: a TrialSpec plus sweep and output settings."""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    num_users: int = Field(alias="K", gt=0, description="K, number of users")
    num_contents: int = Field(alias="N", gt=0, description="N, number of contents")
    content_size: int = Field(alias="F", ge=1, description="F, bits per content")
    cache_contents: float = Field(alias="M", ge=0.0, description="M, cache size in contents")
    power: float = Field(default=1.0, alias="P", gt=0.0, description="P, transmit power in W")
    bandwidth: float = Field(default=1.0, alias="B", gt=0.0, description="B, bandwidth in Hz")
    subcarriers: int = Field(default=1, alias="H", gt=0, description="H, subcarriers")
    subcarrier_bw: Optional[float] = Field(
        default=None, alias="B_u", gt=0.0, description="B_u, Hz per subcarrier (B/H if omitted)"
    )
    slot_duration: float = Field(
        default_factory=lambda: float(get_default("system", "slot_duration")),
        alias="T_u",
        gt=0.0,
        description="T_u, seconds per slot",
    )

    base_psd: float = Field(
        default_factory=_channel_default("base_psd"), alias="n", gt=0.0, description="n, W/Hz"
    )
    cell_radius: float = Field(default_factory=_channel_default("cell_radius"), gt=0.0)
    pathloss_exponent: float = Field(default_factory=_channel_default("pathloss_exponent"), ge=0.0)
    rice_factor: float = Field(default_factory=_channel_default("rice_factor"), ge=0.0)
    min_distance: float = Field(default_factory=_channel_default("min_distance"), gt=0.0)

    scheme: Scheme = "coded"
    mode: Mode = "td"
    sizes_source: SizesSource = "analytic"
    seed: int = Field(default=0, ge=0)
    trials: int = Field(default=1, ge=1)
    requests: RequestModel = "uniform"
    fd_tol: Optional[float] = Field(default=None, gt=0.0, le=1e-2)

    sweep_parameter: Optional[SweepParameter] = None
    grid: Optional[tuple[float, ...]] = None
    output: Optional[str] = None
    verbosity: int = Field(default=0, ge=0, le=2)
    workers: int = Field(default=1, ge=1)

    @field_validator("cache_contents")
    @classmethod
    def _cache_below_library(cls, v: float, info) -> float:
        n = info.data.get("num_contents")
        if n is not None and v >= n:
            raise ValueError(f"M={v} must be smaller than N={n}")
        return v

    @field_validator("grid")
    @classmethod
    def _grid_nonempty(cls, v):
        if v is not None and len(v) == 0:
            raise ValueError("grid must list at least one value")
        return v

    @model_validator(mode="after")
    def _check_composite(self) -> "RunConfig":
        # Surfaces cross-field constraints (H*B_u = B, K caps, request length) at parse time.
        try:
            self.to_trial_spec()
        except ValidationError as e:
            raise ValueError(
                "; ".join(
                    f"{'.'.join(str(p) for p in err['loc']) or 'spec'}: {err['msg']}"
                    for err in e.errors()
                )
            ) from None
        return self

    # ── Conversions ──

    def to_system(self) -> SystemConfig:
        return SystemConfig(
            num_contents=self.num_contents,
            num_users=self.num_users,
            content_size=self.content_size,
            cache_contents=self.cache_contents,
            power=self.power,
            bandwidth=self.bandwidth,
            subcarriers=self.subcarriers,
            subcarrier_bw=self.subcarrier_bw,
            slot_duration=self.slot_duration,
        )

    def to_fading(self) -> FadingParams:
        return FadingParams(
            cell_radius=self.cell_radius,
            pathloss_exponent=self.pathloss_exponent,
            rice_factor=self.rice_factor,
            min_distance=self.min_distance,
        )

    def to_trial_spec(self) -> TrialSpec:
        return TrialSpec(
            system=self.to_system(),
            scheme=self.scheme,
            mode=self.mode,
            sizes_source=self.sizes_source,
            fading=self.to_fading(),
            base_psd=self.base_psd,
            seed=self.seed,
            trials=self.trials,
            requests=self.requests,
            fd_tol=self.fd_tol,
        )

    @property
    def defaults_applied(self) -> dict[str, Any]:
        """Physics-affecting fields filled from defaults, name -> value."""
        applied = {
            name: getattr(self, name)
            for name in PHYSICS_FIELDS
            if name not in self.model_fields_set
        }
        if "subcarrier_bw" in applied:
            applied["subcarrier_bw"] = self.bandwidth / self.subcarriers
        return applied

    def with_overrides(self, **overrides: Any) -> RunConfig:
        """Re-validated copy with ``overrides`` applied (None values ignored).

        Physical quantities are overridden by their symbol key (``N``, ``P``...).
        """
        updates = {k: v for k, v in overrides.items() if v is not None}
        if not updates:
            return self
        data = self.model_dump(by_alias=True, exclude_unset=True)
        data.update(updates)
        return _validate(data)

    def to_json(self) -> str:
        """Serialize the explicitly-set fields with symbol keys."""
        return self.model_dump_json(by_alias=True, exclude_unset=True, indent=2)


def _validate(data: Any) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a mapping, got {type(data).__name__}")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        problems = []
        for err in e.errors():
            where = ".".join(str(p) for p in err["loc"]) or "config"
            problems.append(f"{where}: {err['msg']}")
        raise ConfigError("invalid config: " + "; ".join(problems)) from None


def parse_config(text: str, fmt: str = "json") -> RunConfig:
    """Parse and validate a config document.

    Args:
        text: Document text.
        fmt: ``"json"`` or ``"yaml"``.

    Raises:
        ConfigError: With line/column context on a parse error, or naming the
            offending field on a validation error.
    """
    if fmt == "json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    elif fmt == "yaml":
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
            raise ConfigError(f"{where}{getattr(e, 'problem', None) or e}") from None
    else:
        raise ConfigError(f"unknown config format {fmt!r}; expected 'json' or 'yaml'")
    return _validate(data)


def load_config(path: str | Path) -> RunConfig:
    """Read a config file; ``.yaml``/``.yml`` are YAML, anything else JSON."""
    path = Path(path)
    fmt = "yaml" if path.suffix.lower() in (".yaml", ".yml") else "json"
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    try:
        return parse_config(text, fmt)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from None
