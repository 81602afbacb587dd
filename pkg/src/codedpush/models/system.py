"""System and channel parameter models."""

from __future__ import annotations

import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..utils import get_default


class SystemConfig(BaseModel):
    """The (N, K, F, M) coded-caching universe plus the radio resource budget.

    Usage:
        cfg = SystemConfig(num_contents=2, num_users=2, content_size=1000,
                           cache_contents=1.0, power=10.0, bandwidth=1e6,
                           subcarriers=64)
        cfg.cache_fraction   # 0.5
        cfg.subcarrier_bw    # bandwidth / subcarriers when omitted
    """

    model_config = ConfigDict(frozen=True)

    num_contents: int = Field(gt=0, description="N, number of contents in the server")
    num_users: int = Field(gt=0, description="K, number of users")
    content_size: int = Field(ge=1, description="F, bits per content")
    cache_contents: float = Field(
        ge=0.0, description="M, cache size in contents (cache holds M*F bits)"
    )
    power: float = Field(default=1.0, gt=0.0, description="P, transmit power in watts")
    bandwidth: float = Field(default=1.0, gt=0.0, description="B, system bandwidth in Hz")
    subcarriers: int = Field(default=1, gt=0, description="H, number of subcarriers")
    subcarrier_bw: Optional[float] = Field(
        default=None, gt=0.0, description="B_u, Hz per subcarrier (defaults to B/H)"
    )
    slot_duration: float = Field(
        default_factory=lambda: float(get_default("system", "slot_duration")),
        gt=0.0,
        description="T_u, seconds per time slot",
    )

    @field_validator("cache_contents")
    @classmethod
    def _cache_below_library(cls, v: float, info) -> float:
        n = info.data.get("num_contents")
        if n is not None and v >= n:
            raise ValueError(f"M={v} must be smaller than N={n}")
        return v

    @model_validator(mode="after")
    def _fill_subcarrier_bw(self) -> "SystemConfig":
        expected = self.bandwidth / self.subcarriers
        if self.subcarrier_bw is None:
            object.__setattr__(self, "subcarrier_bw", expected)
        elif not math.isclose(self.subcarrier_bw * self.subcarriers, self.bandwidth, rel_tol=1e-9):
            raise ValueError(
                f"B_u * H = {self.subcarrier_bw * self.subcarriers} must equal B = {self.bandwidth}"
            )
        return self

    @property
    def cache_fraction(self) -> float:
        """alpha = M/N."""
        return self.cache_contents / self.num_contents

    @property
    def quota(self) -> int:
        """Bits cached per (user, content): round(M*F/N), half-up."""
        return int(math.floor(self.cache_contents * self.content_size / self.num_contents + 0.5))

    @property
    def useful_bits(self) -> float:
        """K(1-M/N)F: channel-delivered bits the users actually needed."""
        return self.num_users * (1.0 - self.cache_fraction) * self.content_size


class FadingParams(BaseModel):
    """Geometry and small-scale fading parameters of the broadcast cell."""

    model_config = ConfigDict(frozen=True)

    cell_radius: float = Field(
        default_factory=lambda: float(get_default("channel", "cell_radius")),
        gt=0.0,
        description="Broadcast radius in meters",
    )
    pathloss_exponent: float = Field(
        default_factory=lambda: float(get_default("channel", "pathloss_exponent")),
        ge=0.0,
        description="Large-scale path-loss exponent",
    )
    rice_factor: float = Field(
        default_factory=lambda: float(get_default("channel", "rice_factor")),
        ge=0.0,
        description="Ricean K-factor (linear); >= 1e9 disables fading",
    )
    min_distance: float = Field(
        default_factory=lambda: float(get_default("channel", "min_distance")),
        gt=0.0,
        description="Path-loss guard distance in meters",
    )

    @model_validator(mode="after")
    def _radius_above_guard(self) -> "FadingParams":
        if self.cell_radius <= self.min_distance:
            raise ValueError(
                f"cell_radius={self.cell_radius} must exceed min_distance={self.min_distance}"
            )
        return self
