"""Pydantic models for codedpush."""

from codedpush.models.system import FadingParams as FadingParams
from codedpush.models.system import SystemConfig as SystemConfig
