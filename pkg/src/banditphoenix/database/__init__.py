"""
BanditPhoenix replay cache.
"""

from .manager import SCHEMA_VERSION, ReplayCache

__all__ = ["SCHEMA_VERSION", "ReplayCache"]
