"""
BanditPhoenix synthetic environment.
"""

from .synthetic import (
    ARRIVALS,
    MAX_ATTEMPTS,
    EnvDiagnostics,
    SyntheticEnv,
    load_env_spec,
    make_env,
    unit_vectors,
    write_env_spec,
)

__all__ = [
    "ARRIVALS",
    "MAX_ATTEMPTS",
    "EnvDiagnostics",
    "SyntheticEnv",
    "load_env_spec",
    "make_env",
    "unit_vectors",
    "write_env_spec",
]
