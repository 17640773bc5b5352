"""Run configuration: declarative key = value file plus flag overrides.

The config file format is one ``key = value`` pair per line, ``#`` comments
allowed.  Unknown keys are rejected (typos should fail loudly in batch
runs).  The default config path can be set with the WPNECK_CONFIG
environment variable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

__all__ = ["RunConfig", "load_config", "CONFIG_ENV_VAR"]

CONFIG_ENV_VAR = "WPNECK_CONFIG"


@dataclass(frozen=True)
class RunConfig:
    ell_min: float = 1e-3
    ell_max: float = 1e-1
    ell_count: int = 12
    grid_n: int = 16384
    sweep_grid_n: int = 16384
    modes: int = 8
    solver_tol: float = 1e-10
    identity_tol: float = 1e-6
    cutoff_c: float = 0.5
    barrier_alpha: float = 0.3
    frame_size: int = 6
    tt_k_max: int = 8
    fit_half_powers: int = 4
    fit_log_powers: int = 1
    jobs: int = 1
    seed: int = 1234
    out: str = "-"

    def __post_init__(self):
        if self.ell_min <= 0 or self.ell_max <= self.ell_min:
            raise ValueError("need 0 < ell_min < ell_max")
        if self.ell_count < 2:
            raise ValueError("need at least two sweep points")
        for name in ("solver_tol", "identity_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.barrier_alpha < 1.0:
            raise ValueError("barrier_alpha must lie in (0, 1)")

    def ell_grid(self) -> list[float]:
        import numpy as np

        return [float(x) for x in np.geomspace(self.ell_min, self.ell_max,
                                               self.ell_count)]


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(name: str, raw: str):
    t = _FIELD_TYPES[name]
    if t in ("int", int):
        return int(raw)
    if t in ("float", float):
        return float(raw)
    return raw


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Config from (optional) file plus overrides; env var supplies the
    default path when none is given."""
    cfg = RunConfig()
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path:
        updates = {}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                key, raw = (part.strip() for part in line.split("=", 1))
                if key not in _FIELD_TYPES:
                    raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
                updates[key] = _coerce(key, raw)
        cfg = replace(cfg, **updates)
    if overrides:
        clean = {k: v for k, v in overrides.items() if v is not None}
        bad = set(clean) - set(_FIELD_TYPES)
        if bad:
            raise ValueError(f"unknown config overrides: {sorted(bad)}")
        cfg = replace(cfg, **clean)
    return cfg
