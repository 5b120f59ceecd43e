"""Flat key=value run configurations.

One key per line, '#' starts a comment; unknown keys and malformed lines
are reported with their line number.  A run is reproducible bit for bit
from (config, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError

_BOOL = {"true": True, "false": False, "1": True, "0": False, "yes": True, "no": False}


@dataclass
class RunConfig:
    command: str = ""
    family: str = "arnold"  # 'rigid' | 'arnold'
    omega: float | None = None
    target: str | None = None  # 'golden' | 'silver'
    cf_depth: int = 12
    grid: int = 4096
    eps_guard: float = 1e-9
    seed: int = 0
    out: str | None = None
    emit_json: bool = False
    timestamp: bool = True
    acknowledge_accuracy: bool = False
    max_order: int = 10
    # ubdl
    n_compositions: int = 100
    m_max: int = 20
    Q: float = 8.0
    d1_samples: int = 100_000
    # cancel
    n_cases: int = 100
    tol: float = 1e-6
    # puresing
    lam: int = 3
    kappa_min: int = 4
    kappa_max: int = 9
    j_order: int | None = None
    resid_max: float = 1.0
    # partition
    k: int = 3

    def items(self) -> list[tuple[str, object]]:
        return [(f.name, getattr(self, f.name)) for f in fields(self)]


_INT_KEYS = {
    "cf_depth", "grid", "seed", "n_compositions", "m_max", "d1_samples",
    "n_cases", "lam", "kappa_min", "kappa_max", "j_order", "k", "max_order",
}
_FLOAT_KEYS = {"omega", "eps_guard", "Q", "tol", "resid_max"}
_BOOL_KEYS = {"emit_json", "timestamp", "acknowledge_accuracy"}
_STR_KEYS = {"family", "target", "out", "command"}


def parse_config(path: str | Path) -> RunConfig:
    cfg = RunConfig()
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from e
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key in _INT_KEYS:
                setattr(cfg, key, int(value))
            elif key in _FLOAT_KEYS:
                setattr(cfg, key, float(value))
            elif key in _BOOL_KEYS:
                setattr(cfg, key, _BOOL[value.lower()])
            elif key in _STR_KEYS:
                setattr(cfg, key, value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except (ValueError, KeyError) as e:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from e
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if cfg.family not in ("rigid", "arnold"):
        raise ConfigError(f"unknown family {cfg.family!r}")
    if cfg.target not in (None, "golden", "silver"):
        raise ConfigError(f"unknown target {cfg.target!r}")
    if cfg.omega is None and cfg.target is None:
        raise ConfigError("either omega or target must be given")
    if cfg.grid < 2:
        raise ConfigError("grid must be at least 2")
    if cfg.eps_guard != 1e-9:
        # the geometry layer pins the endpoint guard; the key exists so that
        # every report records it explicitly
        raise ConfigError("eps_guard is pinned to 1e-9 by the geometry layer")
    if cfg.kappa_min > cfg.kappa_max:
        raise ConfigError("kappa_min must not exceed kappa_max")
