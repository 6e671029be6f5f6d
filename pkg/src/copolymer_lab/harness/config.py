"""Run configuration: a line-oriented ``key = value`` file with per-experiment sections.

Keys before any section header, or under ``[common]``, apply to every
experiment; keys under ``[<experiment>]`` apply to that experiment only.
Command-line flags override file values. Grids accept ``start:stop:step``
(inclusive) and comma-separated lists.

Example::

    # defaults for every experiment
    law = gaussian_std
    seed = 7

    [free-energy]
    lambda = 1.0
    h = 0.4
    N_grid = 40:400:40
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from ..core.excursion import SPECTRUM_BUDGET
from ..core.params import ENDPOINTS, VARIANTS
from ..disorder import DisorderLaw
from ..errors import InvalidArgument
from ..walks import ENUMERATION_CAP

OUT_ENV = "COPOLYMER_LAB_OUT"
WORKERS_ENV = "COPOLYMER_LAB_WORKERS"
EXPERIMENTS = (
    "gen-disorder", "partition", "spectrum", "free-energy", "critical-point", "slope-origin",
    "check-deloc-tail", "check-last-exit", "check-concentration", "check-interpolation", "check-stretch",
    "check-meander", "check-annealed", "sample-paths", "oracle-verify",
)


class ConfigError(InvalidArgument):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message, field=field)
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    experiment: str
    lam: float = 1.0
    h: float = 0.5
    N: int = 100
    endpoint: str = "free"
    variant: str = "copolymer"
    law: str = "gaussian_std"
    law2: str = "bernoulli_pm1"
    replicas: int = 200
    replica: int = 0
    seed: int = 0
    out: str | None = None
    workers: int | None = None  # None -> available parallelism
    N_grid: tuple = ()
    m_grid: tuple = ()
    ell_grid: tuple = ()
    lambda_grid: tuple = ()
    m: int = 10
    q: float = -0.2
    q_hat: float = 3.0
    tol_h: float = 0.01
    v: float = 0.8
    delta_prime: float = 0.0
    samples: int = 10_000
    pairs: int = 1000
    configs: int = 50
    engine: str = "excursion"
    disorder: str | None = None
    format: str = "bin"
    interior: bool = False
    two_sided: bool = False
    enum_cap: int = 16
    spectrum_cap: int = SPECTRUM_BUDGET

    def resolved_workers(self) -> int:
        if self.workers is not None:
            return self.workers
        env = os.environ.get(WORKERS_ENV)
        if env:
            return max(1, int(env))
        return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1))

    def output_root(self) -> Path:
        return Path(self.out or os.environ.get(OUT_ENV) or "runs")

    def echo(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v) for f in fields(self)}


# config-file key -> dataclass field
KEY_ALIASES = {"lambda": "lam", "lambda_grid": "lambda_grid", "n_replicas": "replicas"}
_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
_INT_GRIDS = {"N_grid", "m_grid", "ell_grid"}
_FLOAT_GRIDS = {"lambda_grid"}
_BOOL = {"interior", "two_sided"}
_INT = {"N", "replicas", "replica", "seed", "workers", "m", "samples", "pairs", "configs", "enum_cap", "spectrum_cap"}
_FLOAT = {"lam", "h", "q", "q_hat", "tol_h", "v", "delta_prime"}


def parse_grid(text: str, integer: bool, name: str = "grid") -> tuple:
    """``a:b:s`` (inclusive of ``b`` when on the lattice) or ``x, y, z``."""
    text = text.strip()
    conv = int if integer else float
    try:
        if ":" in text:
            parts = [p.strip() for p in text.split(":")]
            if len(parts) != 3:
                raise ValueError
            a, b, s = (float(p) for p in parts)
            if s <= 0 or b < a:
                raise ConfigError(f"{name}: range needs start <= stop and step > 0", field=name)
            n = int(math.floor((b - a) / s + 1e-9)) + 1
            vals = [a + i * s for i in range(n)]
            if integer:
                return tuple(int(round(x)) for x in vals)
            return tuple(round(x, 12) for x in vals)
        return tuple(conv(p.strip()) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"{name}: cannot parse grid {text!r}", field=name) from None


def _convert(key: str, raw: str, line: int | None = None):
    try:
        if key in _INT_GRIDS:
            return parse_grid(raw, True, key)
        if key in _FLOAT_GRIDS:
            return parse_grid(raw, False, key)
        if key in _BOOL:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if key in _INT:
            x = float(raw)
            if x != int(x):
                raise ValueError
            return int(x)
        if key in _FLOAT:
            return float(raw)
        return raw.strip()
    except ConfigError as exc:
        raise ConfigError(str(exc), line=line, field=key) from None
    except ValueError:
        raise ConfigError(f"invalid value {raw!r} for {key}", line=line, field=key) from None


def _canonical(key: str, line: int | None) -> str:
    key = KEY_ALIASES.get(key, key)
    if key not in _FIELD_TYPES or key == "experiment":
        raise ConfigError(f"unknown key {key!r}", line=line, field=key)
    return key


def parse_config_text(text: str, experiment: str) -> dict:
    """Values that apply to ``experiment`` from a config file's text."""
    values: dict = {}
    section = "common"
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", line=lineno)
            section = line[1:-1].strip()
            if section != "common" and section not in EXPERIMENTS:
                raise ConfigError(f"unknown section {section!r}", line=lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        key, converted = _key_value(key, val, lineno)
        if section in ("common", experiment):
            values[key] = converted
    return values


def _key_value(key: str, raw: str, line: int | None) -> tuple[str, object]:
    """Canonical key and converted value; a range or list given for ``N`` fills ``N_grid``."""
    key = _canonical(key, line)
    if key == "N" and (":" in raw or "," in raw):
        key = "N_grid"
    return key, _convert(key, raw, line)


def load_config(experiment: str, path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}", field="experiment")
    values = dict(DEFAULT_GRIDS.get(experiment, {}))
    values.update(DEFAULT_PARAMS.get(experiment, {}))
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}", field="config") from None
        values.update(parse_config_text(text, experiment))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if isinstance(val, str):
            key, val = _key_value(key, val, None)
        else:
            key = _canonical(key, None)
        values[key] = val
    cfg = RunConfig(experiment=experiment, **values)
    validate(cfg)
    return cfg


DEFAULT_GRIDS = {
    "free-energy": {"N_grid": tuple(range(40, 401, 40))},
    "critical-point": {"N_grid": tuple(range(40, 401, 40))},
    "slope-origin": {"N_grid": tuple(range(40, 401, 40)), "lambda_grid": (0.1, 0.2, 0.3, 0.4, 0.5)},
    "check-deloc-tail": {"m_grid": tuple(range(2, 41))},
    "check-last-exit": {"ell_grid": tuple(range(4, 129, 4))},
    "check-interpolation": {"lambda_grid": (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)},
    "check-stretch": {"N_grid": (1000, 10000, 100000)},
    "check-annealed": {"N_grid": tuple(range(20, 201, 20))},
}
DEFAULT_PARAMS = {
    "check-deloc-tail": {"lam": 1.0, "h": 1.5, "N": 200},
    "check-last-exit": {"lam": 1.0, "h": 1.5, "N": 400},
    "check-meander": {"lam": 1.0, "h": 1.5, "N": 400},
    "check-concentration": {"lam": 1.0, "h": 0.5, "N": 100, "m": 20},
    "check-interpolation": {"N": 200, "replicas": 1000},
    "check-stretch": {"lam": 0.5, "h": 0.4, "law": "bernoulli_pm1", "replicas": 50},
    "check-annealed": {"lam": 0.15, "h": 0.3, "N": 40, "law": "bernoulli_pm1", "replicas": 10000},
    "gen-disorder": {"replicas": 1},
    "oracle-verify": {"N": 12},
}


def _monotone(name: str, grid: tuple) -> None:
    if len(grid) and np.any(np.diff(np.asarray(grid, dtype=float)) <= 0):
        raise ConfigError(f"{name} must be strictly increasing", field=name)


def validate(cfg: RunConfig) -> None:
    if cfg.N % 2 or cfg.N < 2:
        raise ConfigError(f"N must be an even integer >= 2, got {cfg.N}", field="N")
    if not (math.isfinite(cfg.lam) and cfg.lam >= 0):
        raise ConfigError(f"lambda must be >= 0, got {cfg.lam}", field="lambda")
    if not math.isfinite(cfg.h):
        raise ConfigError("h must be finite", field="h")
    if cfg.variant == "copolymer" and cfg.h < 0:
        raise ConfigError(f"h must be >= 0 for the copolymer, got {cfg.h}", field="h")
    if cfg.endpoint not in ENDPOINTS:
        raise ConfigError(f"endpoint must be one of {ENDPOINTS}", field="endpoint")
    if cfg.variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}", field="variant")
    for name in ("law", "law2"):
        try:
            DisorderLaw.parse(getattr(cfg, name))
        except InvalidArgument as exc:
            raise ConfigError(str(exc), field=name) from None
    if cfg.replicas < 1:
        raise ConfigError("replicas must be >= 1", field="replicas")
    if cfg.seed < 0:
        raise ConfigError("seed must be >= 0", field="seed")
    if cfg.workers is not None and cfg.workers < 1:
        raise ConfigError("workers must be >= 1", field="workers")
    for name in ("N_grid", "m_grid", "ell_grid", "lambda_grid"):
        _monotone(name, getattr(cfg, name))
    if any(n % 2 or n < 2 for n in cfg.N_grid):
        raise ConfigError("N_grid must contain even values >= 2", field="N_grid")
    if any(l % 2 or l < 0 for l in cfg.ell_grid):
        raise ConfigError("ell_grid must contain even values >= 0", field="ell_grid")
    if cfg.m % 2 or cfg.m < 0:
        raise ConfigError(f"m must be even and >= 0, got {cfg.m}", field="m")
    if cfg.engine not in ("excursion", "position", "longrange"):
        raise ConfigError("engine must be excursion, position or longrange", field="engine")
    if cfg.format not in ("bin", "csv", "both"):
        raise ConfigError("format must be bin, csv or both", field="format")
    if not 2 <= cfg.enum_cap <= ENUMERATION_CAP:
        raise ConfigError(f"enum_cap must be in [2, {ENUMERATION_CAP}]", field="enum_cap")
    if cfg.tol_h <= 0:
        raise ConfigError("tol_h must be > 0", field="tol_h")


def with_overrides(cfg: RunConfig, **changes) -> RunConfig:
    new = replace(cfg, **changes)
    validate(new)
    return new
