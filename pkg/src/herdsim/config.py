"""Flat ``key = value`` run configuration.

Model constants use their :class:`~herdsim.params.ModelParams` names; run
settings are listed in :data:`RUN_KEYS`.  Blank lines and ``#`` comments are
ignored.  Command-line flags override file values.
"""

import os
from dataclasses import dataclass, field

from .errors import ConfigError
from .market_series import NoiseConfig
from .params import ModelParams

COMMANDS = ("simulate", "reduced", "microsim", "intervals", "psd", "pdf", "ablate", "ingest")
RECIPES = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8")
OUT_ENV = "HERDSIM_OUT"

# run-level keys and their parsers
RUN_KEYS = {
    "mode": str,
    "delta": float,
    "q": "floats",
    "seeds": "ints",
    "ticks": int,
    "burn_in": int,
    "out": str,
    "format": str,
    "n_bins": int,
    "normalization": str,
    "window": int,
    "input": str,
    "jobs": int,
    # reduced SDE
    "eta": float,
    "lam": float,
    "x_min": float,
    "x_max": float,
    "dt_sample": float,
    "kappa": float,
    # microsim
    "n_agents": int,
    "events": int,
}

_MODEL_TYPES = {name: (int if name == "seed" else float) for name in ModelParams.field_names()}


def _parse_value(key, raw, kind):
    raw = raw.strip()
    try:
        if kind == "floats":
            vals = [float(v) for v in raw.split(",") if v.strip()]
            if not vals:
                raise ValueError
            return vals
        if kind == "ints":
            vals = [int(v) for v in raw.split(",") if v.strip()]
            if not vals:
                raise ValueError
            return vals
        if kind is int:
            try:
                return int(raw)
            except ValueError:
                # accept 1e6-style integers
                f = float(raw)
                if not f.is_integer():
                    raise
                return int(f)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {getattr(kind, '__name__', kind)}",
                          key=key) from None


@dataclass
class RunConfig:
    command: str = "simulate"
    params: ModelParams = field(default_factory=ModelParams)
    mode: NoiseConfig = field(default_factory=NoiseConfig)
    delta_window: float = None
    thresholds: list = field(default_factory=lambda: [2.0])
    seeds: list = field(default_factory=lambda: [0])
    output_dir: str = "."
    format: str = "csv"
    ticks: int = 1_000_000
    burn_in: int = 100_000
    n_bins: int = 30
    normalization: str = "global"
    window: int = 5000
    input: str = None
    reduced: dict = field(default_factory=dict)
    micro: dict = field(default_factory=dict)
    jobs: int = 1
    explicit: frozenset = frozenset()

    @property
    def Delta(self):
        """Analysis window in trading days (defaults to one tick)."""
        return self.params.delta_tick if self.delta_window is None else self.delta_window


def read_config_file(path):
    """Parse a config file into a raw ``{key: string}`` mapping."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc.strerror}", key="config") from None
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {text!r}",
                              key=text.split()[0])
        key, value = (s.strip() for s in text.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key", key="")
        out[key] = value
    return out


def _seed_alias(raw):
    if "seed" in raw:
        if "seeds" in raw:
            raise ConfigError("give either seed or seeds, not both", key="seed")
        raw["seeds"] = raw.pop("seed")
    return raw


def parse_config(path=None, overrides=None, command="simulate", env=None):
    """Build a validated RunConfig from a file plus overrides.

    ``overrides`` maps keys to strings (as typed on the command line) or to
    already-typed values; they win over the file.  The ``HERDSIM_OUT``
    environment variable overrides a file-given output directory but not an
    explicit ``out`` override.
    """
    raw = _seed_alias(read_config_file(path) if path else {})
    overrides = _seed_alias({k: v for k, v in (overrides or {}).items() if v is not None})
    raw.update(overrides)

    model, run = {}, {}
    for key, value in raw.items():
        if key in _MODEL_TYPES:
            kind = _MODEL_TYPES[key]
            model[key] = _parse_value(key, value, kind) if isinstance(value, str) else value
        elif key in RUN_KEYS:
            kind = RUN_KEYS[key]
            run[key] = _parse_value(key, value, kind) if isinstance(value, str) else value
        else:
            raise ConfigError("unknown configuration key", key=key)

    params = ModelParams(**model)
    cfg = RunConfig(command=command, params=params)
    if "mode" in run:
        if run["mode"].upper() not in NoiseConfig.MODES:
            raise ConfigError(f"expected one of A, B, C, D, got {run['mode']!r}", key="mode")
        cfg.mode = NoiseConfig.mode(run["mode"])
    if "delta" in run:
        if not run["delta"] > 0:
            raise ConfigError(f"must be > 0, got {run['delta']}", key="delta")
        cfg.delta_window = run["delta"]
    if "q" in run:
        if any(not q > 0 for q in run["q"]):
            raise ConfigError("thresholds must be > 0", key="q")
        cfg.thresholds = list(run["q"])
    if "seeds" in run:
        seeds = run["seeds"] if isinstance(run["seeds"], list) else [run["seeds"]]
        if any(not 0 <= s < 2**64 for s in seeds):
            raise ConfigError("seeds must be 64-bit unsigned integers", key="seeds")
        if len(set(seeds)) != len(seeds):
            raise ConfigError("duplicate seeds", key="seeds")
        cfg.seeds = list(seeds)
        cfg.params = params.with_(seed=seeds[0])
    for key, lo in (("ticks", 1), ("burn_in", 0), ("n_bins", 10), ("window", 2), ("jobs", 1)):
        if key in run:
            if run[key] < lo:
                raise ConfigError(f"must be >= {lo}, got {run[key]}", key=key)
            setattr(cfg, key, run[key])
    if "format" in run:
        if run["format"] not in ("csv", "json"):
            raise ConfigError(f"expected csv or json, got {run['format']!r}", key="format")
        cfg.format = run["format"]
    if "normalization" in run:
        if run["normalization"] not in ("global", "moving"):
            raise ConfigError(f"expected global or moving, got {run['normalization']!r}",
                              key="normalization")
        cfg.normalization = run["normalization"]
    if "out" in run:
        cfg.output_dir = run["out"]
    if "input" in run:
        cfg.input = run["input"]
    cfg.reduced = {k: run[k] for k in ("eta", "lam", "x_min", "x_max", "dt_sample", "kappa")
                   if k in run}
    cfg.micro = {k: run[k] for k in ("n_agents", "events") if k in run}
    for key in ("n_agents", "events"):
        if key in cfg.micro and cfg.micro[key] < (3 if key == "n_agents" else 1):
            raise ConfigError(f"too small: {cfg.micro[key]}", key=key)

    cfg.explicit = frozenset(run) | frozenset(model)
    env = os.environ if env is None else env
    if env.get(OUT_ENV) and "out" not in overrides:
        cfg.output_dir = env[OUT_ENV]
    return cfg
