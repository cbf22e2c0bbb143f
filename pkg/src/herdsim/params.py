"""Scaled model constants shared by all simulation modules."""

from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError

SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless constants of the herding model.

    Defaults are the parameter set used throughout the model figures.
    ``b0`` and ``w`` drive the intraday seasonality envelope; their defaults
    (1 and 0.25 trading day) are configuration choices.

    Time is scaled as ``t_s = h_rate * t`` with ``t`` in seconds; one tick of
    ``delta_tick`` trading days lasts ``86400 * delta_tick`` seconds.
    """

    eps_cf: float = 1.1
    eps_fc: float = 3.0
    eps_cc: float = 3.0
    H: float = 1000.0
    a_tau: float = 0.7
    alpha: float = 2.0
    h_rate: float = 0.3e-8
    delta_tick: float = 1.0 / 390.0
    a0: float = 1.0
    b0: float = 1.0
    w: float = 0.25
    seed: int = 0

    def __post_init__(self):
        checks = (
            ("eps_cf", self.eps_cf > 0, "must be > 0"),
            ("eps_fc", self.eps_fc > 0, "must be > 0"),
            ("eps_cc", self.eps_cc > 0, "must be > 0"),
            ("H", self.H >= 1, "must be >= 1"),
            ("a_tau", self.a_tau >= 0, "must be >= 0"),
            ("alpha", self.alpha >= 0, "must be >= 0"),
            ("h_rate", self.h_rate > 0, "must be > 0"),
            ("delta_tick", self.delta_tick > 0, "must be > 0"),
            ("a0", self.a0 >= 0, "must be >= 0"),
            ("b0", self.b0 > 0, "must be > 0"),
            ("w", self.w > 0, "must be > 0"),
        )
        for key, ok, msg in checks:
            if not ok:
                raise ConfigError(f"{msg}, got {getattr(self, key)!r}", key=key)
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"must be a 64-bit unsigned integer, got {self.seed!r}", key="seed")

    @property
    def tick_scaled(self):
        """Length of one tick in scaled time."""
        return self.h_rate * SECONDS_PER_DAY * self.delta_tick

    @property
    def nf_fixed_point(self):
        return self.eps_cf / (self.eps_cf + self.eps_fc)

    def with_(self, **changes):
        return replace(self, **changes)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]
