"""From agent populations to return series.

Per tick the log-price is ``p = x * xi`` with ``x = (1 - n_f) / n_f``, the
volatility ``sigma = b0(t) (1 + a0 |p|)`` and the return ``r = sigma * omega``
with Gaussian ``omega``.  Longer-window returns are non-overlapping sums of
tick returns.

The ablation switchboard (:class:`NoiseConfig`) toggles the exogenous noise,
the chartist mood dynamics and the intraday envelope on one and the same
agent path, so the four compositions can be compared without re-simulating.
"""

import csv
import math
from dataclasses import dataclass, field

import numba
import numpy as np

from . import sde_engine
from .errors import DataError, DomainError

DEFAULT_MOVING_WINDOW = 5000


@dataclass(frozen=True)
class NoiseConfig:
    exogenous_on: bool = True
    xi_on: bool = True
    seasonality_on: bool = True

    MODES = {
        "A": (False, False, False),
        "B": (True, False, False),
        "C": (True, True, False),
        "D": (True, True, True),
    }

    @classmethod
    def mode(cls, name):
        try:
            return cls(*cls.MODES[name.upper()])
        except KeyError:
            raise DomainError(f"unknown ablation mode {name!r}; expected one of A, B, C, D") from None

    @property
    def name(self):
        for k, v in self.MODES.items():
            if v == (self.exogenous_on, self.xi_on, self.seasonality_on):
                return k
        return None

    @property
    def x_only(self):
        """Mode A: statistics are taken on the long-term ratio ``x`` itself."""
        return not (self.exogenous_on or self.xi_on or self.seasonality_on)


@dataclass
class ReturnSeries:
    values: np.ndarray
    window: float
    normalization: str = "none"
    sigma_used: object = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)

    @property
    def abs(self):
        return np.abs(self.values)


# ---------------------------------------------------------------------------
# Pointwise model functions


def log_price(n_f, xi):
    n_f = np.asarray(n_f, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if np.any(n_f <= 0) or np.any(n_f >= 1):
        raise DomainError("n_f must lie in (0, 1)")
    if np.any(np.abs(xi) > 1):
        raise DomainError("xi must lie in [-1, 1]")
    out = (1.0 - n_f) / n_f * xi
    return out if out.ndim else float(out)


def seasonal_b0(t, b0=1.0, w=0.25):
    """Intraday envelope; ``t`` in trading days, period exactly one day."""
    if not w > 0:
        raise DomainError(f"w must be > 0, got {w}")
    frac = np.mod(np.asarray(t, dtype=float), 1.0)
    out = b0 * np.exp(-((frac - 0.5) ** 2) / w**2) + 0.5
    return out if out.ndim else float(out)


def volatility(p, b0_t, a0=1.0):
    b0_t = np.asarray(b0_t, dtype=float)
    if np.any(b0_t <= 0):
        raise DomainError("b0_t must be > 0")
    out = b0_t * (1.0 + a0 * np.abs(np.asarray(p, dtype=float)))
    return out if out.ndim else float(out)


def tick_return(sigma, rng=None, exogenous_on=True, dp_sign=None, omega=None):
    """``sigma * omega`` with standard normal ``omega``.

    With the exogenous noise off, ``omega`` is replaced by the sign of the
    log-price change (``dp_sign``), so ``|r| = sigma``.
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < 0):
        raise DomainError("sigma must be >= 0")
    if exogenous_on:
        if omega is None:
            omega = rng.standard_normal(sigma.shape)
        out = sigma * omega
    else:
        out = sigma * (np.ones_like(sigma) if dp_sign is None else np.asarray(dp_sign))
    return out if out.ndim else float(out)


def frozen_xi(params):
    """Constant mood used when the mood dynamics are off: its stationary rms value."""
    return math.sqrt(1.0 / (2.0 * params.eps_cc + 1.0))


# ---------------------------------------------------------------------------
# Aggregation and normalization


def block_size(Delta, delta):
    k = Delta / delta
    kr = int(round(k))
    if kr < 1 or abs(k - kr) > 1e-9 * max(1.0, k):
        raise DomainError(f"window {Delta} is not an integer multiple of the tick {delta}")
    return kr


def aggregate_returns(ticks, Delta, delta, how="sum"):
    """Non-overlapping block sums (or means, ``how="mean"``) of length ``Delta/delta``.

    A trailing partial block is dropped.
    """
    k = block_size(Delta, delta)
    x = np.asarray(ticks.values if isinstance(ticks, ReturnSeries) else ticks, dtype=float)
    n = len(x) // k
    blocks = x[: n * k].reshape(n, k)
    vals = blocks.sum(axis=1) if how == "sum" else blocks.mean(axis=1)
    return ReturnSeries(vals, Delta, "none")


def _values(series):
    return np.asarray(series.values if isinstance(series, ReturnSeries) else series, dtype=float)


def normalize_global(series):
    """Divide by the sample standard deviation of the whole series."""
    v = _values(series)
    s = float(np.std(v))
    if not s > 0 or not np.isfinite(s):
        raise DataError("zero variance: cannot normalize a constant series")
    window = series.window if isinstance(series, ReturnSeries) else None
    meta = dict(series.meta) if isinstance(series, ReturnSeries) else {}
    return ReturnSeries(v / s, window, "global", s, meta)


def normalize_moving(series, window=DEFAULT_MOVING_WINDOW):
    """Divide each value by the std of the preceding ``window`` values.

    The first ``window`` values have no full history and are dropped.
    """
    v = _values(series)
    if len(v) <= window:
        raise DataError(f"series of length {len(v)} is not longer than the window {window}")
    c1 = np.concatenate([[0.0], np.cumsum(v)])
    c2 = np.concatenate([[0.0], np.cumsum(v * v)])
    i = np.arange(window, len(v))
    m1 = (c1[i] - c1[i - window]) / window
    m2 = (c2[i] - c2[i - window]) / window
    sd = np.sqrt(np.maximum(m2 - m1 * m1, 0.0))
    if np.any(sd <= 0):
        raise DataError("zero variance inside a moving window")
    win = series.window if isinstance(series, ReturnSeries) else None
    return ReturnSeries(v[window:] / sd, win, f"moving({window})", sd)


# ---------------------------------------------------------------------------
# Path -> series


def tick_series(n_f, xi, params, config, t_days=None, omega=None, prev_p=0.0):
    """Tick-level observable for one noise composition.

    Returns tick returns for modes with exogenous noise or mood dynamics,
    and the long-term ratio ``x`` for mode A.
    """
    x = (1.0 - n_f) / n_f
    if config.x_only:
        return x
    p = x * (xi if config.xi_on else frozen_xi(params))
    if config.seasonality_on:
        if t_days is None:
            t_days = np.arange(len(x)) * params.delta_tick
        b = seasonal_b0(t_days, params.b0, params.w)
    else:
        b = params.b0
    sigma = b * (1.0 + params.a0 * np.abs(p))
    if config.exogenous_on:
        return sigma * omega
    dp = np.diff(np.concatenate([[prev_p], p])) if np.ndim(p) else np.zeros(len(x))
    return sigma * np.sign(dp)


@numba.njit(cache=True)
def _aggregate(nf, xi, omega, tick0, delta, k, b0, w, a0, xibar, flags, prev_p, out):
    """Block sums of tick returns for several modes in one pass.

    ``flags[m] = (exogenous_on, xi_on, seasonality_on)``; an all-false row
    yields block means of ``x``.  ``prev_p`` carries the last log-price per
    mode across chunks and is updated in place.
    """
    n_modes = flags.shape[0]
    n_blocks = len(nf) // k
    for m in range(n_modes):
        exo, xon, son = flags[m, 0], flags[m, 1], flags[m, 2]
        x_only = not (exo or xon or son)
        pp = prev_p[m]
        for j in range(n_blocks):
            acc = 0.0
            for i in range(j * k, (j + 1) * k):
                x = (1.0 - nf[i]) / nf[i]
                if x_only:
                    acc += x
                    continue
                p = x * (xi[i] if xon else xibar)
                if son:
                    frac = ((tick0 + i) * delta) % 1.0
                    b = b0 * math.exp(-((frac - 0.5) ** 2) / (w * w)) + 0.5
                else:
                    b = b0
                sig = b * (1.0 + a0 * abs(p))
                if exo:
                    acc += sig * omega[i]
                else:
                    d = p - pp
                    acc += sig * (1.0 if d > 0 else (-1.0 if d < 0 else 0.0))
                pp = p
            out[m, j] = acc / k if x_only else acc
        if not x_only and n_blocks * k < len(nf):
            # keep the carried price consistent with the last tick seen
            i = len(nf) - 1
            pp = (1.0 - nf[i]) / nf[i] * (xi[i] if xon else xibar)
        prev_p[m] = pp


@dataclass
class SeriesBundle:
    """Unnormalized window series per mode from one seed."""

    series: dict
    params: object
    n_ticks: int
    Delta: float


def simulate_series(params, n_ticks, Delta=None, modes=("D",), burn_in=sde_engine.DEFAULT_BURN_IN,
                    chunk_ticks=1_000_000, keep_ticks=False):
    """Stream one agent path and build window series for several modes.

    All modes share the agent path and the exogenous noise draws.  Mode A
    series are block means of ``x``; the others are block sums of tick
    returns.  ``keep_ticks`` additionally stores the tick-level series.
    """
    Delta = params.delta_tick if Delta is None else Delta
    k = block_size(Delta, params.delta_tick)
    chunk = k * max(1, chunk_ticks // k)
    configs = {m: NoiseConfig.mode(m) for m in modes}
    flags = np.array([[c.exogenous_on, c.xi_on, c.seasonality_on] for c in configs.values()],
                     dtype=np.bool_)
    out = {m: [] for m in modes}
    ticks = {m: [] for m in modes} if keep_ticks else None
    prev_p = np.zeros(len(configs))
    xibar = frozen_xi(params)
    nrng = sde_engine.noise_rng(params.seed)
    offset = 0
    for path in sde_engine.iter_paths(params, n_ticks, chunk, burn_in):
        n = len(path)
        omega = nrng.standard_normal(n)
        if keep_ticks:
            t_days = (offset + np.arange(n)) * params.delta_tick
            for i, (m, cfg) in enumerate(configs.items()):
                ticks[m].append(tick_series(path.n_f, path.xi, params, cfg, t_days, omega,
                                            prev_p[i]))
        blocks = np.empty((len(configs), n // k))
        _aggregate(path.n_f, path.xi, omega, offset, params.delta_tick, k, params.b0,
                   params.w, params.a0, xibar, flags, prev_p, blocks)
        for i, m in enumerate(configs):
            out[m].append(blocks[i])
        offset += n
    series = {}
    for m in modes:
        s = ReturnSeries(np.concatenate(out[m]), Delta, "none",
                         meta={"mode": m, "seed": params.seed, "observable":
                               "x" if configs[m].x_only else "return"})
        if keep_ticks:
            s.meta["ticks"] = np.concatenate(ticks[m])
        series[m] = s
    return SeriesBundle(series, params, n_ticks, Delta)


def write_series_csv(series, fh, t0=0.0):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t_days", "r"])
    dt = series.window
    for i, v in enumerate(series.values):
        w.writerow([f"{t0 + (i + 1) * dt:.9g}", f"{v:.9g}"])
