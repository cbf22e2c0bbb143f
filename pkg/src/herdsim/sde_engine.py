"""Macroscopic herding SDEs for the fundamentalist share and chartist mood.

The two equations share the trading-activity factor ``1/tau(n_f)``::

    dn_f = [(1-n_f) eps_cf - n_f eps_fc] / tau dt + sqrt(2 n_f (1-n_f) / tau) dW_f
    dxi  = -2 H eps_cc xi / tau dt + sqrt(2 H (1 - xi^2) / tau) dW_xi

with ``1/tau = (1 + a_tau |(1-n_f)/n_f|)^alpha``.  Integration is explicit
Euler-Maruyama.  Within each tick the remaining time is split into
``ceil(R * remaining / cap)`` equal parts, ``R`` being the fastest local
relaxation rate, and one part is taken before ``R`` is re-evaluated; with ``R``
constant over the tick this is a fixed number of equal substeps.  Overshoots
are reflected just inside the open boundaries.
"""

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DataError, DomainError, HerdsimError
from .params import ModelParams

__all__ = [
    "AgentState",
    "Engine",
    "EnginePath",
    "ModelParams",
    "diffusion_nf",
    "diffusion_xi",
    "drift_nf",
    "drift_xi",
    "inv_tau",
    "iter_paths",
    "read_path_csv",
    "simulate",
    "step",
    "write_path_csv",
]

BOUNDARY_EPS = 1e-6
# largest R * h per substep; 0.1 leaves a -0.8% bias on the mean of n_f with feedback
SUBSTEP_CAP = 0.025
MAX_TICKS = 50_000_000
DEFAULT_BURN_IN = 100_000


# ---------------------------------------------------------------------------
# Coefficients


def _check_open_nf(n_f):
    if np.any((np.asarray(n_f) <= 0.0) | (np.asarray(n_f) >= 1.0)):
        raise DomainError(f"n_f must lie in (0, 1), got {n_f!r}")


def inv_tau(n_f, params):
    """Trading activity ``1/tau(n_f)``; equals 1 when feedback is off."""
    _check_open_nf(n_f)
    return (1.0 + params.a_tau * np.abs((1.0 - n_f) / n_f)) ** params.alpha


def drift_nf(n_f, params):
    _check_open_nf(n_f)
    return ((1.0 - n_f) * params.eps_cf - n_f * params.eps_fc) * inv_tau(n_f, params)


def diffusion_nf(n_f, params):
    """Noise amplitude of ``n_f``; zero on the closed boundary."""
    if not 0.0 <= n_f <= 1.0:
        raise DomainError(f"n_f must lie in [0, 1], got {n_f!r}")
    if n_f == 0.0 or n_f == 1.0:
        return 0.0
    return math.sqrt(2.0 * n_f * (1.0 - n_f) * inv_tau(n_f, params))


def _check_xi(xi, closed):
    ok = -1.0 <= xi <= 1.0 if closed else -1.0 < xi < 1.0
    if not ok:
        raise DomainError(f"xi must lie in {'[-1, 1]' if closed else '(-1, 1)'}, got {xi!r}")


def drift_xi(xi, n_f, params):
    _check_xi(xi, closed=False)
    return -2.0 * params.H * params.eps_cc * xi * inv_tau(n_f, params)


def diffusion_xi(xi, n_f, params):
    _check_xi(xi, closed=True)
    return math.sqrt(max(0.0, 2.0 * params.H * (1.0 - xi * xi) * inv_tau(n_f, params)))


# ---------------------------------------------------------------------------
# Compiled integrator


@numba.njit(cache=True, inline="always")
def _reflect(v, lo, hi):
    if v < lo:
        v = 2.0 * lo - v
    elif v > hi:
        v = 2.0 * hi - v
    # overshoot larger than the interval width
    return min(max(v, lo), hi)


@numba.njit(cache=True)
def _advance(nf, xi, rng, n_ticks, dt, eps_cf, eps_fc, eps_cc, H, a_tau, alpha,
             cap, noise, out_nf, out_xi):
    lo = BOUNDARY_EPS
    hi = 1.0 - BOUNDARY_EPS
    rate_nf = eps_cf + eps_fc
    rate_xi = 2.0 * H * eps_cc
    substeps = 0
    for i in range(n_ticks):
        rem = dt
        while rem > 0.0:
            it = (1.0 + a_tau * (1.0 - nf) / nf) ** alpha
            # relaxation of n_f, of xi, and relative noise scale of n_f near 0
            r = max(rate_nf, rate_xi, 2.0 * (1.0 - nf) / nf) * it
            # clamp so the integer step count cannot overflow
            m = math.ceil(min(r * rem / cap, 1e15))
            if m <= 1:
                h = rem
                rem = 0.0
            else:
                h = rem / m
                rem -= h
            sq = math.sqrt(h)
            dnf = ((1.0 - nf) * eps_cf - nf * eps_fc) * it * h
            gnf = math.sqrt(2.0 * nf * (1.0 - nf) * it)
            dxi = -rate_xi * xi * it * h
            gxi = math.sqrt(max(0.0, 2.0 * H * (1.0 - xi * xi) * it))
            zf = rng.standard_normal()
            zx = rng.standard_normal()
            nf = _reflect(nf + dnf + noise * gnf * sq * zf, lo, hi)
            xi = _reflect(xi + dxi + noise * gxi * sq * zx, -hi, hi)
            substeps += 1
        out_nf[i] = nf
        out_xi[i] = xi
    return nf, xi, substeps


# ---------------------------------------------------------------------------
# State containers


@dataclass(frozen=True)
class AgentState:
    n_f: float
    xi: float
    t_scaled: float = 0.0

    def check(self):
        if not 0.0 < self.n_f < 1.0:
            raise DomainError(f"n_f must lie in (0, 1), got {self.n_f!r}")
        if not -1.0 < self.xi < 1.0:
            raise DomainError(f"xi must lie in (-1, 1), got {self.xi!r}")
        return self


@dataclass
class EnginePath:
    """Consecutive tick samples of ``(n_f, xi)``.

    ``t0`` is the scaled time of the first sample; samples are spaced by
    ``params.tick_scaled``.
    """

    n_f: np.ndarray
    xi: np.ndarray
    params: ModelParams
    t0: float = 0.0

    def __len__(self):
        return len(self.n_f)

    def __getitem__(self, i):
        if i < 0:
            i += len(self)
        return AgentState(float(self.n_f[i]), float(self.xi[i]),
                          self.t0 + i * self.params.tick_scaled)

    @property
    def t_scaled(self):
        return self.t0 + np.arange(len(self)) * self.params.tick_scaled

    @property
    def x(self):
        """Long-term chartist/fundamentalist ratio ``(1-n_f)/n_f``."""
        return (1.0 - self.n_f) / self.n_f


def _engine_rng(seed):
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[0])


def noise_rng(seed):
    """Generator for the exogenous return noise, independent of the engine's."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])


def initial_state(params, kind="fixed_point", rng=None):
    """Starting point of a run.

    ``"fixed_point"``: deterministic rest point ``n_f = eps_cf/(eps_cf+eps_fc)``,
    ``xi = 0``.  ``"stationary"``: draw from the no-feedback stationary laws,
    ``n_f ~ Beta(eps_cf, eps_fc)`` and ``(1+xi)/2 ~ Beta(eps_cc, eps_cc)``.
    """
    if kind == "fixed_point":
        return AgentState(params.nf_fixed_point, 0.0)
    if kind == "stationary":
        rng = rng if rng is not None else _engine_rng(params.seed)
        nf = float(np.clip(rng.beta(params.eps_cf, params.eps_fc), BOUNDARY_EPS, 1 - BOUNDARY_EPS))
        u = float(rng.beta(params.eps_cc, params.eps_cc))
        xi = float(np.clip(2 * u - 1, -1 + BOUNDARY_EPS, 1 - BOUNDARY_EPS))
        return AgentState(nf, xi)
    raise DomainError(f"unknown initial state kind {kind!r}")


class Engine:
    """Sequential integrator holding one state and one random stream.

    Instances share nothing; run one per seed for parallel work.
    """

    def __init__(self, params, state=None, rng=None, substep_cap=SUBSTEP_CAP, noise_scale=1.0):
        self.params = params
        self.rng = rng if rng is not None else _engine_rng(params.seed)
        self.state = (state if state is not None else initial_state(params)).check()
        self.substep_cap = substep_cap
        self.noise_scale = noise_scale
        self.substeps = 0

    def advance(self, n_ticks, record=True):
        """Integrate ``n_ticks`` ticks; return them as an EnginePath if ``record``."""
        p = self.params
        n_ticks = int(n_ticks)
        t0 = self.state.t_scaled + p.tick_scaled
        nf, xi = self.state.n_f, self.state.xi
        size = n_ticks if record else min(n_ticks, 1_000_000)
        out_nf = np.empty(size)
        out_xi = np.empty(size)
        done = 0
        while done < n_ticks:
            k = min(size, n_ticks - done)
            nf, xi, m = _advance(nf, xi, self.rng, k, p.tick_scaled, p.eps_cf, p.eps_fc,
                                 p.eps_cc, p.H, p.a_tau, p.alpha, self.substep_cap,
                                 self.noise_scale, out_nf, out_xi)
            self.substeps += m
            done += k
        self.state = AgentState(float(nf), float(xi), self.state.t_scaled + n_ticks * p.tick_scaled)
        if record:
            return EnginePath(out_nf, out_xi, p, t0)
        return None


def step(state, dt_tick, rng, params=None, substep_cap=SUBSTEP_CAP, noise_scale=1.0):
    """Advance one state by ``dt_tick`` scaled time.

    ``noise_scale=0`` switches off both diffusion terms (deterministic drift
    integration).
    """
    params = params if params is not None else ModelParams()
    state.check()
    if not dt_tick > 0:
        raise DomainError(f"dt_tick must be > 0, got {dt_tick!r}")
    out_nf = np.empty(1)
    out_xi = np.empty(1)
    nf, xi, _ = _advance(state.n_f, state.xi, rng, 1, float(dt_tick), params.eps_cf,
                         params.eps_fc, params.eps_cc, params.H, params.a_tau,
                         params.alpha, substep_cap, noise_scale, out_nf, out_xi)
    return AgentState(float(nf), float(xi), state.t_scaled + dt_tick)


def simulate(params, n_ticks, burn_in=DEFAULT_BURN_IN, initial="fixed_point",
             substep_cap=SUBSTEP_CAP, max_ticks=MAX_TICKS):
    """Run one seed and keep ``n_ticks`` ticks after discarding ``burn_in``."""
    if n_ticks <= 0:
        raise DomainError(f"n_ticks must be > 0, got {n_ticks!r}")
    if n_ticks > max_ticks:
        raise HerdsimError(f"n_ticks={n_ticks} exceeds the in-memory limit {max_ticks}; "
                           "use iter_paths for streaming")
    rng = _engine_rng(params.seed)
    state = initial if isinstance(initial, AgentState) else initial_state(params, initial, rng)
    eng = Engine(params, state, rng, substep_cap=substep_cap)
    if burn_in:
        eng.advance(burn_in, record=False)
    return eng.advance(n_ticks)


def iter_paths(params, n_ticks, chunk_ticks=1_000_000, burn_in=DEFAULT_BURN_IN,
               initial="fixed_point", substep_cap=SUBSTEP_CAP):
    """Yield consecutive EnginePath chunks covering ``n_ticks`` ticks.

    Concatenating the chunks gives exactly the path ``simulate`` returns.
    """
    rng = _engine_rng(params.seed)
    state = initial if isinstance(initial, AgentState) else initial_state(params, initial, rng)
    eng = Engine(params, state, rng, substep_cap=substep_cap)
    if burn_in:
        eng.advance(burn_in, record=False)
    left = int(n_ticks)
    while left > 0:
        k = min(chunk_ticks, left)
        yield eng.advance(k)
        left -= k


def write_path_csv(path, fh):
    """Dump a path as ``tick,n_f,xi`` rows."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["tick", "n_f", "xi"])
    for i, (a, b) in enumerate(zip(path.n_f, path.xi)):
        w.writerow([i, f"{a:.9g}", f"{b:.9g}"])


def read_path_csv(fh, params=None):
    params = params if params is not None else ModelParams()
    reader = csv.reader(fh)
    header = next(reader, None)
    if header != ["tick", "n_f", "xi"]:
        raise DataError(f"expected header tick,n_f,xi, got {header!r}")
    nf, xi = [], []
    for lineno, row in enumerate(reader, start=2):
        try:
            _, a, b = row
            nf.append(float(a))
            xi.append(float(b))
        except ValueError as exc:
            raise DataError(f"line {lineno}: malformed row {row!r}") from exc
    return EnginePath(np.array(nf), np.array(xi), params)
