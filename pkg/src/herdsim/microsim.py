"""Event-driven simulation of the finite-N three-state herding model.

Agents are fundamentalists (f), optimists (o) or pessimists (p).  In scaled
time the per-agent switching rate ``i -> j`` is ``eps_ij + H_ij * N_j``, where
the herding term counts peers in the target state.  The trading-activity
factor ``1/tau(N_f/N)`` multiplies all six channels, so the population
``n_f = N_f/N`` follows the same macroscopic equation as the SDE engine.

This is the brute-force reference for :mod:`herdsim.sde_engine`.
"""

import csv
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import AbsorbingStateError, DomainError
from .params import ModelParams

# channel order used by RateTable.as_array and the compiled kernel
CHANNELS = ("f_o", "f_p", "o_f", "p_f", "o_p", "p_o")
# (source, target) state indices for each channel: 0=f, 1=o, 2=p
_MOVES = np.array([[0, 1], [0, 2], [1, 0], [2, 0], [1, 2], [2, 1]], dtype=np.int64)


@dataclass(frozen=True)
class MicroState:
    N_f: int
    N_o: int
    N_p: int
    t_scaled: float = 0.0

    def __post_init__(self):
        if min(self.N_f, self.N_o, self.N_p) < 0:
            raise DomainError(f"negative agent count in {self}")

    @property
    def N(self):
        return self.N_f + self.N_o + self.N_p

    @property
    def n_f(self):
        return self.N_f / self.N

    @property
    def xi(self):
        nc = self.N_o + self.N_p
        return (self.N_o - self.N_p) / nc if nc else 0.0


@dataclass(frozen=True)
class RateTable:
    f_o: float
    f_p: float
    o_f: float
    p_f: float
    o_p: float
    p_o: float

    def as_array(self):
        return np.array([getattr(self, c) for c in CHANNELS])

    @property
    def total(self):
        return float(self.as_array().sum())


@numba.njit(cache=True, inline="always")
def _rates(Nf, No, Np, N, eps_cf, eps_fc, eps_cc, H, a_tau, alpha, out):
    if a_tau > 0.0 and Nf > 0:
        it = (1.0 + a_tau * (N - Nf) / Nf) ** alpha
    elif a_tau > 0.0:
        # n_f -> 0 limit of the activity factor is unbounded; cap at one fundamentalist
        it = (1.0 + a_tau * (N - 1.0)) ** alpha
    else:
        it = 1.0
    half = 0.5 * eps_fc
    out[0] = Nf * (half + No) * it
    out[1] = Nf * (half + Np) * it
    out[2] = No * (eps_cf + Nf) * it
    out[3] = Np * (eps_cf + Nf) * it
    out[4] = No * H * (eps_cc + Np) * it
    out[5] = Np * H * (eps_cc + No) * it
    return out[0] + out[1] + out[2] + out[3] + out[4] + out[5]


def transition_rates(state, params, with_activity=False):
    """Total rate of each of the six one-agent moves, in scaled time.

    By default these are the bare herding rates.  ``with_activity=True``
    multiplies all six by the trading-activity factor, which is what the
    simulation uses.
    """
    out = np.empty(6)
    a_tau = params.a_tau if with_activity else 0.0
    _rates(state.N_f, state.N_o, state.N_p, state.N, params.eps_cf, params.eps_fc,
           params.eps_cc, params.H, a_tau, params.alpha, out)
    return RateTable(*(float(v) for v in out))


@numba.njit(cache=True)
def _run(counts, t, rng, n_events, t_grid, N, eps_cf, eps_fc, eps_cc, H, a_tau, alpha,
         out_nf, out_xi, out_valid):
    """Run events, sampling the piecewise-constant state at ``t_grid`` times.

    Stops after ``n_events`` events or once the grid is filled, whichever
    comes first.  Returns (events done, grid points filled, time).
    """
    rates = np.empty(6)
    n_grid = len(t_grid)
    g = 0
    while g < n_grid and t_grid[g] < t:
        g += 1
    ev = 0
    while ev < n_events and g < n_grid:
        total = _rates(counts[0], counts[1], counts[2], N, eps_cf, eps_fc, eps_cc,
                       H, a_tau, alpha, rates)
        if total <= 0.0:
            return -1, g, t
        t_next = t - math.log(1.0 - rng.random()) / total
        # record the state holding over [t, t_next)
        nc = counts[1] + counts[2]
        while g < n_grid and t_grid[g] < t_next:
            out_nf[g] = counts[0] / N
            if nc > 0:
                out_xi[g] = (counts[1] - counts[2]) / nc
                out_valid[g] = True
            else:
                out_xi[g] = 0.0
                out_valid[g] = False
            g += 1
        if g == n_grid:
            # state holds past the last grid time; memoryless restart is exact
            return ev, g, t_grid[n_grid - 1]
        u = rng.random() * total
        k = 0
        acc = rates[0]
        while acc <= u and k < 5:
            k += 1
            acc += rates[k]
        # guard against round-off landing on an empty channel
        while rates[k] == 0.0:
            k -= 1
        counts[_MOVES[k, 0]] -= 1
        counts[_MOVES[k, 1]] += 1
        t = t_next
        ev += 1
    return ev, g, t


def gillespie_step(state, rng, params=None):
    """Fire one event; return ``(waiting_time, new_state)``."""
    params = params if params is not None else ModelParams()
    rates = transition_rates(state, params, with_activity=True).as_array()
    total = rates.sum()
    if total <= 0:
        raise AbsorbingStateError(f"total rate is zero in {state}")
    wait = rng.exponential(1.0 / total)
    k = int(np.searchsorted(np.cumsum(rates), rng.random() * total, side="right"))
    k = min(k, 5)
    while rates[k] == 0:
        k -= 1
    counts = [state.N_f, state.N_o, state.N_p]
    src, dst = _MOVES[k]
    counts[src] -= 1
    counts[dst] += 1
    return wait, MicroState(*counts, t_scaled=state.t_scaled + wait)


@dataclass
class MicroSeries:
    """Grid samples of a microscopic run; ``valid`` is False where N_o+N_p=0."""

    t_scaled: np.ndarray
    n_f: np.ndarray
    xi: np.ndarray
    valid: np.ndarray
    n_events: int
    final: MicroState


def default_initial(N, params):
    """Counts nearest the macroscopic rest point with the chartists split evenly."""
    Nf = int(round(N * params.nf_fixed_point))
    Nf = min(max(Nf, 0), N)
    No = (N - Nf) // 2
    return MicroState(Nf, No, N - Nf - No)


def simulate_micro(N, params, n_events, dt_sample=0.01, t_max=None, initial=None,
                   burn_in_time=0.0, rng=None):
    """Simulate ``N`` agents and sample ``(n_f, xi)`` every ``dt_sample``.

    The run ends after ``n_events`` events or at ``t_max`` (scaled time after
    burn-in), whichever is first.  Samples are state values held between
    events, i.e. time-weighted.
    """
    if N < 3:
        raise DomainError(f"N must be >= 3, got {N}")
    rng = rng if rng is not None else np.random.default_rng(np.random.SeedSequence(params.seed).spawn(3)[2])
    state = initial if initial is not None else default_initial(N, params)
    if state.N != N:
        raise DomainError(f"initial state has {state.N} agents, expected {N}")
    counts = np.array([state.N_f, state.N_o, state.N_p], dtype=np.int64)
    args = (N, params.eps_cf, params.eps_fc, params.eps_cc, params.H, params.a_tau, params.alpha)
    t = state.t_scaled
    if burn_in_time > 0:
        grid = np.array([t + burn_in_time])
        scratch = (np.empty(1), np.empty(1), np.empty(1, dtype=np.bool_))
        ev, _, t = _run(counts, t, rng, np.iinfo(np.int64).max, grid, *args, *scratch)
        if ev < 0:
            raise AbsorbingStateError("absorbing state reached during burn-in")
    if t_max is None:
        # enough grid points for the expected number of events
        rate0 = transition_rates(MicroState(*counts), params, with_activity=True).total
        t_max = 4.0 * n_events / max(rate0, 1e-300)
    n_grid = int(math.floor(t_max / dt_sample))
    t_grid = t + dt_sample * np.arange(1, n_grid + 1)
    out_nf = np.empty(n_grid)
    out_xi = np.empty(n_grid)
    out_valid = np.empty(n_grid, dtype=np.bool_)
    ev, g, t = _run(counts, t, rng, int(n_events), t_grid, *args, out_nf, out_xi, out_valid)
    if ev < 0:
        raise AbsorbingStateError("simulation reached a state with zero total rate")
    final = MicroState(int(counts[0]), int(counts[1]), int(counts[2]), t_scaled=float(t))
    return MicroSeries(t_grid[:g], out_nf[:g], out_xi[:g], out_valid[:g], ev, final)


def write_micro_csv(series, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t_scaled", "n_f", "xi", "valid"])
    for row in zip(series.t_scaled, series.n_f, series.xi, series.valid):
        w.writerow([f"{row[0]:.9g}", f"{row[1]:.9g}", f"{row[2]:.9g}", int(row[3])])
