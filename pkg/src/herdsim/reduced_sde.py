"""Two-parameter nonlinear SDE generating power-law PDF and PSD.

    dx = (eta - lam/2) x^(2 eta - 1) dt + x^eta dW

restricted to ``[x_min, x_max]`` by reflection.  Inside the boundaries the
stationary density is ``x^-lam`` and the spectrum is ``1/f^beta`` with
``beta = 1 + (lam - 3) / (2 (eta - 1))``.  Rescaling ``x -> a x`` (and the
boundaries with it) is equivalent to rescaling time by ``a^(2 (eta - 1))``.
"""

import csv
import json
import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DomainError, StepCollapseError

MAX_STEPS_PER_SAMPLE = 50_000_000


@dataclass(frozen=True)
class ReducedParams:
    eta: float = 2.5
    lam: float = 4.1
    x_min: float = 1.0
    x_max: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if self.eta == 1.0:
            raise DomainError("eta must differ from 1")
        if not 1.0 <= self.x_min < self.x_max:
            # x_min = 1 is the documented default boundary
            raise DomainError(f"need 1 <= x_min < x_max, got [{self.x_min}, {self.x_max}]")

    @property
    def time_exponent(self):
        """Exponent ``2 (eta - 1)`` linking variable and time scaling."""
        return 2.0 * (self.eta - 1.0)


@dataclass(frozen=True)
class ExponentTriple:
    eta: float
    lam: float
    beta: float

    @classmethod
    def from_eta_lam(cls, eta, lam):
        return cls(eta, lam, 1.0 + (lam - 3.0) / (2.0 * (eta - 1.0)))


def exponents_from_params(eps_cf, alpha):
    """Power-law exponents of the long-term ratio ``x = (1 - n_f) / n_f``.

    >>> exponents_from_params(1.1, 2.0)
    ExponentTriple(eta=2.5, lam=4.1, beta=1.3666666666666667)
    """
    if alpha < 0 or eps_cf <= 0:
        raise DomainError(f"need alpha >= 0 and eps_cf > 0, got {alpha}, {eps_cf}")
    eta = (3.0 + alpha) / 2.0
    lam = eps_cf + alpha + 1.0
    beta = 1.0 + (eps_cf + alpha - 2.0) / (1.0 + alpha)
    return ExponentTriple(eta, lam, beta)


def drift(x, params):
    """Deterministic part ``(eta - lam/2) x^(2 eta - 1)``."""
    x = np.asarray(x, dtype=float)
    return (params.eta - 0.5 * params.lam) * x ** (2.0 * params.eta - 1.0)


def analytic_stationary_pdf(x, params):
    """Normalized ``x^-lam`` density on ``[x_min, x_max]``."""
    x = np.asarray(x, dtype=float)
    lo, hi, lam = params.x_min, params.x_max, params.lam
    if np.any((x < lo) | (x > hi)):
        raise DomainError(f"x outside [{lo}, {hi}]")
    if lam == 1.0:
        return 1.0 / (x * math.log(hi / lo))
    return (1.0 - lam) * x ** (-lam) / (hi ** (1.0 - lam) - lo ** (1.0 - lam))


@numba.njit(cache=True)
def _integrate(x, t, rng, n_samples, dt_sample, eta, lam, lo, hi, kappa, max_steps, out):
    a = eta - 0.5 * lam
    p_drift = 2.0 * eta - 1.0
    p_step = 2.0 * (eta - 1.0)
    steps = 0
    for i in range(n_samples):
        t_target = t + dt_sample
        k = 0
        while t < t_target:
            h = kappa / x ** p_step
            if t + h >= t_target:
                h = t_target - t
                t = t_target
            else:
                t += h
            x = x + a * x ** p_drift * h + x ** eta * math.sqrt(h) * rng.standard_normal()
            if x < lo:
                x = 2.0 * lo - x
            elif x > hi:
                x = 2.0 * hi - x
            x = min(max(x, lo), hi)
            k += 1
            if k > max_steps:
                return x, t, -1
        steps += k
        out[i] = x
    return x, t, steps


@dataclass
class ReducedRun:
    t: np.ndarray
    x: np.ndarray
    params: ReducedParams
    dt_sample: float
    n_steps: int


def simulate_reduced(params, n_samples, dt_sample=1e-3, kappa=1e-3, x0=None,
                     burn_in_time=1.0, max_steps_per_sample=MAX_STEPS_PER_SAMPLE, rng=None):
    """Integrate the SDE and return ``n_samples`` values spaced by ``dt_sample``.

    The internal step is ``kappa / x^(2 (eta - 1))``, which keeps the relative
    noise increment near ``sqrt(kappa)`` at every level of ``x``.

    Raises
    ------
    StepCollapseError
        If one sample interval needs more than ``max_steps_per_sample`` steps.
    """
    if n_samples <= 0:
        raise DomainError(f"n_samples must be > 0, got {n_samples}")
    rng = rng if rng is not None else np.random.default_rng(params.seed)
    x = float(params.x_min if x0 is None else x0)
    args = (params.eta, params.lam, params.x_min, params.x_max, kappa, max_steps_per_sample)
    t = 0.0
    if burn_in_time > 0:
        n_burn = max(1, int(round(burn_in_time / dt_sample)))
        x, t, m = _integrate(x, t, rng, n_burn, dt_sample, *args, np.empty(n_burn))
        if m < 0:
            raise StepCollapseError("step count exceeded the cap during burn-in")
    out = np.empty(int(n_samples))
    t0 = t
    x, t, m = _integrate(x, t, rng, int(n_samples), dt_sample, *args, out)
    if m < 0:
        raise StepCollapseError(
            f"more than {max_steps_per_sample} internal steps in one sample interval")
    times = t0 + dt_sample * np.arange(1, len(out) + 1)
    return ReducedRun(times, out, params, dt_sample, m)


def write_reduced_csv(run, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t", "x"])
    for a, b in zip(run.t, run.x):
        w.writerow([f"{a:.9g}", f"{b:.9g}"])


def write_summary_json(summary, fh):
    json.dump(summary, fh, indent=2, sort_keys=True)
    fh.write("\n")
