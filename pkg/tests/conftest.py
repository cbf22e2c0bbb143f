import functools
import time

import numpy as np
import pytest
from scipy import integrate

from herdsim import microsim
from herdsim.params import ModelParams

# one tick of this many scaled time units; n_f then decorrelates in a few hundred ticks
COARSE_TICK = 0.05


def coarse_params(tick=COARSE_TICK, **kw):
    """Parameters whose tick is ``tick`` scaled time units."""
    return ModelParams(h_rate=tick / (86400.0 * (1.0 / 390.0)), **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def defaults():
    return ModelParams()


def exact_nf_moments(p):
    """Mean and variance of the exact stationary n_f law with feedback."""
    def dens(n):
        return (1 + p.a_tau * (1 - n) / n) ** (-p.alpha) * n ** (p.eps_cf - 1) \
            * (1 - n) ** (p.eps_fc - 1)
    z = integrate.quad(dens, 0, 1)[0]
    m = integrate.quad(lambda n: n * dens(n), 0, 1)[0] / z
    m2 = integrate.quad(lambda n: n * n * dens(n), 0, 1)[0] / z
    return m, m2 - m * m


@functools.lru_cache(maxsize=None)
def micro_reference():
    """N=1000 agent run with feedback off and its wall time in seconds."""
    p = ModelParams(a_tau=0.0, H=1.0, seed=17)
    t0 = time.perf_counter()
    run = microsim.simulate_micro(1000, p, 10**12, dt_sample=0.05, t_max=1000.0,
                                  burn_in_time=5.0)
    return run, time.perf_counter() - t0
