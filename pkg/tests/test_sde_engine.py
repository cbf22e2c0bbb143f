import math

import numpy as np
import pytest
from scipy import integrate, stats as sps

from herdsim import sde_engine as se
from herdsim import stats
from herdsim.errors import DomainError, HerdsimError
from herdsim.params import ModelParams

from conftest import coarse_params


# ---------------------------------------------------------------------------
# coefficient functions


def test_inv_tau_examples(defaults):
    assert se.inv_tau(0.5, defaults) == pytest.approx(2.89)
    assert se.inv_tau(1 - 1e-12, defaults) == pytest.approx(1.0)
    p = defaults.with_(a_tau=0.0)
    assert se.inv_tau(0.01, p) == 1.0
    assert se.inv_tau(0.99, p) == 1.0


def test_inv_tau_is_at_least_one(defaults):
    n = np.linspace(0.001, 0.999, 101)
    assert np.all(se.inv_tau(n, defaults) >= 1.0)


@pytest.mark.parametrize("n", [0.0, 1.0, -0.1, 1.5])
def test_inv_tau_domain(defaults, n):
    with pytest.raises(DomainError):
        se.inv_tau(n, defaults)


def test_drift_nf_examples(defaults):
    assert se.drift_nf(1.1 / 4.1, defaults) == pytest.approx(0.0, abs=1e-12)
    assert se.drift_nf(0.5, defaults.with_(eps_fc=1.1)) == pytest.approx(0.0, abs=1e-12)
    assert se.drift_nf(0.5, defaults) == pytest.approx(-2.7455)


def test_diffusion_nf_examples(defaults):
    assert se.diffusion_nf(0.0, defaults) == 0.0
    assert se.diffusion_nf(1.0, defaults) == 0.0
    assert se.diffusion_nf(0.5, defaults.with_(a_tau=0.0)) == pytest.approx(0.70711, abs=1e-5)
    assert se.diffusion_nf(0.5, defaults) == pytest.approx(1.20208, abs=1e-5)
    with pytest.raises(DomainError):
        se.diffusion_nf(1.2, defaults)


def test_xi_coefficients(defaults):
    assert se.drift_xi(0.0, 0.5, defaults) == 0.0
    assert se.diffusion_xi(1.0, 0.5, defaults) == 0.0
    assert se.diffusion_xi(-1.0, 0.5, defaults) == 0.0
    assert se.drift_xi(0.1, 0.5, defaults) == pytest.approx(-1734.0)
    with pytest.raises(DomainError):
        se.drift_xi(1.5, 0.5, defaults)
    with pytest.raises(DomainError):
        se.drift_xi(0.1, 0.0, defaults)


# ---------------------------------------------------------------------------
# stepping


def test_noiseless_fixed_point_is_unchanged(defaults, rng):
    s = se.AgentState(defaults.nf_fixed_point, 0.0)
    out = se.step(s, defaults.tick_scaled, rng, defaults, noise_scale=0.0)
    assert out.n_f == pytest.approx(s.n_f, abs=1e-15)
    assert out.xi == 0.0


def test_step_rejects_bad_input(defaults, rng):
    with pytest.raises(DomainError):
        se.step(se.AgentState(0.3, 0.0), 0.0, rng, defaults)
    with pytest.raises(DomainError):
        se.step(se.AgentState(1.0, 0.0), 1e-3, rng, defaults)


def test_step_keeps_state_inside_open_domain(defaults):
    rng = np.random.default_rng(7)
    s = se.AgentState(0.999, 0.999)
    for _ in range(200):
        s = se.step(s, 1e-2, rng, defaults)
        assert 0.0 < s.n_f < 1.0
        assert -1.0 < s.xi < 1.0


def test_identical_seeds_give_identical_paths():
    p = ModelParams(seed=99)
    a = se.simulate(p, 5000, burn_in=100)
    b = se.simulate(p, 5000, burn_in=100)
    assert np.array_equal(a.n_f, b.n_f) and np.array_equal(a.xi, b.xi)
    c = se.simulate(p.with_(seed=100), 5000, burn_in=100)
    assert not np.array_equal(a.n_f, c.n_f)


def test_engine_streams_match_simulate():
    p = ModelParams(seed=3)
    full = se.simulate(p, 2500, burn_in=50)
    parts = list(se.iter_paths(p, 2500, chunk_ticks=1000, burn_in=50))
    assert [len(x) for x in parts] == [1000, 1000, 500]
    assert np.array_equal(np.concatenate([x.n_f for x in parts]), full.n_f)
    assert np.array_equal(np.concatenate([x.xi for x in parts]), full.xi)


def test_simulate_sizes():
    p = ModelParams()
    path = se.simulate(p, 1, burn_in=0)
    assert len(path) == 1
    assert isinstance(path[0], se.AgentState)
    with pytest.raises(DomainError):
        se.simulate(p, 0)
    with pytest.raises(HerdsimError):
        se.simulate(p, 11, max_ticks=10)


def test_initial_state_kinds(defaults):
    s = se.initial_state(defaults)
    assert s.n_f == pytest.approx(1.1 / 4.1) and s.xi == 0.0
    s = se.initial_state(defaults, "stationary", np.random.default_rng(0))
    s.check()
    with pytest.raises(DomainError):
        se.initial_state(defaults, "bogus")


def test_path_csv_roundtrip(tmp_path):
    p = ModelParams(seed=1)
    path = se.simulate(p, 20, burn_in=10)
    fn = tmp_path / "path.csv"
    with open(fn, "w", newline="") as fh:
        se.write_path_csv(path, fh)
    assert fn.read_text().splitlines()[0] == "tick,n_f,xi"
    with open(fn) as fh:
        back = se.read_path_csv(fh, p)
    np.testing.assert_allclose(back.n_f, path.n_f, rtol=1e-8)
    np.testing.assert_allclose(back.xi, path.xi, rtol=1e-8)


# ---------------------------------------------------------------------------
# stationary laws


def _feedback_cdf(p):
    grid = np.linspace(0.0, 1.0, 40001)
    inner = grid[1:-1]
    dens = np.zeros_like(grid)
    dens[1:-1] = ((1 + p.a_tau * (1 - inner) / inner) ** (-p.alpha)
                  * inner ** (p.eps_cf - 1) * (1 - inner) ** (p.eps_fc - 1))
    cdf = integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    return grid, dens, cdf / cdf[-1]


def test_stationary_beta_law_without_feedback():
    p = coarse_params(tick=0.02, a_tau=0.0, H=1.0, seed=21)
    path = se.simulate(p, 1_000_000, burn_in=10_000)
    ks = sps.kstest(path.n_f, sps.beta(p.eps_cf, p.eps_fc).cdf).statistic
    assert ks < 0.01
    assert path.n_f.mean() == pytest.approx(1.1 / 4.1, abs=0.005)
    assert path.xi.var() == pytest.approx(1 / 7, abs=0.005)


def test_stationary_law_with_feedback():
    p = coarse_params(tick=0.003, H=1.0, seed=4)
    path = se.simulate(p, 1_000_000, burn_in=10_000)
    grid, _, cdf = _feedback_cdf(p)
    ks = sps.kstest(path.n_f, lambda v: np.interp(v, grid, cdf)).statistic
    assert ks < 0.02


def _x_density(p, x):
    return ((1 + p.a_tau * x) ** (-p.alpha) * x ** (p.eps_fc - 1)
            * (1 + x) ** (-(p.eps_cf + p.eps_fc)))


def test_x_tail_follows_exact_density():
    # The exact density in x reaches slope -(eps_cf+alpha+1) only for x >> 1;
    # over [3, 30] the bin-averaged slope is near -3.4.
    p = coarse_params(tick=0.003, H=1.0, seed=4)
    path = se.simulate(p, 1_000_000, burn_in=10_000)
    edges = np.logspace(-1, 2, 31)
    sim = stats.log_binned_pdf(path.x[path.x > 0], edges=edges)
    mass = np.array([integrate.quad(lambda v: _x_density(p, v), lo, hi)[0]
                     for lo, hi in zip(edges[:-1], edges[1:])])
    ref = stats.BinnedDensity(edges, mass / np.diff(edges), np.full(len(mass), 10**6))
    s_sim = stats.tail_exponent_fit(sim, 3, 30).slope
    s_ref = stats.tail_exponent_fit(ref, 3, 30).slope
    assert s_ref == pytest.approx(-3.41, abs=0.05)
    assert s_sim == pytest.approx(s_ref, abs=0.1)
    far = np.logspace(3, 4, 20)
    local = np.polyfit(np.log(far), np.log(_x_density(p, far)), 1)[0]
    assert local == pytest.approx(-(p.eps_cf + p.alpha + 1), abs=0.01)


def test_xi_is_symmetric():
    p = coarse_params(a_tau=0.0, H=1.0, seed=8)
    path = se.simulate(p, 500_000, burn_in=10_000)
    xi = path.xi[::50]  # roughly independent draws
    se_mean = xi.std() / math.sqrt(len(xi))
    assert abs(xi.mean()) < 3 * se_mean
    half = len(xi) // 2
    assert sps.ks_2samp(xi[:half], -xi[half:]).pvalue > 0.05


@pytest.mark.slow
def test_substep_refinement_changes_mean_little():
    # feedback on, where the cap binds; two seeds pooled (about 5 minutes)
    means = {}
    for cap in (se.SUBSTEP_CAP, se.SUBSTEP_CAP / 2):
        means[cap] = np.mean([se.simulate(coarse_params(tick=0.25, H=1.0, seed=s), 200_000,
                                          burn_in=1000, substep_cap=cap).n_f.mean()
                              for s in (31, 32)])
    a, b = means.values()
    assert abs(a - b) / a < 0.002

