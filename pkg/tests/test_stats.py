import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from herdsim import stats
from herdsim.errors import DataError, DomainError, InsufficientDataError


def test_extract_intervals_example():
    iv = stats.extract_intervals(np.array([2.5, 0.1, 0.3, 2.7, 0.2, 3.1]), 2.0)
    np.testing.assert_array_equal(iv.intervals, [3, 2])
    assert iv.mean_T == 2.5
    assert stats.extract_intervals(np.array([2.5, 0.1]), 5.0).empty
    # ties are not exceedances
    assert stats.extract_intervals(np.array([2.0, 3.0, 2.0, 3.0]), 2.0).intervals.tolist() == [2]
    assert stats.extract_intervals(np.array([3.0, 3.0]), 2.0).intervals.tolist() == [1]


def test_gaussian_mean_interval(rng):
    iv = stats.extract_intervals(np.abs(rng.standard_normal(2_000_000)), 2.0)
    expected = 1 / stats.gaussian_exceedance(2.0)
    assert expected == pytest.approx(21.98, abs=0.01)
    assert iv.mean_T == pytest.approx(expected, rel=0.02)


def test_interval_series_rejects_zero():
    with pytest.raises(DomainError):
        stats.IntervalSeries([1, 0], 2.0)


def test_scaled_pdf_equal_intervals():
    d = stats.scaled_interval_pdf(stats.IntervalSeries(np.full(200, 7), 2.0))
    occupied = np.flatnonzero(d.counts)
    assert len(occupied) == 1
    k = occupied[0]
    assert d.bin_edges[k] <= 1.0 < d.bin_edges[k + 1]
    assert np.sum(d.density * d.widths) == pytest.approx(1.0)


def test_scaled_pdf_needs_samples():
    with pytest.raises(InsufficientDataError):
        stats.scaled_interval_pdf(stats.IntervalSeries(np.ones(99, dtype=int), 2.0))


def test_scaled_pdf_normalized(rng):
    iv = stats.IntervalSeries(rng.geometric(0.05, 50_000), 2.0)
    d = stats.scaled_interval_pdf(iv)
    assert np.sum(d.density * d.widths) == pytest.approx(1.0, abs=1e-3)


def test_reshuffled_intervals_are_geometric(rng):
    q = 2.0
    x = np.abs(rng.standard_normal(500_000)) * np.exp(np.cumsum(rng.standard_normal(500_000)) * 0.01)
    x = x / x.std()
    shuffled = stats.reshuffle(x, rng)
    iv = stats.extract_intervals(shuffled, q)
    p = np.mean(shuffled > q)
    assert stats.geometric_ks(iv, p)[1] > 0.01


def test_geometric_scaled_density_is_exponential(rng):
    p = stats.gaussian_exceedance(2.0)
    iv = stats.IntervalSeries(rng.geometric(p, 100_000), 2.0)
    d = stats.scaled_interval_pdf(iv)
    assert stats.geometric_ks(iv, p)[1] > 0.01
    # <T> P(T) ~ exp(-u) for small p
    sel = (d.counts > 100) & (d.centers > 0.3) & (d.centers < 3)
    np.testing.assert_allclose(d.density[sel], np.exp(-d.centers[sel]), rtol=0.1)


def test_quantile_nearest_rank():
    assert stats.quantile(np.arange(1, 9), 1 / 8) == 1
    assert stats.quantile(np.arange(1, 9), 7 / 8) == 7
    assert stats.quantile([5, 1, 3], 1.0) == 5
    assert stats.quantile([5, 1, 3], 0.0) == 1
    with pytest.raises(InsufficientDataError):
        stats.quantile([], 0.5)
    with pytest.raises(DomainError):
        stats.quantile([1], 1.5)


def test_conditional_alternating():
    iv = stats.IntervalSeries(np.tile([1, 100], 500), 2.0)
    low = stats.conditional_successors(iv, "low")
    assert set(low.tolist()) == {100}
    high = stats.conditional_successors(iv, "high")
    assert set(high.tolist()) == {1}


def test_conditional_iid_indistinguishable(rng):
    iv = stats.IntervalSeries(rng.geometric(0.05, 40_000), 2.0)
    low = stats.conditional_successors(iv, "low")
    high = stats.conditional_successors(iv, "high")
    assert sps.ks_2samp(low, high).pvalue > 0.05
    d = stats.conditional_interval_pdf(iv, "low")
    assert d.counts.sum() == len(low)


def test_conditional_needs_samples():
    with pytest.raises(InsufficientDataError):
        stats.conditional_successors(stats.IntervalSeries(np.ones(799, dtype=int), 2.0), "low")
    with pytest.raises(DomainError):
        stats.conditional_successors(stats.IntervalSeries(np.ones(900, dtype=int), 2.0), "mid")


def test_successor_pairs_respect_breaks():
    a = stats.IntervalSeries([1, 2, 3], 2.0)
    b = stats.IntervalSeries([4, 5], 2.0)
    c = stats.IntervalSeries.concat([a, b])
    prev, nxt = c.successor_pairs()
    assert list(zip(prev, nxt)) == [(1, 2), (2, 3), (4, 5)]
    with pytest.raises(DomainError):
        stats.IntervalSeries.concat([a, stats.IntervalSeries([1], 3.0)])


def test_log_binned_uniform(rng):
    x = rng.uniform(1, 10, 1_000_000)
    d = stats.log_binned_pdf(x, n_bins=20)
    np.testing.assert_allclose(d.density, 1 / 9, rtol=0.05)
    assert np.sum(d.density * d.widths) == pytest.approx(1.0, abs=1e-3)


def test_log_binned_power_law(rng):
    lam = 4.1
    u = rng.uniform(size=2_000_000)
    x = (1 - u) ** (-1 / (lam - 1))  # inverse CDF of x^-lam on [1, inf)
    d = stats.log_binned_pdf(x, edges=np.logspace(0, 2, 31))
    fit = stats.tail_exponent_fit(d, 1.0, 30.0, min_count=20)
    assert fit.slope == pytest.approx(-lam, abs=0.1)


def test_log_binned_single_value():
    d = stats.log_binned_pdf(np.full(50, 3.0))
    assert (d.counts > 0).sum() == 1
    assert np.sum(d.density * d.widths) == pytest.approx(1.0)


def test_log_binned_errors():
    with pytest.raises(DataError):
        stats.log_binned_pdf([1.0, 0.0])
    with pytest.raises(DomainError):
        stats.log_binned_pdf([1.0, 2.0], n_bins=5)
    with pytest.raises(InsufficientDataError):
        stats.log_binned_pdf([])


def test_psd_sinusoid():
    dt = 0.01
    t = np.arange(2 ** 16) * dt
    f0 = 3.7
    d = stats.psd(np.sin(2 * np.pi * f0 * t), dt)
    k = np.argmax(d.density)
    assert d.bin_edges[k] <= f0 < d.bin_edges[k + 1]


def test_psd_white_noise(rng):
    d = stats.psd(rng.standard_normal(2 ** 20), 1.0)
    lo, hi = stats.central_decades(d)
    assert stats.tail_exponent_fit(d, lo, hi).slope == pytest.approx(0.0, abs=0.1)
    # two-sided white noise of unit variance has one-sided level 2 dt
    assert np.median(d.density) == pytest.approx(2.0, rel=0.05)


def test_psd_length_error():
    with pytest.raises(InsufficientDataError):
        stats.psd(np.zeros(32 * 64 - 1), 1.0)


def _exact(slope, c=1.0):
    edges = np.logspace(0, 3, 31)
    centers = np.sqrt(edges[:-1] * edges[1:])
    return stats.BinnedDensity(edges, c * centers ** slope, np.full(30, 100), "psd")


@pytest.mark.parametrize("slope", [-1.5, -4.1])
def test_tail_fit_exact(slope):
    fit = stats.tail_exponent_fit(_exact(slope), 1, 1000)
    assert fit.slope == pytest.approx(slope, abs=1e-12)
    assert fit.stderr < 1e-10
    assert stats.tail_exponent_fit(_exact(slope, 37.0), 1, 1000).slope == pytest.approx(fit.slope)


def test_tail_fit_needs_bins():
    with pytest.raises(InsufficientDataError):
        stats.tail_exponent_fit(_exact(-1.0), 1, 1.5)


def test_central_decades():
    lo, hi = stats.central_decades(_exact(-1))
    assert np.log10(hi / lo) == pytest.approx(2.0)
    assert np.sqrt(lo * hi) == pytest.approx(np.sqrt(_exact(-1).centers[0] * _exact(-1).centers[-1]))


def test_reshuffle(rng):
    x = np.cumsum(rng.standard_normal(20_000))
    y = stats.reshuffle(x, rng)
    np.testing.assert_array_equal(np.sort(x), np.sort(y))
    z = (y - y.mean()) / y.std()
    assert abs(np.mean(z[1:] * z[:-1])) < 3 / np.sqrt(len(z))


def _pdf(samples, edges=np.logspace(0, 2, 21)):
    return stats.log_binned_pdf(samples, edges=edges)


def test_merge_identity_and_split(rng):
    x = rng.uniform(1, 100, 10_000)
    full = _pdf(x)
    empty = full.empty_like()
    m = stats.merge(full, empty)
    np.testing.assert_array_equal(m.counts, full.counts)
    np.testing.assert_allclose(m.density, full.density)
    halves = stats.merge(_pdf(x[:4000]), _pdf(x[4000:]))
    np.testing.assert_array_equal(halves.counts, full.counts)
    np.testing.assert_allclose(halves.density, full.density, rtol=1e-12)


def test_merge_psd_halves(rng):
    a = stats.psd(rng.standard_normal(4096), 1.0, n_segments=16)
    b = stats.psd(rng.standard_normal(4096), 1.0, n_segments=16, edges=a.bin_edges)
    m = stats.merge(a, b)
    np.testing.assert_array_equal(m.counts, a.counts + b.counts)
    sel = m.counts > 0
    np.testing.assert_allclose(m.density[sel], ((a.density + b.density) / 2)[sel])


def test_merge_edge_mismatch():
    with pytest.raises(DomainError):
        stats.merge(_pdf([2.0, 3.0]), _pdf([2.0, 3.0], np.logspace(0, 2, 11)))


counts_st = st.lists(st.integers(0, 50), min_size=10, max_size=10)


def _from_counts(c):
    edges = np.logspace(0, 1, 11)
    c = np.asarray(c)
    n = c.sum()
    dens = c / (n * np.diff(edges)) if n else np.zeros(10)
    return stats.BinnedDensity(edges, dens, c, "pdf")


@settings(max_examples=60, deadline=None)
@given(counts_st, counts_st, counts_st)
def test_merge_commutative_associative(a, b, c):
    A, B, C = map(_from_counts, (a, b, c))
    ab, ba = stats.merge(A, B), stats.merge(B, A)
    np.testing.assert_array_equal(ab.counts, ba.counts)
    np.testing.assert_allclose(ab.density, ba.density)
    left, right = stats.merge(ab, C), stats.merge(A, stats.merge(B, C))
    np.testing.assert_array_equal(left.counts, right.counts)
    np.testing.assert_allclose(left.density, right.density)


def test_log_distance():
    a = _exact(-1.5)
    assert stats.log_distance(a, _exact(-1.5)) == pytest.approx(0.0, abs=1e-12)
    assert stats.log_distance(a, _exact(-1.5, 10.0)) == pytest.approx(1.0)


def test_discrete_ks_geometric(rng):
    T = rng.geometric(0.1, 20_000)
    assert stats.geometric_ks(T, 0.1)[1] > 0.01
    assert stats.geometric_ks(T, 0.12)[1] < 0.01
