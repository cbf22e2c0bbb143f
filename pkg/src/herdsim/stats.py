"""Estimators for return-interval, density and spectral statistics.

All densities are returned as :class:`BinnedDensity` on logarithmic bins.
Densities built on the same edges can be merged exactly, which is how
results from independent seeds are combined.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .errors import DataError, DomainError, InsufficientDataError

MIN_SCALED_INTERVALS = 100
MIN_CONDITIONAL_INTERVALS = 800
MIN_PER_SIDE = 100
MIN_PSD_SEGMENT = 64


@dataclass
class BinnedDensity:
    """Histogram-style estimate on strictly increasing edges.

    ``kind="pdf"``: ``density`` integrates to one over the edges.
    ``kind="psd"``: ``density`` is the mean power of the frequencies in each
    bin and ``counts`` is how many frequencies were averaged.
    """

    bin_edges: np.ndarray
    density: np.ndarray
    counts: np.ndarray
    kind: str = "pdf"
    centers: np.ndarray = None

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        self.counts = np.asarray(self.counts)
        if self.kind not in ("pdf", "psd"):
            raise DomainError(f"unknown density kind {self.kind!r}")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise DomainError("bin edges must be strictly increasing")
        if self.centers is None:
            self.centers = np.sqrt(self.bin_edges[:-1] * self.bin_edges[1:])
        else:
            self.centers = np.asarray(self.centers, dtype=float)

    @property
    def widths(self):
        return np.diff(self.bin_edges)

    @property
    def occupied(self):
        return self.counts > 0

    def empty_like(self):
        return BinnedDensity(self.bin_edges, np.zeros_like(self.density),
                             np.zeros_like(self.counts), self.kind, self.centers)


def _log_edges(lo, hi, n_bins):
    return np.logspace(math.log10(lo), math.log10(hi), n_bins + 1)


def log_binned_pdf(samples, n_bins=30, edges=None):
    """Density of positive samples on log-spaced bins.

    Samples outside explicit ``edges`` are ignored and the density is
    normalized over the in-range samples.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise InsufficientDataError("no samples")
    if np.any(x <= 0):
        raise DataError("log-binned density needs strictly positive samples")
    if edges is None:
        if n_bins < 10:
            raise DomainError(f"n_bins must be >= 10, got {n_bins}")
        lo, hi = x.min(), x.max()
        if lo == hi:
            lo, hi = lo / 10 ** 0.5, hi * 10 ** 0.5
        edges = _log_edges(lo, hi, n_bins)
    edges = np.asarray(edges, dtype=float)
    counts, _ = np.histogram(x, bins=edges)
    n = counts.sum()
    density = counts / (n * np.diff(edges)) if n else np.zeros(len(counts))
    return BinnedDensity(edges, density, counts, "pdf")


# ---------------------------------------------------------------------------
# Return intervals


@dataclass
class IntervalSeries:
    """Return intervals ``T_q`` for one threshold, in ticks of the analyzed grid.

    ``breaks`` lists the start index of each independent segment (runs from
    different seeds); successor pairs never straddle a break.
    """

    intervals: np.ndarray
    q: float
    source: dict = field(default_factory=dict)
    breaks: np.ndarray = None

    def __post_init__(self):
        self.intervals = np.asarray(self.intervals, dtype=np.int64)
        if self.breaks is None:
            self.breaks = np.array([0], dtype=np.int64)
        if self.intervals.size and self.intervals.min() < 1:
            raise DomainError("intervals must be >= 1")

    def __len__(self):
        return len(self.intervals)

    @property
    def empty(self):
        return len(self.intervals) == 0

    @property
    def mean_T(self):
        return float(self.intervals.mean()) if len(self.intervals) else math.nan

    @classmethod
    def concat(cls, parts):
        parts = [p for p in parts]
        if not parts:
            raise InsufficientDataError("nothing to concatenate")
        qs = {p.q for p in parts}
        if len(qs) != 1:
            raise DomainError(f"cannot concatenate thresholds {sorted(qs)}")
        breaks, offset = [], 0
        for p in parts:
            breaks.extend(int(b) + offset for b in p.breaks)
            offset += len(p)
        breaks = sorted(set(b for b in breaks if b < offset)) or [0]
        return cls(np.concatenate([p.intervals for p in parts]), parts[0].q,
                   {"parts": len(parts)}, np.array(breaks, dtype=np.int64))

    def successor_pairs(self):
        """Consecutive ``(T_i, T_{i+1})`` pairs inside each segment."""
        ok = np.ones(max(len(self) - 1, 0), dtype=bool)
        for b in self.breaks:
            if 0 < b <= len(ok):
                ok[b - 1] = False
        return self.intervals[:-1][ok], self.intervals[1:][ok]

    def summary(self):
        return {"q": self.q, "mean_T": self.mean_T, "n_intervals": len(self)}


def exceedance_times(abs_returns, q):
    """Indices where ``|r| > q`` (strict; ties are not exceedances)."""
    if not q > 0:
        raise DomainError(f"threshold must be > 0, got {q}")
    return np.flatnonzero(np.asarray(abs_returns) > q)


def extract_intervals(abs_returns, q, source=None):
    """Gaps between consecutive exceedance ticks.

    With fewer than two exceedances the result is empty (check ``.empty``).
    """
    idx = exceedance_times(abs_returns, q)
    return IntervalSeries(np.diff(idx), q, dict(source or {}))


def _integer_log_edges(t_max, n_bins):
    e = np.unique(np.floor(np.logspace(0.0, math.log10(t_max + 1.0), n_bins + 1)))
    if e[-1] <= t_max:
        e = np.append(e, t_max + 1.0)
    return e


def _scaled_from_counts(values, mean_T, edges_T, n_total=None):
    counts, _ = np.histogram(values, bins=edges_T)
    n = counts.sum() if n_total is None else n_total
    width_T = np.diff(edges_T)  # number of integers in each bin
    density = counts * mean_T / (n * width_T) if n else np.zeros(len(counts))
    lo, hi = edges_T[:-1], edges_T[1:] - 1.0
    centers = np.sqrt(lo * hi) / mean_T
    return BinnedDensity(edges_T / mean_T, density, counts, "pdf", centers)


def scaled_interval_pdf(intervals, n_bins=30, edges_T=None, mean_T=None,
                        min_intervals=MIN_SCALED_INTERVALS):
    """Density of ``T / <T>``, i.e. ``<T> P_q(T)`` against ``T / <T>``.

    Bins are log-spaced with integer boundaries so every bin holds at least
    one admissible interval length; densities account for the discreteness.
    """
    T = intervals.intervals if isinstance(intervals, IntervalSeries) else np.asarray(intervals)
    if len(T) < min_intervals:
        raise InsufficientDataError(f"need >= {min_intervals} intervals, got {len(T)}")
    mean_T = float(T.mean()) if mean_T is None else float(mean_T)
    if edges_T is None:
        edges_T = _integer_log_edges(T.max(), n_bins)
    return _scaled_from_counts(T, mean_T, np.asarray(edges_T, dtype=float))


def quantile(values, p):
    """Nearest-rank quantile (no interpolation)."""
    v = np.sort(np.asarray(values).ravel())
    if v.size == 0:
        raise InsufficientDataError("quantile of empty sample")
    if not 0 <= p <= 1:
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    rank = max(1, int(math.ceil(p * v.size - 1e-12)))
    return v[rank - 1]


def conditional_successors(intervals, side):
    """Successors ``T_{i+1}`` of predecessors in the lowest or highest octile."""
    if side not in ("low", "high"):
        raise DomainError(f"side must be 'low' or 'high', got {side!r}")
    if len(intervals) < MIN_CONDITIONAL_INTERVALS:
        raise InsufficientDataError(
            f"need >= {MIN_CONDITIONAL_INTERVALS} intervals, got {len(intervals)}")
    prev, nxt = intervals.successor_pairs()
    if side == "low":
        sel = nxt[prev <= quantile(intervals.intervals, 1 / 8)]
    else:
        sel = nxt[prev >= quantile(intervals.intervals, 7 / 8)]
    if len(sel) < MIN_PER_SIDE:
        raise InsufficientDataError(f"only {len(sel)} successors on the {side} side")
    return sel


def conditional_interval_pdf(intervals, side, n_bins=30):
    """Scaled density of successors, scaled by the full-series ``<T>``."""
    sel = conditional_successors(intervals, side)
    edges_T = _integer_log_edges(intervals.intervals.max(), n_bins)
    return _scaled_from_counts(sel, intervals.mean_T, edges_T)


def reshuffle(series, rng):
    """Uniform random permutation of a series."""
    return rng.permutation(np.asarray(series))


# ---------------------------------------------------------------------------
# Spectra and fits


def psd(series, dt, n_segments=32, n_bins=40, edges=None):
    """Segment-averaged one-sided periodogram, log-binned.

    ``dt`` is the sampling interval in trading days, so frequencies come out
    in 1/trading day.  Segments are rectangular and non-overlapping, each
    with its own mean removed.
    """
    x = np.asarray(series, dtype=float)
    if len(x) < n_segments * MIN_PSD_SEGMENT:
        raise InsufficientDataError(
            f"need >= {n_segments * MIN_PSD_SEGMENT} samples, got {len(x)}")
    m = len(x) // n_segments
    seg = x[: m * n_segments].reshape(n_segments, m)
    seg = seg - seg.mean(axis=1, keepdims=True)
    spectrum = np.abs(np.fft.rfft(seg, axis=1)) ** 2 * (2.0 * dt / m)
    power = spectrum.mean(axis=0)[1:]
    freqs = np.fft.rfftfreq(m, dt)[1:]
    if edges is None:
        edges = _log_edges(freqs[0], freqs[-1] * (1 + 1e-12), n_bins)
    edges = np.asarray(edges, dtype=float)
    which = np.digitize(freqs, edges) - 1
    inside = (which >= 0) & (which < len(edges) - 1)
    nb = len(edges) - 1
    counts = np.bincount(which[inside], minlength=nb)
    psum = np.bincount(which[inside], weights=power[inside], minlength=nb)
    lsum = np.bincount(which[inside], weights=np.log(freqs[inside]), minlength=nb)
    with np.errstate(invalid="ignore", divide="ignore"):
        density = np.where(counts > 0, psum / np.maximum(counts, 1), 0.0)
        centers = np.where(counts > 0, np.exp(lsum / np.maximum(counts, 1)),
                           np.sqrt(edges[:-1] * edges[1:]))
    return BinnedDensity(edges, density, counts, "psd", centers)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    intercept: float
    n_bins: int
    fit_range: tuple

    def to_dict(self):
        return {"slope": self.slope, "stderr": self.stderr, "intercept": self.intercept,
                "n_bins": self.n_bins, "fit_range": list(self.fit_range)}


def central_decades(density, n_decades=2.0, min_count=10):
    """Fit window of ``n_decades`` centered (in log) on the populated bins.

    Populated means positive density and at least ``min_count`` samples.
    If the populated range is narrower, the whole range is returned.
    """
    sel = (density.density > 0) & (density.counts >= min_count)
    if sel.sum() < 2:
        raise InsufficientDataError("fewer than two populated bins")
    c = density.centers[sel]
    lc = np.log10(c)
    lo, hi = lc.min(), lc.max()
    if hi - lo <= n_decades:
        # exact centers so inclusive range tests keep the end bins
        return float(c.min()), float(c.max())
    mid = 0.5 * (lo + hi)
    return float(10 ** (mid - n_decades / 2)), float(10 ** (mid + n_decades / 2))


def tail_exponent_fit(density, x_lo, x_hi, min_count=1):
    """Least-squares slope of log density against log bin center.

    Only bins with center in ``[x_lo, x_hi]``, positive density and at least
    ``min_count`` samples take part.
    """
    c = density.centers
    sel = (c >= x_lo) & (c <= x_hi) & (density.density > 0) & (density.counts >= min_count)
    if sel.sum() < 5:
        raise InsufficientDataError(f"only {int(sel.sum())} occupied bins in [{x_lo}, {x_hi}]")
    lx = np.log10(c[sel])
    ly = np.log10(density.density[sel])
    if sel.sum() == 2 or np.ptp(lx) == 0:
        raise InsufficientDataError("degenerate fit range")
    res = sps.linregress(lx, ly)
    return SlopeFit(float(res.slope), float(res.stderr), float(res.intercept),
                    int(sel.sum()), (float(x_lo), float(x_hi)))


def merge(a, b):
    """Combine two densities built on identical edges."""
    if a.kind != b.kind or a.bin_edges.shape != b.bin_edges.shape or not np.array_equal(
            a.bin_edges, b.bin_edges):
        raise DomainError("cannot merge densities with different edges or kinds")
    counts = a.counts + b.counts
    if a.kind == "pdf":
        n = counts.sum()
        density = counts / (n * a.widths) if n else np.zeros(len(counts))
        return BinnedDensity(a.bin_edges, density, counts, "pdf", a.centers)
    with np.errstate(invalid="ignore"):
        density = np.where(counts > 0, (a.density * a.counts + b.density * b.counts)
                           / np.maximum(counts, 1), 0.0)
    return BinnedDensity(a.bin_edges, density, counts, "psd", a.centers)


def log_distance(a, b, min_count=10):
    """Largest ``|log10 a - log10 b|`` over the common support.

    ``b`` is interpolated (linear in log-log) at ``a``'s bin centers; only
    bins with at least ``min_count`` samples in both densities count.
    """
    def support(d):
        s = (d.counts >= min_count) & (d.density > 0)
        return np.log10(d.centers[s]), np.log10(d.density[s])

    xa, ya = support(a)
    xb, yb = support(b)
    if len(xa) < 2 or len(xb) < 2:
        raise InsufficientDataError("too few populated bins to compare")
    lo, hi = max(xa.min(), xb.min()), min(xa.max(), xb.max())
    sel = (xa >= lo) & (xa <= hi)
    if sel.sum() < 2:
        raise InsufficientDataError("densities share no support")
    return float(np.max(np.abs(ya[sel] - np.interp(xa[sel], xb, yb))))


def discrete_ks(values, cdf):
    """One-sample KS test for integer-valued data.

    The statistic is the sup distance between step functions, evaluated at
    the integers; the continuous-law p-value is conservative for discrete
    data.  Returns ``(statistic, pvalue)``.
    """
    v = np.sort(np.asarray(values, dtype=np.int64))
    n = v.size
    if n == 0:
        raise InsufficientDataError("empty sample")
    k = np.arange(v[0], v[-1] + 1)
    emp = np.searchsorted(v, k, side="right") / n
    d = float(np.max(np.abs(emp - cdf(k))))
    # below the smallest observation the empirical CDF is 0
    d = max(d, float(cdf(v[0] - 1)))
    return d, float(sps.kstwo.sf(d, n))


def geometric_ks(intervals, p_exceed):
    """KS test of intervals against the geometric law with success ``p_exceed``."""
    T = intervals.intervals if isinstance(intervals, IntervalSeries) else np.asarray(intervals)
    return discrete_ks(T, sps.geom(p_exceed).cdf)


def gaussian_exceedance(q):
    """Two-sided tail probability ``P(|Z| > q)`` of a standard normal."""
    return 2.0 * sps.norm.sf(q)
