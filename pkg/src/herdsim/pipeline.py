"""Per-seed workers and cross-seed merging.

Each worker runs one seed from scratch and returns small picklable results
(interval series or binned densities).  Seeds are combined in the order
given, so sequential and parallel runs produce identical outputs.
"""

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import market_series as ms
from . import stats
from .errors import InsufficientDataError

# |r| density bins shared by all seeds so per-seed densities merge exactly
ABS_RETURN_EDGES = np.logspace(-3, 2, 51)


def run_seeds(func, seeds, jobs=1, **kwargs):
    """Call ``func(seed=s, **kwargs)`` for every seed, in order.

    ``jobs > 1`` fans the seeds out to worker processes.
    """
    seeds = list(seeds)
    jobs = max(1, min(int(jobs), len(seeds)))
    if jobs == 1:
        return [func(seed=s, **kwargs) for s in seeds]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(func, seed=s, **kwargs) for s in seeds]
        return [f.result() for f in futures]


def _normalize(series, how, window):
    if how == "moving":
        return ms.normalize_moving(series, window)
    return ms.normalize_global(series)


def seed_series(seed, params, n_ticks, burn_in, Delta, modes, normalization="global",
                window=ms.DEFAULT_MOVING_WINDOW):
    """Normalized window series per mode for one seed."""
    bundle = ms.simulate_series(params.with_(seed=seed), n_ticks, Delta, tuple(modes), burn_in)
    return {m: _normalize(s, normalization, window) for m, s in bundle.series.items()}


def seed_intervals(seed, params, n_ticks, burn_in, Delta, modes, thresholds,
                   normalization="global", window=ms.DEFAULT_MOVING_WINDOW):
    """``{mode: {q: IntervalSeries}}`` for one seed."""
    series = seed_series(seed, params, n_ticks, burn_in, Delta, modes, normalization, window)
    out = {}
    for m, s in series.items():
        a = s.abs
        out[m] = {q: stats.extract_intervals(a, q, {"seed": seed, "mode": m}) for q in thresholds}
    return out


def seed_densities(seed, params, n_ticks, burn_in, Delta, modes, n_segments=32, n_bins=40,
                   normalization="global", window=ms.DEFAULT_MOVING_WINDOW):
    """``{mode: (pdf of |r|, psd of |r|)}`` for one seed."""
    series = seed_series(seed, params, n_ticks, burn_in, Delta, modes, normalization, window)
    out = {}
    for m, s in series.items():
        a = s.abs
        pdf = stats.log_binned_pdf(a[a > 0], edges=ABS_RETURN_EDGES)
        spectrum = stats.psd(a, Delta, n_segments=n_segments, n_bins=n_bins)
        out[m] = (pdf, spectrum)
    return out


def merge_intervals(per_seed, mode, q):
    return stats.IntervalSeries.concat([r[mode][q] for r in per_seed])


def merge_densities(parts):
    acc = parts[0]
    for d in parts[1:]:
        acc = stats.merge(acc, d)
    return acc


# ---------------------------------------------------------------------------
# Summaries and writers


def fit_summary(density, n_decades=2.0, min_count=10):
    """Slope over the central decades of the populated range, or None values."""
    try:
        lo, hi = stats.central_decades(density, n_decades, min_count)
        fit = stats.tail_exponent_fit(density, lo, hi, min_count=min_count)
        return {"slope": fit.slope, "stderr": fit.stderr, "fit_range": [lo, hi]}
    except InsufficientDataError:
        return {"slope": None, "stderr": None, "fit_range": None}


def interval_summary(iv, density):
    out = {"q": iv.q, "mean_T": iv.mean_T, "n_intervals": len(iv)}
    out.update(fit_summary(density) if density is not None
               else {"slope": None, "stderr": None, "fit_range": None})
    return out


def _fmt(v):
    return f"{v:.9g}"


def write_density(density, path, fmt="csv"):
    """Write a binned density; PSDs get frequency/power column names."""
    names = (["freq_per_day", "power", "count"] if density.kind == "psd"
             else ["bin_center", "density", "count"])
    cols = (density.centers, density.density, density.counts)
    if fmt == "json":
        with open(path, "w") as fh:
            json.dump({n: [float(v) if i < 2 else int(v) for v in c]
                       for i, (n, c) in enumerate(zip(names, cols))}, fh, indent=1)
            fh.write("\n")
        return path
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for c, d, n in zip(*cols):
            w.writerow([_fmt(c), _fmt(d), int(n)])
    return path


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def out_path(out_dir, name):
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)
