"""``herdsim`` command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 too few
samples for the requested statistic, 1 any other failure.
"""

import argparse
import logging
import sys

import numpy as np
from scipy import stats as sps

from . import market_series as ms
from . import microsim, pipeline, recipes, reduced_sde, sde_engine, stats
from .config import COMMANDS, RECIPES, parse_config
from .errors import ConfigError, DataError, DomainError, HerdsimError, InsufficientDataError
from .io import ingest_csv, returns_from_prices

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DATA, EXIT_SAMPLES = 0, 1, 2, 3, 4


def build_parser():
    p = argparse.ArgumentParser(prog="herdsim", description="Herding-model market simulator.")
    p.add_argument("command", choices=COMMANDS + RECIPES)
    p.add_argument("input", nargs="?", help="price CSV for the ingest command")
    p.add_argument("--config", help="flat key = value file")
    p.add_argument("--seed", help="seed or comma-separated seed list")
    p.add_argument("--ticks", help="number of recorded ticks (or samples) per seed")
    p.add_argument("--q", help="comma-separated thresholds")
    p.add_argument("--delta", help="analysis window in trading days")
    p.add_argument("--mode", choices=("A", "B", "C", "D"))
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _overrides(args):
    return {"seeds": args.seed, "ticks": args.ticks, "q": args.q, "delta": args.delta,
            "mode": args.mode, "out": args.out, "format": args.format, "input": args.input}


def _mode_name(cfg):
    return cfg.mode.name


def _density_file(cfg, name):
    return pipeline.out_path(cfg.output_dir, f"{name}.{cfg.format}")


def cmd_simulate(cfg):
    written = []
    for seed in cfg.seeds:
        p = cfg.params.with_(seed=seed)
        path = sde_engine.simulate(p, cfg.ticks, cfg.burn_in)
        fn = pipeline.out_path(cfg.output_dir, f"path_seed{seed}.csv")
        with open(fn, "w", newline="") as fh:
            sde_engine.write_path_csv(path, fh)
        written.append(fn)
        bundle = ms.simulate_series(p, cfg.ticks, cfg.Delta, (_mode_name(cfg),), cfg.burn_in)
        fn = pipeline.out_path(cfg.output_dir, f"returns_seed{seed}.csv")
        with open(fn, "w", newline="") as fh:
            ms.write_series_csv(bundle.series[_mode_name(cfg)], fh)
        written.append(fn)
    return written


def cmd_reduced(cfg):
    rp = {k: cfg.reduced[k] for k in ("eta", "lam", "x_min", "x_max") if k in cfg.reduced}
    dt = cfg.reduced.get("dt_sample", 1e-3)
    kappa = cfg.reduced.get("kappa", 1e-3)
    written = []
    for seed in cfg.seeds:
        params = reduced_sde.ReducedParams(seed=seed, **rp)
        run = reduced_sde.simulate_reduced(params, cfg.ticks, dt_sample=dt, kappa=kappa)
        fn = pipeline.out_path(cfg.output_dir, f"reduced_seed{seed}.csv")
        with open(fn, "w", newline="") as fh:
            reduced_sde.write_reduced_csv(run, fh)
        pdf = stats.log_binned_pdf(run.x, edges=np.logspace(np.log10(params.x_min),
                                                            np.log10(params.x_max), 41))
        spectrum = stats.psd(run.x, dt)
        summary = {"seed": seed, "eta": params.eta, "lam": params.lam,
                   "beta_expected": reduced_sde.ExponentTriple.from_eta_lam(
                       params.eta, params.lam).beta,
                   "pdf": pipeline.fit_summary(pdf), "psd": pipeline.fit_summary(spectrum)}
        js = pipeline.out_path(cfg.output_dir, f"reduced_seed{seed}.json")
        written += [fn, pipeline.write_json(summary, js)]
    return written


def cmd_microsim(cfg):
    N = cfg.micro.get("n_agents", 1000)
    events = cfg.micro.get("events", cfg.ticks)
    written = []
    for seed in cfg.seeds:
        p = cfg.params.with_(seed=seed)
        run = microsim.simulate_micro(N, p, events)
        fn = pipeline.out_path(cfg.output_dir, f"micro_seed{seed}.csv")
        with open(fn, "w", newline="") as fh:
            microsim.write_micro_csv(run, fh)
        summary = {"seed": seed, "N": N, "events": run.n_events,
                   "mean_nf": float(run.n_f.mean()) if len(run.n_f) else None,
                   "var_nf": float(run.n_f.var()) if len(run.n_f) else None}
        js = pipeline.out_path(cfg.output_dir, f"micro_seed{seed}.json")
        written += [fn, pipeline.write_json(summary, js)]
    return written


def _emit_intervals(cfg, per_seed, mode, stem):
    written, failed = [], []
    for q in cfg.thresholds:
        iv = pipeline.merge_intervals(per_seed, mode, q)
        name = f"{stem}_q{q:g}"
        try:
            d = stats.scaled_interval_pdf(iv, n_bins=cfg.n_bins)
        except InsufficientDataError as exc:
            failed.append(f"{name}: {exc}")
            pipeline.write_json({**iv.summary(), "error": str(exc)},
                                pipeline.out_path(cfg.output_dir, name + ".json"))
            continue
        written.append(pipeline.write_density(d, _density_file(cfg, name), cfg.format))
        written.append(pipeline.write_json(pipeline.interval_summary(iv, d),
                                           pipeline.out_path(cfg.output_dir, name + ".json")))
    return written, failed


def _interval_run(cfg, modes):
    return pipeline.run_seeds(
        pipeline.seed_intervals, cfg.seeds, cfg.jobs, params=cfg.params, n_ticks=cfg.ticks,
        burn_in=cfg.burn_in, Delta=cfg.Delta, modes=modes, thresholds=tuple(cfg.thresholds),
        normalization=cfg.normalization, window=cfg.window)


def cmd_intervals(cfg):
    m = _mode_name(cfg)
    written, failed = _emit_intervals(cfg, _interval_run(cfg, (m,)), m, f"intervals_mode{m}")
    if failed:
        raise InsufficientDataError("; ".join(failed))
    return written


def cmd_ablate(cfg):
    modes = ("A", "B", "C", "D")
    per_seed = _interval_run(cfg, modes)
    written, failed = [], []
    for m in modes:
        w, f = _emit_intervals(cfg, per_seed, m, f"ablate_mode{m}")
        written += w
        failed += f
    tests = {}
    for q in cfg.thresholds:
        ivs = {m: pipeline.merge_intervals(per_seed, m, q) for m in modes}
        for a, b in zip(modes, modes[1:]):
            if len(ivs[a]) and len(ivs[b]):
                res = sps.ks_2samp(ivs[a].intervals, ivs[b].intervals)
                tests[f"q{q:g}_{a}{b}"] = {"statistic": res.statistic, "pvalue": res.pvalue}
    written.append(pipeline.write_json(tests, pipeline.out_path(cfg.output_dir,
                                                               "ablate_ks.json")))
    if failed:
        raise InsufficientDataError("; ".join(failed))
    return written


def _cmd_density(cfg, which):
    m = _mode_name(cfg)
    per_seed = pipeline.run_seeds(
        pipeline.seed_densities, cfg.seeds, cfg.jobs, params=cfg.params, n_ticks=cfg.ticks,
        burn_in=cfg.burn_in, Delta=cfg.Delta, modes=(m,), normalization=cfg.normalization,
        window=cfg.window)
    idx = 0 if which == "pdf" else 1
    d = pipeline.merge_densities([r[m][idx] for r in per_seed])
    name = f"{which}_mode{m}"
    summary = {"mode": m, "Delta": cfg.Delta, "seeds": cfg.seeds, **pipeline.fit_summary(d)}
    return [pipeline.write_density(d, _density_file(cfg, name), cfg.format),
            pipeline.write_json(summary, pipeline.out_path(cfg.output_dir, name + ".json"))]


def cmd_pdf(cfg):
    return _cmd_density(cfg, "pdf")


def cmd_psd(cfg):
    return _cmd_density(cfg, "psd")


def cmd_ingest(cfg):
    if not cfg.input:
        raise ConfigError("ingest needs a price CSV (positional argument or input key)",
                          key="input")
    series = ingest_csv(cfg.input)
    k = 1 if cfg.delta_window is None else cfg.delta_window
    if k != int(k):
        raise ConfigError(f"ingest windows are whole rows, got {k}", key="delta")
    r = returns_from_prices(series, int(k))
    norm = ms.normalize_moving(r, cfg.window) if cfg.normalization == "moving" \
        else ms.normalize_global(r)
    written = []
    fn = pipeline.out_path(cfg.output_dir, "ingest_returns.csv")
    with open(fn, "w", newline="") as fh:
        ms.write_series_csv(norm, fh, t0=float(series.timestamps[0]))
    written.append(fn)
    per_seed = [{"E": {q: stats.extract_intervals(norm.abs, q, {"asset": series.asset_label})
                       for q in cfg.thresholds}}]
    w, failed = _emit_intervals(cfg, per_seed, "E", "ingest")
    written += w
    if failed:
        raise InsufficientDataError("; ".join(failed))
    return written


HANDLERS = {
    "simulate": cmd_simulate, "reduced": cmd_reduced, "microsim": cmd_microsim,
    "intervals": cmd_intervals, "psd": cmd_psd, "pdf": cmd_pdf, "ablate": cmd_ablate,
    "ingest": cmd_ingest,
}


def run(cfg):
    if cfg.command in RECIPES:
        return recipes.run_recipe(cfg.command, cfg)
    return HANDLERS[cfg.command](cfg)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = parse_config(args.config, _overrides(args), command=args.command)
        for fn in run(cfg):
            print(fn)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        # invalid values that pass parsing but fail model checks
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientDataError as exc:
        print(f"insufficient samples: {exc}", file=sys.stderr)
        return EXIT_SAMPLES
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except HerdsimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
