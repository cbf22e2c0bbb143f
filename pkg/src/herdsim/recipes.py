"""Presets that regenerate the data behind each return-interval figure.

A recipe fixes the noise modes, analysis windows and thresholds; run length,
seeds, output directory and model constants still come from the RunConfig.
Every curve is written as a density file plus a JSON summary.
"""

from dataclasses import dataclass

from . import pipeline, stats
from .errors import DomainError, InsufficientDataError

MONTH_DAYS = 21


@dataclass(frozen=True)
class Recipe:
    modes: tuple
    windows: tuple  # (label, Delta in trading days or None for one tick)
    thresholds: tuple
    conditional: bool = False
    ticks: int = 20_000_000
    panel: tuple = ()  # extra threshold set written under a "panel" tag


RECIPES = {
    "fig3": Recipe(("A", "B", "C", "D"), (("tick", None), ("day", 1.0)), (2.0,),
                   ticks=39_000_000),
    "fig4": Recipe(("D",), (("tick", None),), (1.5, 2.0, 2.5, 3.0)),
    "fig5": Recipe(("D",), (("tick", None),), (1.5, 2.0, 2.5, 3.0), conditional=True),
    "fig6": Recipe(("D",), (("day", 1.0),), (1.7, 2.0, 3.0, 4.0), ticks=78_000_000),
    "fig7": Recipe(("D",), (("day", 1.0),), (1.7, 2.0, 3.0, 4.0), conditional=True,
                   ticks=78_000_000),
    "fig8": Recipe(("D",), (("month", float(MONTH_DAYS)),), (1.0, 2.0, 3.5),
                   ticks=390_000_000, panel=(1.5, 2.0, 3.0, 5.0)),
}


def _qtag(q):
    return f"q{q:g}"


def _emit_curve(cfg, stem, iv, conditional):
    """Write the unconditional (and optionally conditional) curves of one series."""
    written = []
    try:
        d = stats.scaled_interval_pdf(iv, n_bins=cfg.n_bins)
    except InsufficientDataError as exc:
        pipeline.write_json({**iv.summary(), "slope": None, "stderr": None, "fit_range": None,
                             "error": str(exc)}, pipeline.out_path(cfg.output_dir, stem + ".json"))
        raise
    written.append(pipeline.write_density(
        d, pipeline.out_path(cfg.output_dir, f"{stem}.{cfg.format}"), cfg.format))
    written.append(pipeline.write_json(pipeline.interval_summary(iv, d),
                                       pipeline.out_path(cfg.output_dir, stem + ".json")))
    if conditional:
        for side in ("low", "high"):
            dc = stats.conditional_interval_pdf(iv, side, n_bins=cfg.n_bins)
            n_side = int(dc.counts.sum())
            summ = {**pipeline.interval_summary(iv, dc), "side": side, "n_intervals": n_side}
            written.append(pipeline.write_density(
                dc, pipeline.out_path(cfg.output_dir, f"{stem}_{side}.{cfg.format}"), cfg.format))
            written.append(pipeline.write_json(
                summ, pipeline.out_path(cfg.output_dir, f"{stem}_{side}.json")))
    return written


def run_recipe(name, cfg):
    """Run recipe ``name`` and return the list of written files.

    Curves with too few intervals are skipped (their JSON summary records
    the error) and an InsufficientDataError is raised after all other
    curves are written.
    """
    if name not in RECIPES:
        raise DomainError(f"unknown recipe {name!r}; expected one of {', '.join(RECIPES)}")
    r = RECIPES[name]
    ticks = cfg.ticks if "ticks" in cfg.explicit else r.ticks
    burn_in = cfg.burn_in
    thresholds = tuple(cfg.thresholds) if "q" in cfg.explicit else r.thresholds
    qs = tuple(dict.fromkeys(thresholds + r.panel))
    written, failed = [], []
    for label, Delta in r.windows:
        Delta = cfg.params.delta_tick if Delta is None else Delta
        per_seed = pipeline.run_seeds(
            pipeline.seed_intervals, cfg.seeds, cfg.jobs, params=cfg.params, n_ticks=ticks,
            burn_in=burn_in, Delta=Delta, modes=r.modes, thresholds=qs,
            normalization=cfg.normalization, window=cfg.window)
        for m in r.modes:
            groups = [("", thresholds)] + ([("panel_", r.panel)] if r.panel else [])
            for prefix, group in groups:
                for q in group:
                    stem = f"{name}_{prefix}{label}_mode{m}_{_qtag(q)}"
                    iv = pipeline.merge_intervals(per_seed, m, q)
                    try:
                        written += _emit_curve(cfg, stem, iv, r.conditional)
                    except InsufficientDataError as exc:
                        failed.append(f"{stem}: {exc}")
    if failed:
        raise InsufficientDataError("; ".join(failed))
    return written
