"""Persistence: JSONL trial records, CSV summaries and the run manifest."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import RunConfig, echo_defaults
from .experiments import EXPERIMENTS, ExperimentResult


def _clean(obj):
    """Make a record JSON-safe: tuples to lists, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if hasattr(obj, "item"):  # numpy scalar
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"))


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_jsonl(path: Path, records) -> None:
    _atomic_write(path, "".join(dumps(r) + "\n" for r in records))


def write_csv(path: Path, rows) -> None:
    rows = [_clean(r) for r in rows]
    cols: list[str] = []
    for r in rows:
        cols.extend(k for k in r if k not in cols)
    cols = cols or ["empty"]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    _atomic_write(path, buf.getvalue())


def run_experiment(cfg: RunConfig) -> ExperimentResult:
    """Dispatch a validated configuration to its campaign."""
    opt = cfg.typed_options()
    g = cfg.graph.build() if cfg.graph else None
    a = cfg.offspring.build() if cfg.offspring else None
    stop = cfg.stop.build()
    fn = EXPERIMENTS[cfg.experiment]
    common = {"seed": cfg.seed}
    match cfg.experiment:
        case "simulate":
            return fn(g, a, cfg.p, cfg.trials, stop, engine=cfg.engine, workers=cfg.workers, **common)
        case "sweep":
            return fn(g, a, cfg.p_grid, cfg.trials, stop, seed_matched=cfg.seed_matched, engine=cfg.engine,
                      level=opt.level, workers=cfg.workers, **common)
        case "estimate-pc":
            return fn(g, a, cfg.trials, stop, bracket=opt.bracket, resolution=opt.resolution,
                      workers=cfg.workers, early_stop=opt.early_stop, **common)
        case "couple-audit":
            return fn(g, a, opt.p_pairs, cfg.trials, opt.horizon, max_total_parasites=opt.max_total_parasites,
                      **common)
        case "nonmono-search":
            return fn(g, a, opt.p_pair, range(opt.trial_start, opt.trial_stop), opt.horizon, opt.ball_radius,
                      max_total_parasites=opt.max_total_parasites, stop_after=opt.stop_after,
                      prefilter=opt.prefilter, **common)
        case "equiv-test":
            return fn(g, a, cfg.p, opt.horizon, cfg.trials, buckets=opt.buckets,
                      max_total_parasites=stop.max_total_parasites, workers=cfg.workers, **common)
        case "lifetime-census":
            return fn(g, cfg.p, cfg.trials, opt.cap, **common)
        case "recurrence":
            return fn(g, a, cfg.p, cfg.trials, opt.horizons, max_total_parasites=opt.max_total_parasites,
                      engine=cfg.engine, **common)
        case "tree-asymptotics":
            return fn(a, opt.degrees, cfg.trials, stop, bracket=opt.bracket, resolution=opt.resolution,
                      workers=cfg.workers, early_stop=opt.early_stop, **common)
        case "decorated":
            return fn(opt.ns, cfg.p, cfg.trials, d0=opt.d0, stop=stop, workers=cfg.workers,
                      early_stop=opt.early_stop, **common)
        case "theta-probe":
            d = cfg.graph.d if cfg.graph and cfg.graph.family == "lattice" else 2
            return fn(a, opt.N, opt.r_guess, opt.eps, cfg.trials, d=d,
                      max_total_parasites=stop.max_total_parasites, **common)
        case "percolation":
            return fn(cfg.p_grid, opt.sizes, cfg.trials, **common)
    raise AssertionError(cfg.experiment)  # pragma: no cover


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def execute(cfg: RunConfig) -> tuple[ExperimentResult, dict]:
    """Run, then write ``<experiment>.jsonl``, ``<experiment>.csv`` and
    ``manifest.json`` (last, atomically) into the output directory."""
    started = _now()
    result = run_experiment(cfg)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [f"{cfg.experiment}.jsonl", f"{cfg.experiment}.csv"]
    write_jsonl(out / files[0], result.records)
    write_csv(out / files[1], result.rows)
    manifest = {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "version": __version__,
        "started": started,
        "finished": _now(),
        "experiment": cfg.experiment,
        "files": files,
        "config": echo_defaults(cfg),
        "summary": _clean(result.summary),
    }
    _atomic_write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return result, manifest
