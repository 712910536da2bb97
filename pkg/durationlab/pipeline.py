"""End-to-end runs: ingest, durations, fits, intraday adjustment, (MF-)DFA and ensemble analyses."""

import hashlib
import json
import math
import os
import platform
from dataclasses import dataclass, field, replace
from importlib import metadata
from pathlib import Path
from typing import Any, Callable, Literal, Mapping

import numpy as np
import pandas as pd
import torch
from joblib import Parallel, delayed
from tqdm import tqdm

from . import __version__
from .conditional import conditional_density, conditional_mean_curve, curve_slope, partition_octiles
from .console import Console, dump_json
from .criterion import DEFAULT_FIT_CONFIG, FitConfig
from .density import DensityEstimate, bulk_fraction, collapse_metric, common_edges, empirical_density
from .errors import ConfigValidationError, IncompleteInputError
from .estimators import ESTIMATORS, FAMILIES, FitResult, fit
from .fractal import DEFAULT_FRACTAL_CONFIG, MIN_SCALE, FractalConfig, MultifractalResult, mfdfa
from .ingest import (
    CANONICAL_SCHEMA,
    DEFAULT_CALENDAR_NAME,
    RAW_SCHEMA,
    EventSeries,
    filter_to_sessions,
    load_calendar,
    parse_event_stream,
    split_by_direction,
)
from .intraday import (
    DEFAULT_INTRADAY_CONFIG,
    IntradayConfig,
    IntradayProfile,
    adjust_durations,
    fit_profile_polynomial,
    intraday_mean_profile,
)
from .series import (
    CLASSES,
    AdjustedSeries,
    DurationClass,
    DurationSeries,
    RescaledSeries,
    SummaryStats,
    compute_durations,
    durations_frame,
    pool_ensemble,
    rescale,
    summarize,
)
from .synthetic import GeneratorSpec, gen_event_stream, generate, intraday_modulation, spawn_seeds

WORKERS_ENV = "DURATIONLAB_WORKERS"
FLOAT_FORMAT = "%.10g"
DURATION_PARAMS = {
    "poisson": ("rate",),
    "weibull_iid": ("alpha", "beta"),
    "qexp_iid": ("mu", "q"),
    "longmem_weibull": ("alpha", "beta", "H"),
}
BULK_RANGE = (0.01, 5.0)

console = Console("PIPELINE")


@dataclass(frozen=True)
class SymbolSource:
    """Where one symbol's events come from: an event file or a seeded generator.

    Synthetic symbols draw ``n`` durations of ``kind`` and lay them onto
    ``n_days`` calendar days, optionally stretched by an intraday modulation.
    """

    path: Path | None = None
    kind: str | None = None
    params: dict[str, Any] = field(default_factory=dict)
    n: int = 100_000
    n_days: int = 20
    modulation: Literal["inverse_u", "u"] | None = None
    amplitude: float = 0.5
    buy_fraction: float = 0.5


@dataclass(frozen=True)
class PipelineConfig:
    """Declarative description of one run.

    Attributes:
        symbols: Source per symbol.
        output_dir: Where tables, plot-ready CSVs and the manifest go.
        calendar: Calendar file or the default calendar name.
        classes: Duration classes analyzed per symbol.
        input_format: "raw" (date,time,direction without header) or
            "canonical" (the ingest command's output).
        seed: Root seed; each symbol gets a spawned child.
        fit: Estimator settings.
        fractal: DFA/MF-DFA settings.
        intraday: Intraday profile settings.
        source: The mapping the config was built from, hashed for provenance.
    """

    symbols: dict[str, SymbolSource]
    output_dir: Path = Path("./results")
    calendar: str = DEFAULT_CALENDAR_NAME
    classes: tuple[DurationClass, ...] = CLASSES
    input_format: Literal["raw", "canonical"] = "raw"
    seed: int = 0
    fit: FitConfig = DEFAULT_FIT_CONFIG
    fractal: FractalConfig = DEFAULT_FRACTAL_CONFIG
    intraday: IntradayConfig = DEFAULT_INTRADAY_CONFIG
    source: dict[str, Any] = field(default_factory=dict)


def _section(raw: Mapping[str, Any], name: str, cls: type, **extra: Any) -> Any:
    values = dict(raw.get(name, {}))
    values.update(extra)
    try:
        return cls(**values)
    except TypeError as e:
        raise ConfigValidationError(f"[{name}]: {e}") from None


def config_from_dict(raw: Mapping[str, Any], base_dir: Path = Path(".")) -> PipelineConfig:
    """Build a PipelineConfig from a parsed TOML mapping.

    Relative paths resolve against ``base_dir`` (the config file's folder).
    Keys of the ``[synthetic]`` section are defaults for every generated
    symbol.

    Raises:
        ConfigValidationError: Unknown keys or malformed sections.
    """
    pipeline = dict(raw.get("pipeline", {}))
    synthetic_defaults = dict(raw.get("synthetic", {}))
    symbols: dict[str, SymbolSource] = {}
    for name, entry in dict(raw.get("symbols", {})).items():
        entry = dict(entry)
        if "path" in entry:
            entry["path"] = base_dir / Path(entry["path"])
        else:
            entry = {**synthetic_defaults, **entry}
        try:
            symbols[str(name)] = SymbolSource(**entry)
        except TypeError as e:
            raise ConfigValidationError(f"[symbols.{name}]: {e}") from None

    fractal_raw = dict(raw.get("fractal", {}))
    if "q_grid" in fractal_raw:
        fractal_raw["q_grid"] = tuple(float(q) for q in fractal_raw["q_grid"])

    calendar = str(raw.get("calendar", {}).get("source", DEFAULT_CALENDAR_NAME))
    if calendar != DEFAULT_CALENDAR_NAME:
        calendar = str(base_dir / calendar)

    try:
        return PipelineConfig(
            symbols=symbols,
            output_dir=base_dir / Path(pipeline.get("output_dir", "results")),
            calendar=calendar,
            classes=tuple(pipeline.get("classes", CLASSES)),
            input_format=pipeline.get("input_format", "raw"),
            seed=int(pipeline.get("seed", 0)),
            fit=_section(raw, "fit", FitConfig),
            fractal=_section({"fractal": fractal_raw}, "fractal", FractalConfig),
            intraday=_section(raw, "intraday", IntradayConfig),
            source=json.loads(json.dumps(dict(raw), default=str)),
        )
    except ConfigValidationError:
        raise
    except (TypeError, ValueError) as e:
        raise ConfigValidationError(f"[pipeline]: {e}") from None


def validate_config(config: PipelineConfig) -> None:
    """Check everything that can be checked before any computation.

    Raises:
        ConfigValidationError: The first problem found.
    """
    if not config.symbols:
        raise ConfigValidationError("No symbols configured")
    unknown = [c for c in config.classes if c not in CLASSES]
    if unknown or not config.classes:
        raise ConfigValidationError(f"Unknown duration classes {unknown}; use {list(CLASSES)}")
    if config.input_format not in ("raw", "canonical"):
        raise ConfigValidationError(f"input_format must be 'raw' or 'canonical', got {config.input_format!r}")
    try:
        calendar = load_calendar(config.calendar)
    except (FileNotFoundError, ValueError, KeyError) as e:
        raise ConfigValidationError(f"Calendar: {e}") from None

    for name, source in sorted(config.symbols.items()):
        if (source.path is None) == (source.kind is None):
            raise ConfigValidationError(f"Symbol {name}: give exactly one of 'path' or 'kind'")
        if source.path is not None:
            if not source.path.is_file():
                raise ConfigValidationError(f"Symbol {name}: input file not found: {source.path}")
            continue
        if source.kind not in DURATION_PARAMS:
            raise ConfigValidationError(f"Symbol {name}: kind must be one of {list(DURATION_PARAMS)}")
        missing = [p for p in DURATION_PARAMS[source.kind] if p not in source.params]
        if missing:
            raise ConfigValidationError(f"Symbol {name}: missing generator parameters {missing}")
        try:
            GeneratorSpec(source.kind, source.params, source.n)  # type: ignore[arg-type]
            if source.modulation is not None:
                intraday_modulation(source.modulation, source.amplitude, calendar.minutes_per_day)
        except ValueError as e:
            raise ConfigValidationError(f"Symbol {name}: {e}") from None
        if source.n_days <= 0:
            raise ConfigValidationError(f"Symbol {name}: n_days must be positive")

    fc = config.fit
    if fc.bins_per_decade <= 0 or fc.max_iter <= 0 or fc.tol <= 0 or fc.n_perturbed < 0:
        raise ConfigValidationError(f"Invalid [fit] settings: {fc}")
    fr = config.fractal
    if len(fr.q_grid) < 3 or fr.smin < MIN_SCALE or fr.detrend_order < 0 or fr.n_scales < 5:
        raise ConfigValidationError(f"Invalid [fractal] settings: {fr}")
    it = config.intraday
    if it.degree < 0 or it.averaging not in ("days_with_data", "all_days"):
        raise ConfigValidationError(f"Invalid [intraday] settings: {it}")


def config_hash(config: PipelineConfig) -> str:
    payload = json.dumps(config.source, sort_keys=True, default=str)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def validate_identities(summaries: Mapping[str, SummaryStats | None]) -> dict[str, dict[str, Any]]:
    """Check the count and mean relations between the all/buy/sell classes.

    N = N^b + N^s, N0 >= N0^b + N0^s, and both directional mean durations
    exceed the overall mean. A mean relation is "n/a" when a class has no
    durations.

    Raises:
        IncompleteInputError: A class is missing.
    """
    missing = [c for c in CLASSES if summaries.get(c) is None]
    if missing:
        raise IncompleteInputError(f"Identity check needs all classes; missing {missing}")
    a, b, s = (summaries[c] for c in CLASSES)
    assert a is not None and b is not None and s is not None

    def verdict(ok: bool) -> str:
        return "pass" if ok else "fail"

    def mean_check(side: SummaryStats) -> dict[str, Any]:
        if math.isnan(side.mean) or math.isnan(a.mean):
            return {"status": "n/a", "lhs": None, "rhs": None}
        return {"status": verdict(side.mean > a.mean), "lhs": side.mean, "rhs": a.mean}

    return {
        "N": {"status": verdict(a.n_events == b.n_events + s.n_events), "lhs": a.n_events, "rhs": b.n_events + s.n_events},
        "N0": {"status": verdict(a.zero_count >= b.zero_count + s.zero_count), "lhs": a.zero_count, "rhs": b.zero_count + s.zero_count},
        "mean_buy": mean_check(b),
        "mean_sell": mean_check(s),
    }


@dataclass
class StageLog:
    """Per-stage status: every stage either succeeds or records its error and is skipped downstream."""

    entries: dict[str, dict[str, str]] = field(default_factory=dict)
    debug: bool = False

    def run(self, key: str, func: Callable[..., Any], *args: Any, **kwargs: Any) -> Any:
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            self.entries[key] = {"status": "failed", "error": f"{type(e).__name__}: {e}"}
            if self.debug:
                console.warn(f"{key} failed: {e}")
            return None
        self.entries[key] = {"status": "ok"}
        return result

    def skip(self, key: str, reason: str) -> None:
        self.entries[key] = {"status": "skipped", "error": reason}

    def failed(self, prefix: str = "") -> bool:
        return any(e["status"] != "ok" for k, e in self.entries.items() if k.startswith(prefix))


@dataclass
class SymbolResult:
    symbol: str
    stages: dict[str, dict[str, str]]
    ingest: dict[str, Any] = field(default_factory=dict)
    summaries: list[dict[str, Any]] = field(default_factory=list)
    fits: list[dict[str, Any]] = field(default_factory=list)
    memory: list[dict[str, Any]] = field(default_factory=list)
    identities: dict[str, Any] | None = None
    rescaled: dict[str, RescaledSeries] = field(default_factory=dict)
    frames: dict[str, pd.DataFrame] = field(default_factory=dict)


def load_events(symbol: str, source: SymbolSource, config: PipelineConfig, seed: np.random.SeedSequence) -> EventSeries:
    """Parse or synthesize one symbol's events and keep the in-session ones."""
    calendar = load_calendar(config.calendar)
    if source.path is not None:
        schema = RAW_SCHEMA if config.input_format == "raw" else CANONICAL_SCHEMA
        events = parse_event_stream(source.path, schema, symbol=symbol, calendar=calendar)
    else:
        duration_seed, direction_seed = seed.spawn(2)
        durations = generate(GeneratorSpec(source.kind, source.params, source.n, duration_seed))  # type: ignore[arg-type]
        modulation = (
            intraday_modulation(source.modulation, source.amplitude, calendar.minutes_per_day)
            if source.modulation
            else None
        )
        events = gen_event_stream(
            durations,
            calendar,
            source.n_days,
            direction_seed,
            modulation,
            symbol=symbol,
            buy_fraction=source.buy_fraction,
        )
    return filter_to_sessions(events)


def _empty_summary(n_events: int, n_days: int) -> SummaryStats:
    nan = float("nan")
    per_day = n_events / n_days if n_days else nan
    return SummaryStats(n_events=n_events, zero_count=0, mean=nan, std=nan, events_per_day=per_day, cv=nan)


def _density_frame(density: DensityEstimate) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "lower": density.edges[:-1],
            "upper": density.edges[1:],
            "center": density.centers,
            "density": density.density,
            "count": density.counts,
        }
    )


def _fit_rows(samples: np.ndarray, config: FitConfig, log: StageLog, key: str) -> list[FitResult]:
    results = []
    for family in FAMILIES:
        for estimator in ESTIMATORS:
            result = log.run(f"{key}/fit/{family}-{estimator}", fit, samples, family, estimator, config)
            if result is not None:
                results.append(result)
    return results


def _intraday(ds: DurationSeries, n_days: int, config: IntradayConfig) -> tuple[IntradayProfile, AdjustedSeries]:
    profile = intraday_mean_profile(ds, n_days, config)
    profile = profile.with_fit(fit_profile_polynomial(profile, config.degree))
    return profile, adjust_durations(ds, profile)


def _fractal_frames(result: MultifractalResult, symbol: str, name: str) -> dict[str, pd.DataFrame]:
    return {
        f"{symbol}/fluctuation_{name}.csv": pd.DataFrame(result.surface.to_rows()),
        f"{symbol}/exponents_{name}.csv": pd.DataFrame(result.exponent_rows()),
        f"{symbol}/spectrum_{name}.csv": pd.DataFrame(result.spectrum_rows()),
    }


def analyze_symbol(
    symbol: str,
    source: SymbolSource,
    config: PipelineConfig,
    seed: np.random.SeedSequence,
    debug: bool = False,
) -> SymbolResult:
    """Every per-symbol stage, for every configured duration class."""
    torch.use_deterministic_algorithms(True)
    # same reduction order in the parent and in joblib workers
    torch.set_num_threads(1)
    log = StageLog(debug=debug)
    result = SymbolResult(symbol=symbol, stages=log.entries)

    events = log.run(f"{symbol}/ingest", load_events, symbol, source, config, seed)
    if events is None:
        return result
    result.ingest = events.report.to_dict()
    n_days = events.trading_days()
    intraday_config = replace(config.intraday, minutes_per_day=events.calendar.minutes_per_day)
    buy, sell = split_by_direction(events)
    streams = {"all": events, "buy": buy, "sell": sell}

    summaries: dict[str, SummaryStats | None] = {}
    for cls in config.classes:
        key = f"{symbol}/{cls}"
        ds: DurationSeries | None = log.run(f"{key}/durations", compute_durations, streams[cls], cls)
        if ds is None:
            summaries[cls] = _empty_summary(len(streams[cls]), n_days)
            continue
        result.frames[f"{symbol}/durations_{cls}.csv"] = durations_frame(ds)

        stats = log.run(f"{key}/summary", summarize, ds, n_days)
        summaries[cls] = stats
        if stats is not None:
            result.summaries.append({"symbol": symbol, "class": cls, **stats.to_dict()})

        positive = ds.positive()
        density = log.run(f"{key}/density", empirical_density, positive, config.fit.bins_per_decade, None, 1)
        if density is not None:
            result.frames[f"{symbol}/density_{cls}.csv"] = _density_frame(density)
        for r in _fit_rows(positive, config.fit, log, key):
            result.fits.append({"symbol": symbol, "class": cls, **r.to_row()})

        rescaled = log.run(f"{key}/rescale", rescale, ds)
        if rescaled is not None:
            result.rescaled[cls] = rescaled

        intraday = log.run(f"{key}/intraday", _intraday, ds, n_days, intraday_config)
        original = log.run(f"{key}/mfdfa", mfdfa, ds.durations, config=config.fractal)
        adjusted = None
        if intraday is not None:
            profile, adjusted_series = intraday
            result.frames[f"{symbol}/profile_{cls}.csv"] = profile.to_frame()
            adjusted = log.run(f"{key}/mfdfa_adjusted", mfdfa, adjusted_series.values, config=config.fractal)
        else:
            log.skip(f"{key}/mfdfa_adjusted", "no intraday profile")

        if original is not None:
            result.frames.update(_fractal_frames(original, symbol, cls))
        if adjusted is not None:
            result.frames.update(_fractal_frames(adjusted, symbol, f"{cls}_adjusted"))
        result.memory.append(
            {
                "symbol": symbol,
                "class": cls,
                "N_T": len(streams[cls]) / n_days if n_days else None,
                "H": original.H if original else None,
                "H_stderr": original.H_stderr if original else None,
                "H_adjusted": adjusted.H if adjusted else None,
                "H_adjusted_stderr": adjusted.H_stderr if adjusted else None,
                "delta_alpha": original.delta_alpha if original else None,
                "delta_alpha_adjusted": adjusted.delta_alpha if adjusted else None,
            }
        )

    if all(c in summaries for c in CLASSES):
        result.identities = log.run(f"{symbol}/identities", validate_identities, summaries)
    else:
        log.skip(f"{symbol}/identities", "not every class analyzed")
    return result


def analyze_ensemble(
    members: list[RescaledSeries], cls: str, config: FitConfig, log: StageLog
) -> tuple[list[dict[str, Any]], dict[str, Any], dict[str, pd.DataFrame]]:
    """Pooled fits, the scaling-collapse metric and octile conditioning for one class."""
    key = f"ensemble/{cls}"
    rows: list[dict[str, Any]] = []
    summary: dict[str, Any] = {"members": len(members)}
    frames: dict[str, pd.DataFrame] = {}

    ensemble = log.run(f"{key}/pool", pool_ensemble, members)
    if ensemble is None:
        return rows, summary, frames

    bulk = bulk_fraction(ensemble.values[ensemble.values > 0], *BULK_RANGE)
    for r in _fit_rows(ensemble.values[ensemble.values > 0], config, log, key):
        rows.append({"class": cls, **r.to_row(), "bulk_fraction": bulk})

    if len(members) >= 2:
        def _collapse() -> float:
            edges = common_edges([m.values for m in members], config.bins_per_decade)
            densities = [empirical_density(m.values[m.values > 0], edges=edges, min_samples=1) for m in members]
            return collapse_metric(densities)

        summary["collapse_metric"] = log.run(f"{key}/collapse", _collapse)
    else:
        log.skip(f"{key}/collapse", "needs at least two symbols")

    partition = log.run(f"{key}/octiles", partition_octiles, ensemble)
    if partition is None:
        return rows, summary, frames
    curve = log.run(f"{key}/conditional_curve", conditional_mean_curve, ensemble, partition)
    if curve is not None:
        frames[f"ensemble/conditional_curve_{cls}.csv"] = pd.DataFrame(curve.to_rows())
        slope = log.run(f"{key}/conditional_slope", curve_slope, curve)
        if slope is not None:
            summary["conditional_slope"], summary["conditional_slope_stderr"] = slope

    edges = log.run(f"{key}/edges", common_edges, [ensemble.values], config.bins_per_decade)
    if edges is not None:
        parts = []
        for i in range(1, partition.n_groups + 1):
            density = log.run(f"{key}/conditional_density/Q{i}", conditional_density, ensemble, i, edges, partition=partition)
            if density is not None:
                parts.append(_density_frame(density).assign(i=i))
        if parts:
            frames[f"ensemble/conditional_density_{cls}.csv"] = pd.concat(parts, ignore_index=True)
    return rows, summary, frames


@dataclass
class RunReport:
    status: Literal["ok", "partial"]
    manifest: dict[str, Any]
    output_dir: Path

    @property
    def exit_code(self) -> int:
        return 0 if self.status == "ok" else 3


def _versions() -> dict[str, str]:
    versions = {"durationlab": __version__, "python": platform.python_version()}
    for package in ("numpy", "scipy", "pandas", "torch", "joblib"):
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def _write_table(rows: list[dict[str, Any]], path: Path, provenance: dict[str, str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame([{**row, **provenance} for row in rows])
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _json_ready(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def resolve_workers(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, workers)
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigValidationError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_pipeline(config: PipelineConfig, workers: int | None = None, debug: bool = False) -> RunReport:
    """Run every stage for every symbol and class, then the ensemble stages.

    Results are merged in sorted (symbol, class) order; the worker count only
    changes how symbols are scheduled.

    Raises:
        ConfigValidationError: Before any computation, if the config is invalid.
    """
    torch.use_deterministic_algorithms(True)
    validate_config(config)
    workers = resolve_workers(workers)

    symbols = sorted(config.symbols)
    seeds = spawn_seeds(config.seed, len(symbols))
    jobs = list(zip(symbols, seeds))
    console.info(f"Analyzing {len(symbols)} symbol(s) x {len(config.classes)} class(es) with {workers} worker(s)")

    progress = tqdm(jobs, desc="Symbols")
    if workers > 1:
        results: list[SymbolResult] = Parallel(n_jobs=workers)(
            delayed(analyze_symbol)(s, config.symbols[s], config, seed, debug) for s, seed in progress
        )  # type: ignore[assignment]
    else:
        results = [analyze_symbol(s, config.symbols[s], config, seed, debug) for s, seed in progress]

    log = StageLog(debug=debug)
    ensemble_rows: list[dict[str, Any]] = []
    ensemble_summary: dict[str, Any] = {}
    ensemble_frames: dict[str, pd.DataFrame] = {}
    for cls in tqdm(config.classes, desc="Ensemble"):
        members = [r.rescaled[cls] for r in results if cls in r.rescaled]
        if not members:
            log.skip(f"ensemble/{cls}", "no rescaled members")
            continue
        rows, summary, frames = analyze_ensemble(members, cls, config.fit, log)
        ensemble_rows.extend(rows)
        ensemble_summary[cls] = summary
        ensemble_frames.update(frames)

    digest = config_hash(config)
    provenance = {"version": __version__, "config_hash": digest[:12]}
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)

    _write_table([row for r in results for row in r.summaries], out / "summary.csv", provenance)
    _write_table([row for r in results for row in r.fits], out / "fits.csv", provenance)
    _write_table([row for r in results for row in r.memory], out / "memory.csv", provenance)
    _write_table(ensemble_rows, out / "ensemble_fits.csv", provenance)
    dump_json(_json_ready({r.symbol: r.identities for r in results}), out / "identities.json")
    dump_json(_json_ready(ensemble_summary), out / "ensemble.json")

    frames = {name: frame for r in results for name, frame in r.frames.items()}
    frames.update(ensemble_frames)
    for name in sorted(frames):
        path = out / name
        path.parent.mkdir(parents=True, exist_ok=True)
        frames[name].to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    stages: dict[str, dict[str, str]] = {}
    for r in results:
        stages.update(r.stages)
    stages.update(log.entries)

    analyses = []
    for r in results:
        for cls in config.classes:
            prefix = f"{r.symbol}/{cls}/"
            failed = any(e["status"] != "ok" for k, e in r.stages.items() if k.startswith(prefix))
            ingest_ok = r.stages.get(f"{r.symbol}/ingest", {}).get("status") == "ok"
            analyses.append({"symbol": r.symbol, "class": cls, "status": "ok" if ingest_ok and not failed else "failed"})

    status: Literal["ok", "partial"] = (
        "ok" if all(e["status"] == "ok" for e in stages.values() if e["status"] != "skipped") else "partial"
    )
    manifest = {
        "status": status,
        "config_hash": digest,
        "versions": _versions(),
        "seed": config.seed,
        "symbol_seeds": {s: {"entropy": str(seed.entropy), "spawn_key": list(seed.spawn_key)} for s, seed in jobs},
        "ingest": {r.symbol: r.ingest for r in results},
        "analyses": analyses,
        "completed": sum(a["status"] == "ok" for a in analyses),
        "stages": dict(sorted(stages.items())),
    }
    dump_json(_json_ready(manifest), out / "manifest.json")

    if status == "ok":
        console.info(f"Done. {manifest['completed']} class analyses completed; outputs in {out}")
    else:
        failed = [k for k, e in stages.items() if e["status"] == "failed"]
        console.warn(f"Partial run: {len(failed)} stage(s) failed, see {out / 'manifest.json'}")
    return RunReport(status=status, manifest=manifest, output_dir=out)


def with_output_dir(config: PipelineConfig, output_dir: Path) -> PipelineConfig:
    return replace(config, output_dir=output_dir)
