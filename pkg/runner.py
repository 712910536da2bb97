import json
import tomllib
import traceback
from pathlib import Path

import click
import numpy as np
import pandas as pd
import torch
from tabulate import tabulate

from durationlab.conditional import conditional_density, conditional_mean_curve, partition_octiles
from durationlab.console import Console
from durationlab.criterion import FitConfig
from durationlab.density import collapse_metric, common_edges, empirical_density
from durationlab.errors import DurationLabError, InvalidArgumentError
from durationlab.estimators import ESTIMATORS, FAMILIES, fit
from durationlab.fractal import FractalConfig, dfa, mfdfa, scale_grid
from durationlab.ingest import (
    CANONICAL_SCHEMA,
    DEFAULT_CALENDAR_NAME,
    RAW_SCHEMA,
    EventSchema,
    filter_to_sessions,
    load_calendar,
    parse_event_stream,
    split_by_direction,
    write_event_csv,
)
from durationlab.intraday import IntradayConfig, adjust_durations, fit_profile_polynomial, intraday_mean_profile, write_profile
from durationlab.pipeline import config_from_dict, run_pipeline, with_output_dir
from durationlab.report import render_report
from durationlab.series import compute_durations, pool_ensemble, read_durations, rescale, summarize, write_durations
from durationlab.synthetic import KINDS, GeneratorSpec, generate

torch.use_deterministic_algorithms(True)

CONFIG_PATH = Path("./config.toml")
OUTPUT_DIR = Path("./results")

EXIT_VALIDATION = 2
EXIT_PARTIAL = 3

console = Console("RUNNER")


def read_toml_config(path: Path) -> dict:
    """Read and parse a TOML configuration file.

    Raises:
        FileNotFoundError: If the config file does not exist.
    """
    file_path = Path(path)
    if not file_path.is_file():
        raise FileNotFoundError(f"Config file not found: {path}")
    with file_path.open("rb") as f:
        return tomllib.load(f)


def parse_schema(value: str) -> EventSchema:
    """``raw``, ``canonical`` or a JSON object of EventSchema fields."""
    if value == "raw":
        return RAW_SCHEMA
    if value == "canonical":
        return CANONICAL_SCHEMA
    try:
        fields = json.loads(value)
        if "columns" in fields:
            fields["columns"] = tuple(fields["columns"])
        for key in ("buy_codes", "sell_codes"):
            if key in fields:
                fields[key] = tuple(fields[key])
        return EventSchema(**fields)
    except (json.JSONDecodeError, TypeError) as e:
        raise InvalidArgumentError(f"Bad --schema {value!r}: {e}") from None


def read_series(path: Path) -> np.ndarray:
    """Values of a duration file (``duration_s``), a synth output (``value``) or a one-column CSV."""
    if not path.is_file():
        raise FileNotFoundError(f"Series file not found: {path}")
    frame = pd.read_csv(path)
    for column in ("duration_s", "value"):
        if column in frame.columns:
            return frame[column].to_numpy(dtype=float)
    return frame.iloc[:, -1].to_numpy(dtype=float)


def emit(payload: dict, as_json: bool) -> None:
    if as_json:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    else:
        click.echo(tabulate(list(payload.items()), headers=["key", "value"], tablefmt="github"))


class DurationLabGroup(click.Group):
    """Maps package errors to exit codes: 2 for invalid input, 3 for failed computations."""

    def invoke(self, ctx: click.Context):
        try:
            return super().invoke(ctx)
        except (InvalidArgumentError, FileNotFoundError) as e:
            console.error(e)
            if ctx.obj and ctx.obj.get("debug"):
                traceback.print_exc()
            ctx.exit(EXIT_VALIDATION)
        except DurationLabError as e:
            console.error(e)
            if ctx.obj and ctx.obj.get("debug"):
                traceback.print_exc()
            ctx.exit(EXIT_PARTIAL)


@click.group(cls=DurationLabGroup)
@click.option("--debug", is_flag=True, help="Enable debug mode")
@click.pass_context
def main(ctx: click.Context, debug: bool):
    """Inter-event duration analysis.

    Extracts waiting times from session-bounded event streams, fits Weibull and
    q-exponential laws, checks scaling collapse and conditional memory, removes
    intraday patterns and measures (multi)fractal long memory.
    """
    ctx.ensure_object(dict)
    ctx.obj["debug"] = debug
    Console.debug_enabled = debug


@main.command()
@click.option("--input", "input_path", type=Path, required=True, help="Raw event file")
@click.option("--schema", default="raw", help="raw, canonical or a JSON column mapping")
@click.option("--calendar", default=DEFAULT_CALENDAR_NAME, help="Calendar TOML or the default calendar name")
@click.option("--symbol", default="", help="Symbol attached to the stream")
@click.option("--out", type=Path, required=True, help="Canonical event CSV; the report goes next to it")
@click.pass_context
def ingest(ctx: click.Context, input_path: Path, schema: str, calendar: str, symbol: str, out: Path):
    """Parse, sort and session-filter a raw event stream."""
    series = parse_event_stream(
        input_path, parse_schema(schema), symbol=symbol, calendar=load_calendar(calendar), debug=ctx.obj["debug"]
    )
    series = filter_to_sessions(series)
    write_event_csv(series, out)
    report_path = out.with_suffix(".report.json")
    report_path.write_text(json.dumps(series.report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    console.info(f"{series.report.retained} events kept, {series.report.removed} removed, {series.report.malformed} malformed")


@main.command()
@click.option("--events", type=Path, required=True, help="Canonical event CSV")
@click.option("--class", "direction_class", type=click.Choice(["all", "buy", "sell"]), default="all")
@click.option("--calendar", default=DEFAULT_CALENDAR_NAME)
@click.option("--out", type=Path, required=True)
def durations(events: Path, direction_class: str, calendar: str, out: Path):
    """Session-aware inter-event durations of one class."""
    series = parse_event_stream(events, CANONICAL_SCHEMA, symbol=events.stem, calendar=load_calendar(calendar))
    if direction_class != "all":
        buy, sell = split_by_direction(series)
        series = buy if direction_class == "buy" else sell
    ds = compute_durations(series, direction_class)  # type: ignore[arg-type]
    write_durations(ds, out)
    console.info(f"{len(ds)} durations written to {out}")


@main.command()
@click.option("--durations", "path", type=Path, required=True)
@click.option("--n-days", type=int, default=None, help="Trading days; default: days present in the file")
@click.option("--json", "as_json", is_flag=True)
def summary(path: Path, n_days: int | None, as_json: bool):
    """Summary row: N, N0, mean, sigma, events per day, cv."""
    ds = read_durations(path)
    n_days = n_days or int(np.unique(ds.dates).size)
    emit(summarize(ds, n_days).to_dict(), as_json)


@main.command(name="fit")
@click.option("--durations", "path", type=Path, required=True)
@click.option("--family", type=click.Choice(list(FAMILIES)), required=True)
@click.option("--estimator", type=click.Choice(list(ESTIMATORS)), default="mle")
@click.option("--bins-per-decade", type=int, default=20)
@click.option("--json", "as_json", is_flag=True)
def fit_command(path: Path, family: str, estimator: str, bins_per_decade: int, as_json: bool):
    """Fit one family with one estimator to the positive durations."""
    result = fit(read_series(path), family, estimator, FitConfig(bins_per_decade=bins_per_decade))
    emit(result.to_row(), as_json)


@main.command()
@click.option("--inputs", type=Path, multiple=True, required=True, help="Duration files, one per symbol")
@click.option("--bins-per-decade", type=int, default=20)
@click.option("--json", "as_json", is_flag=True)
def collapse(inputs: tuple[Path, ...], bins_per_decade: int, as_json: bool):
    """Spread of the sigma-rescaled densities around their mean."""
    members = [rescale(read_durations(p)) for p in inputs]
    edges = common_edges([m.values for m in members], bins_per_decade)
    densities = [empirical_density(m.values[m.values > 0], edges=edges, min_samples=1) for m in members]
    emit({"collapse_metric": collapse_metric(densities), "members": len(members)}, as_json)


@main.command()
@click.option("--inputs", type=Path, multiple=True, required=True)
@click.option("--bins-per-decade", type=int, default=20)
@click.option("--out-densities", type=Path, required=True, help="Directory for Q1..Q8 densities")
@click.option("--out-curve", type=Path, required=True)
def conditional(inputs: tuple[Path, ...], bins_per_decade: int, out_densities: Path, out_curve: Path):
    """Successor densities and means conditioned on the predecessor octile."""
    ensemble = pool_ensemble([rescale(read_durations(p)) for p in inputs])
    partition = partition_octiles(ensemble)
    edges = common_edges([ensemble.values], bins_per_decade)
    out_densities.mkdir(parents=True, exist_ok=True)
    for i in range(1, partition.n_groups + 1):
        density = conditional_density(ensemble, i, edges, partition=partition)
        pd.DataFrame({"center": density.centers, "density": density.density, "count": density.counts}).to_csv(
            out_densities / f"Q{i}.csv", index=False, float_format="%.10g", lineterminator="\n"
        )
    curve = conditional_mean_curve(ensemble, partition)
    out_curve.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(curve.to_rows()).to_csv(out_curve, index=False, float_format="%.10g", lineterminator="\n")


@main.command()
@click.option("--durations", "path", type=Path, required=True)
@click.option("--degree", type=int, default=6)
@click.option("--averaging", type=click.Choice(["days_with_data", "all_days"]), default="days_with_data")
@click.option("--calendar", default=DEFAULT_CALENDAR_NAME)
@click.option("--out-profile", type=Path, required=True)
@click.option("--out-adjusted", type=Path, required=True)
def intraday(path: Path, degree: int, averaging: str, calendar: str, out_profile: Path, out_adjusted: Path):
    """Minute-of-day mean profile and the deseasonalized durations."""
    ds = read_durations(path)
    config = IntradayConfig(degree=degree, averaging=averaging, minutes_per_day=load_calendar(calendar).minutes_per_day)  # type: ignore[arg-type]
    profile = intraday_mean_profile(ds, config=config)
    profile = profile.with_fit(fit_profile_polynomial(profile, degree))
    write_profile(profile, out_profile)
    adjusted = adjust_durations(ds, profile)
    out_adjusted.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"index": np.arange(len(adjusted)), "value": adjusted.values}).to_csv(
        out_adjusted, index=False, float_format="%.10g", lineterminator="\n"
    )


def _smax(value: str) -> int | None:
    return None if value == "auto" else int(value)


@main.command(name="dfa")
@click.option("--series", "path", type=Path, required=True)
@click.option("--order", type=int, default=1)
@click.option("--smin", type=int, default=20)
@click.option("--smax", default="auto", help="Largest scale or 'auto' (N/4)")
@click.option("--n-scales", type=int, default=30)
@click.option("--out", type=Path, default=None, help="Fluctuation CSV (s, F)")
@click.option("--json", "as_json", is_flag=True)
def dfa_command(path: Path, order: int, smin: int, smax: str, n_scales: int, out: Path | None, as_json: bool):
    """DFA Hurst exponent."""
    x = read_series(path)
    grid = scale_grid(x.size, smin, _smax(smax), n_scales)
    result = dfa(x, grid, detrend_order=order)
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame({"s": result.scales, "F": result.F}).to_csv(out, index=False, float_format="%.10g", lineterminator="\n")
    emit(result.to_dict(), as_json)


@main.command(name="mfdfa")
@click.option("--series", "path", type=Path, required=True)
@click.option("--qmin", type=float, default=-6.0)
@click.option("--qmax", type=float, default=6.0)
@click.option("--qstep", type=float, default=0.5)
@click.option("--order", type=int, default=1)
@click.option("--smin", type=int, default=20)
@click.option("--smax", default="auto")
@click.option("--out-dir", type=Path, default=None, help="Writes fluctuation.csv, exponents.csv, spectrum.csv")
@click.option("--json", "as_json", is_flag=True)
def mfdfa_command(
    path: Path, qmin: float, qmax: float, qstep: float, order: int, smin: int, smax: str, out_dir: Path | None, as_json: bool
):
    """Generalized Hurst exponents and the singularity spectrum."""
    x = read_series(path)
    q_grid = tuple(np.round(np.arange(qmin, qmax + qstep / 2, qstep), 10))
    config = FractalConfig(q_grid=q_grid, smin=smin, smax=_smax(smax), detrend_order=order)
    result = mfdfa(x, config=config)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, rows in (
            ("fluctuation", result.surface.to_rows()),
            ("exponents", result.exponent_rows()),
            ("spectrum", result.spectrum_rows()),
        ):
            pd.DataFrame(rows).to_csv(out_dir / f"{name}.csv", index=False, float_format="%.10g", lineterminator="\n")
    emit(result.to_dict(), as_json)


@main.command()
@click.option("--kind", type=click.Choice(list(KINDS)), required=True)
@click.option("--params", default="{}", help="Generator parameters as JSON")
@click.option("--n", type=int, default=100_000)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=Path, required=True)
def synth(kind: str, params: str, n: int, seed: int, out: Path):
    """Draw a synthetic series with known properties."""
    try:
        parsed = json.loads(params)
    except json.JSONDecodeError as e:
        raise InvalidArgumentError(f"Bad --params: {e}") from None
    values = generate(GeneratorSpec(kind, parsed, n, seed))  # type: ignore[arg-type]
    out.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"index": np.arange(values.size), "value": values}).to_csv(
        out, index=False, float_format="%.17g", lineterminator="\n"
    )


@main.command()
@click.option("--config", "config_path", type=Path, default=CONFIG_PATH, help=f"Default: {CONFIG_PATH}")
@click.option("--results_dir", type=Path, default=None, help="Overrides [pipeline].output_dir")
@click.option("--workers", type=int, default=None, help="Worker processes; default from DURATIONLAB_WORKERS")
@click.pass_context
def run(ctx: click.Context, config_path: Path, results_dir: Path | None, workers: int | None):
    """Run the full pipeline described by a config file."""
    config = config_from_dict(read_toml_config(config_path), base_dir=config_path.parent)
    if results_dir is not None:
        config = with_output_dir(config, results_dir)
    report = run_pipeline(config, workers=workers, debug=ctx.obj["debug"])
    ctx.exit(report.exit_code)


@main.command()
@click.option("--dir", "run_dir", type=Path, default=OUTPUT_DIR)
@click.option("--format", "fmt", type=click.Choice(["csv", "json", "table"]), default="table")
def report(run_dir: Path, fmt: str):
    """Print the tables of a finished run."""
    click.echo(render_report(run_dir, fmt))  # type: ignore[arg-type]


if __name__ == "__main__":
    try:
        main()
    except KeyboardInterrupt:
        print("Interrupted by user.")
