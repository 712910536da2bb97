"""Render the tables of a finished run and rank the two duration families by chi."""

import json
import math
from pathlib import Path
from typing import Any, Literal

import pandas as pd
from tabulate import tabulate

from .console import load_json
from .errors import IncompleteInputError, InvalidArgumentError

ReportFormat = Literal["csv", "json", "table"]

TABLES = {
    "summary": "summary.csv",
    "fits": "fits.csv",
    "ensemble_fits": "ensemble_fits.csv",
    "memory": "memory.csv",
}
DOCUMENTS = ("identities.json", "ensemble.json", "manifest.json")
HIDDEN_COLUMNS = ("version", "config_hash", "starts")


def load_run(run_dir: Path) -> dict[str, Any]:
    """Read every table and JSON document a run wrote.

    Raises:
        IncompleteInputError: The directory has no manifest, so it is not a run.
    """
    if not (run_dir / "manifest.json").is_file():
        raise IncompleteInputError(f"No manifest.json in {run_dir}")
    run: dict[str, Any] = {}
    for name, file in TABLES.items():
        path = run_dir / file
        try:
            run[name] = pd.read_csv(path) if path.is_file() else pd.DataFrame()
        except pd.errors.EmptyDataError:
            run[name] = pd.DataFrame()
    for file in DOCUMENTS:
        run[file.removesuffix(".json")] = load_json(run_dir / file) if (run_dir / file).is_file() else {}
    return run


def get_model_ranks(fits: pd.DataFrame) -> dict[str, dict[str, int]]:
    """Rank families by chi within every (symbol, class, estimator) group.

    Ties share a rank (competition ranking).

    Returns:
        {family: {"symbol/class/estimator": rank}}.
    """
    ranks: dict[str, dict[str, int]] = {}
    if fits.empty:
        return ranks
    for (symbol, cls, estimator), group in fits.groupby(["symbol", "class", "estimator"], sort=True):
        entries = sorted(zip(group["family"], group["chi"]), key=lambda x: x[1])
        current_rank = 1
        prev_val = None
        for i, (family, chi) in enumerate(entries, start=1):
            if chi != prev_val:
                current_rank = i
            ranks.setdefault(family, {})[f"{symbol}/{cls}/{estimator}"] = current_rank
            prev_val = chi
    return ranks


def get_avg_ranks(ranks: dict[str, dict[str, int]]) -> list[tuple[str, float]]:
    """Average rank per family, best first."""
    avg = {family: (sum(r.values()) / len(r)) if r else float("inf") for family, r in ranks.items()}
    return sorted(avg.items(), key=lambda x: (x[1], x[0]))


def _visible(frame: pd.DataFrame) -> pd.DataFrame:
    return frame.drop(columns=[c for c in HIDDEN_COLUMNS if c in frame.columns])


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _records(frame: pd.DataFrame) -> list[dict[str, Any]]:
    return [{k: _json_safe(v) for k, v in row.items()} for row in frame.to_dict(orient="records")]


def render_report(run_dir: Path, fmt: ReportFormat = "table") -> str:
    """Render a run directory as text.

    ``table`` prints tabulate tables with the family ranking; ``csv`` emits the
    tables one after another under ``# name`` headers; ``json`` emits one
    document with every table and the run's JSON files.

    Raises:
        InvalidArgumentError: Unknown format.
    """
    run = load_run(run_dir)
    ranking = get_avg_ranks(get_model_ranks(run["fits"]))

    match fmt:
        case "json":
            payload = {name: _records(run[name]) for name in TABLES}
            payload.update({name.removesuffix(".json"): run[name.removesuffix(".json")] for name in DOCUMENTS})
            payload["family_ranking"] = [{"family": f, "avg_rank": r} for f, r in ranking]
            return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False)
        case "csv":
            parts = []
            for name in TABLES:
                parts.append(f"# {name}\n" + run[name].to_csv(index=False, float_format="%.10g", lineterminator="\n"))
            return "\n".join(parts)
        case "table":
            parts = [f"Run status: {run['manifest'].get('status', 'unknown')}"]
            for name in TABLES:
                frame = _visible(run[name])
                if frame.empty:
                    parts.append(f"\n{name}: (empty)")
                    continue
                parts.append(f"\n{name}:\n" + tabulate(frame, headers="keys", tablefmt="github", showindex=False, floatfmt=".4g"))
            if ranking:
                rows = [(i, f, f"{r:.4f}".rstrip("0").rstrip(".")) for i, (f, r) in enumerate(ranking, start=1)]
                parts.append("\nfamily ranking by chi:\n" + tabulate(rows, headers=["rank", "family", "avg_rank"], tablefmt="github"))
            return "\n".join(parts)
        case _:
            raise InvalidArgumentError(f"Unknown report format '{fmt}'")
