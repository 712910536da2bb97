import tomllib
from pathlib import Path

import pandas as pd
import pytest

from durationlab.console import load_json
from durationlab.errors import ConfigValidationError, IncompleteInputError
from durationlab.fractal import DEFAULT_Q_GRID
from durationlab.pipeline import (
    WORKERS_ENV,
    config_from_dict,
    config_hash,
    resolve_workers,
    run_pipeline,
    validate_config,
    validate_identities,
    with_output_dir,
)
from durationlab.series import CLASSES, compute_durations, summarize
from durationlab.ingest import split_by_direction

from .conftest import two_sided_stream


def synthetic_config(base: Path, **pipeline) -> dict:
    return {
        "pipeline": {"seed": 7, "output_dir": "out", **pipeline},
        "synthetic": {"n": 3000, "n_days": 2},
        "fractal": {"n_scales": 12},
        "symbols": {
            "SYN001": {
                "kind": "longmem_weibull",
                "params": {"alpha": 0.41, "beta": 0.67, "H": 0.9},
                "modulation": "inverse_u",
            },
            "SYN002": {"kind": "weibull_iid", "params": {"alpha": 0.8, "beta": 0.67}},
            "SYN003": {"kind": "qexp_iid", "params": {"mu": 0.24, "q": 1.67}},
        },
    }


def tree(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def synthetic_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("run")
    config = config_from_dict(synthetic_config(base), base_dir=base)
    return config, run_pipeline(config, workers=1)


def test_every_symbol_and_class_analyzed(synthetic_run):
    config, report = synthetic_run
    out = report.output_dir
    assert report.exit_code in (0, 3)
    assert len(report.manifest["analyses"]) == 9
    assert {(a["symbol"], a["class"]) for a in report.manifest["analyses"]} == {
        (s, c) for s in config.symbols for c in CLASSES
    }

    summary = pd.read_csv(out / "summary.csv")
    assert len(summary) == 9
    assert {"version", "config_hash"} <= set(summary.columns)
    assert summary["config_hash"].nunique() == 1

    memory = pd.read_csv(out / "memory.csv")
    assert len(memory) == 9
    assert memory["H"].notna().all()

    for symbol in config.symbols:
        for cls in CLASSES:
            assert (out / symbol / f"durations_{cls}.csv").is_file()
            assert (out / symbol / f"exponents_{cls}.csv").is_file()

    identities = load_json(out / "identities.json")
    assert set(identities) == set(config.symbols)
    assert all(entry["N"]["status"] == "pass" for entry in identities.values())

    ensemble = load_json(out / "ensemble.json")
    assert ensemble["all"]["members"] == 3
    assert "collapse_metric" in ensemble["all"]
    assert (out / "ensemble" / "conditional_curve_all.csv").is_file()


def test_manifest_provenance(synthetic_run):
    config, report = synthetic_run
    manifest = load_json(report.output_dir / "manifest.json")
    assert manifest["config_hash"] == config_hash(config)
    assert manifest["seed"] == 7
    assert set(manifest["symbol_seeds"]) == set(config.symbols)
    assert "numpy" in manifest["versions"]


def test_rerun_is_byte_identical(synthetic_run, tmp_path):
    config, report = synthetic_run
    again = run_pipeline(with_output_dir(config, tmp_path / "again"), workers=1)
    assert tree(again.output_dir) == tree(report.output_dir)


def test_worker_count_does_not_change_outputs(synthetic_run, tmp_path):
    config, report = synthetic_run
    parallel = run_pipeline(with_output_dir(config, tmp_path / "parallel"), workers=2)
    assert tree(parallel.output_dir) == tree(report.output_dir)


def test_short_file_gives_partial_run(tmp_path, raw_text):
    (tmp_path / "events.txt").write_text(raw_text)
    raw = {"pipeline": {"output_dir": "out"}, "symbols": {"000001": {"path": "events.txt"}}}
    report = run_pipeline(config_from_dict(raw, base_dir=tmp_path))
    assert report.status == "partial"
    assert report.exit_code == 3
    stages = report.manifest["stages"]
    assert stages["000001/ingest"]["status"] == "ok"
    assert stages["000001/all/fit/weibull-mle"]["status"] == "failed"
    assert stages["000001/buy/durations"]["status"] == "failed"
    assert report.manifest["ingest"]["000001"]["malformed"] == 1

    identities = load_json(report.output_dir / "identities.json")["000001"]
    assert identities["mean_buy"]["status"] == "n/a"


def test_config_validation(tmp_path):
    raw = synthetic_config(tmp_path)
    raw["symbols"]["MISSING"] = {"path": "nowhere.txt"}
    with pytest.raises(ConfigValidationError):
        run_pipeline(config_from_dict(raw, base_dir=tmp_path))
    assert not (tmp_path / "out").exists()

    raw = synthetic_config(tmp_path)
    raw["symbols"]["SYN002"]["kind"] = "fgn"
    with pytest.raises(ConfigValidationError):
        validate_config(config_from_dict(raw, base_dir=tmp_path))

    raw = synthetic_config(tmp_path)
    raw["symbols"]["SYN003"]["params"] = {"mu": 0.24}
    with pytest.raises(ConfigValidationError):
        validate_config(config_from_dict(raw, base_dir=tmp_path))

    with pytest.raises(ConfigValidationError):
        config_from_dict({"fit": {"bins": 20}, "symbols": {}})
    with pytest.raises(ConfigValidationError):
        validate_config(config_from_dict(synthetic_config(tmp_path, classes=["all", "mid"]), base_dir=tmp_path))


def test_shipped_config_is_valid():
    path = Path(__file__).parents[1] / "config.toml"
    config = config_from_dict(tomllib.loads(path.read_text()), path.parent)
    validate_config(config)
    assert config.fractal.q_grid == DEFAULT_Q_GRID
    assert config.fit.bins_per_decade == 20


def test_config_hash_tracks_content(tmp_path):
    a = config_from_dict(synthetic_config(tmp_path), base_dir=tmp_path)
    b = config_from_dict(synthetic_config(tmp_path), base_dir=tmp_path)
    c = config_from_dict(synthetic_config(tmp_path, seed=8), base_dir=tmp_path)
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)
    assert config_hash(with_output_dir(a, tmp_path / "elsewhere")) == config_hash(a)


def test_resolve_workers(monkeypatch):
    monkeypatch.delenv(WORKERS_ENV, raising=False)
    assert resolve_workers() == 1
    assert resolve_workers(4) == 4
    monkeypatch.setenv(WORKERS_ENV, "3")
    assert resolve_workers() == 3
    monkeypatch.setenv(WORKERS_ENV, "many")
    with pytest.raises(ConfigValidationError):
        resolve_workers()


def test_identities_on_two_sided_stream():
    events = two_sided_stream(seed=3)
    buy, sell = split_by_direction(events)
    n_days = events.trading_days()
    summaries = {
        cls: summarize(compute_durations(stream, cls), n_days)
        for cls, stream in zip(CLASSES, (events, buy, sell))
    }
    checks = validate_identities(summaries)
    assert {name: check["status"] for name, check in checks.items()} == {
        "N": "pass",
        "N0": "pass",
        "mean_buy": "pass",
        "mean_sell": "pass",
    }
    assert checks["N"]["lhs"] == len(events)

    with pytest.raises(IncompleteInputError):
        validate_identities({"all": summaries["all"], "buy": summaries["buy"]})
